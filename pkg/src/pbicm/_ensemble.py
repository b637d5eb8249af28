"""Reduction of (base channel, labeling) pairs to weighted output grids.

Every information quantity in this package is an expectation (or integral)
over channel outputs.  For a Dmc the output alphabet is finite and exact.
For AWGN a universal Gauss-Hermite grid is used: nodes centered at every
constellation symbol approximate integrals against the uniform-input output
density, and importance weights turn node sums into plain dy-integrals.
Rayleigh-with-CSI adds an outer Gauss-Laguerre expectation over the fading
power |h|^2; the fading phase is folded out exactly (rotating y and h
together leaves every conditional quantity unchanged because the noise is
circularly symmetric), so each Laguerre node is an AWGN-like snapshot with
symbols scaled by |h|.

A "snapshot" is one such conditional channel: log-density rows per label,
integration weights, and a probability weight.  Sub-channel densities are
averages of label subsets of the rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.laguerre import laggauss

from .channel import Awgn, ChannelModel, Dmc, RayleighCsi
from .constellation import Constellation
from .subchannel import label_sets

GH_NODES = 32  # Gauss-Hermite nodes per real dimension
GL_NODES = 64  # Gauss-Laguerre nodes on |h|^2
CONVERGENCE_TOL = 1e-4  # node-doubling acceptance gate
_MAX_DOUBLINGS = 3  # escalation cap before giving up

LN2 = np.log(2.0)


class QuadratureConvergenceError(RuntimeError):
    """Raised when doubling the quadrature nodes moves a result beyond tolerance."""


@dataclass
class Snapshot:
    weight: float
    int_w: np.ndarray  # (K,) weights turning node sums into output integrals
    log_sub: np.ndarray  # (L, 2, K) log sub-channel densities
    log_mary: np.ndarray | None  # (m, K) log base densities by label


@dataclass
class Ensemble:
    cons: Constellation
    snapshots: list[Snapshot]

    @property
    def L(self) -> int:
        return self.cons.L


def _dmc_snapshot(base: Dmc, cons: Constellation, need_mary: bool) -> Snapshot:
    rows = base.matrix[cons.labels]  # (m, ny), row b = label b
    sets = label_sets(cons.L)
    sub = rows[sets]  # (L, 2, m/2, ny)
    with np.errstate(divide="ignore"):
        log_sub = np.log(sub.mean(axis=2))
        log_mary = np.log(rows) if need_mary else None
    return Snapshot(1.0, np.ones(base.ny), log_sub, log_mary)


def _awgn_snapshot(sym: np.ndarray, n0: float, gh: int, need_mary: bool, weight: float) -> Snapshot:
    t, w = hermgauss(gh)
    m = sym.size
    dz = np.sqrt(n0) * (t[:, None] + 1j * t[None, :]).ravel()
    nodes = (sym[:, None] + dz[None, :]).ravel()  # (m * gh^2,)
    gh_w = (w[:, None] * w[None, :]).ravel() / np.pi
    gh_w = gh_w / gh_w.sum()  # one symbol's grid integrates its density to 1
    base_w = np.tile(gh_w, m) / m
    log_mary = -np.abs(nodes[None, :] - sym[:, None]) ** 2 / n0 - np.log(np.pi * n0)
    # log of the uniform-mixture output density, then importance weights
    peak = log_mary.max(axis=0)
    log_pbar = peak + np.log(np.exp(log_mary - peak[None, :]).mean(axis=0))
    int_w = np.exp(np.log(base_w) - log_pbar)
    sets = label_sets(int(np.log2(m)))
    grp = log_mary[sets]  # (L, 2, m/2, K)
    gpeak = grp.max(axis=2)
    log_sub = gpeak + np.log(np.exp(grp - gpeak[:, :, None, :]).mean(axis=2))
    return Snapshot(weight, int_w, log_sub, log_mary if need_mary else None)


def iter_snapshots(
    base: ChannelModel, cons: Constellation, gh: int, gl: int, need_mary: bool
) -> Iterator[Snapshot]:
    """Yield the conditional-channel snapshots of (base, cons) one at a time."""
    if isinstance(base, Dmc):
        if base.nx != cons.m:
            raise ValueError("Dmc input count must equal 2**L")
        yield _dmc_snapshot(base, cons, need_mary)
        return
    if isinstance(base, Awgn):
        yield _awgn_snapshot(cons.symbols, base.n0, gh, need_mary, 1.0)
        return
    tt, ww = laggauss(gl)
    ww = ww / ww.sum()  # E over |h|^2 ~ Exp(1)
    for t, w in zip(tt, ww):
        yield _awgn_snapshot(np.sqrt(t) * cons.symbols, base.n0, gh, need_mary, float(w))


# ---------------------------------------------------------------------------
# Streaming information-density moments (first and second, bits) with a
# node-doubling convergence gate for continuous channels.
# ---------------------------------------------------------------------------


def _snapshot_sub_moments(snap: Snapshot) -> tuple[np.ndarray, np.ndarray]:
    """Per-sub-channel (E[i], E[i^2]) for one finite-output snapshot, bits."""
    d = np.exp(snap.log_sub)  # (L, 2, K)
    p = d.mean(axis=1)  # (L, K)
    with np.errstate(divide="ignore", invalid="ignore"):
        i = (snap.log_sub - np.log(p)[:, None, :]) / LN2
    mass = np.where(d > 0, d, 0.0) * snap.int_w[None, None, :] * 0.5
    i = np.where(d > 0, i, 0.0)
    m1 = (mass * i).sum(axis=(1, 2))
    m2 = (mass * i * i).sum(axis=(1, 2))
    return m1, m2


def _snapshot_mary_moments(snap: Snapshot) -> tuple[float, float]:
    ld = snap.log_mary
    d = np.exp(ld)
    peak = ld.max(axis=0)
    log_pbar = peak + np.log(np.exp(ld - peak[None, :]).mean(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        i = (ld - log_pbar[None, :]) / LN2
    mass = np.where(d > 0, d, 0.0) * snap.int_w[None, :] / ld.shape[0]
    i = np.where(d > 0, i, 0.0)
    return float((mass * i).sum()), float((mass * i * i).sum())


def _awgn_moment_pass(sym: np.ndarray, n0: float, gh: int, mary: bool, weight, m1, m2, cm):
    """Accumulate moments for one AWGN view, one conditioning symbol at a time.

    Expectations conditioned on symbol j are integrated on j's own grid with
    plain Gauss-Hermite weights (the conditional density is the grid's weight
    function, so the integrand is just the information density); this is far
    tighter than reusing the importance-weighted union grid, and streaming
    blocks keeps memory at m x gh^2 regardless of node escalation.
    """
    t, w = hermgauss(gh)
    wk = (w[:, None] * w[None, :]).ravel() / np.pi
    wk = wk / wk.sum()
    dz = np.sqrt(n0) * (t[:, None] + 1j * t[None, :]).ravel()
    m = sym.size
    L = int(np.log2(m))
    sets = label_sets(L)
    arangeL = np.arange(L)
    lab_bits = (np.arange(m)[:, None] >> (L - 1 - arangeL)[None, :]) & 1  # (m, L)
    for j in range(m):
        nodes = sym[j] + dz
        lm = -np.abs(nodes[None, :] - sym[:, None]) ** 2 / n0 - np.log(np.pi * n0)
        grp = lm[sets]  # (L, 2, m/2, kg)
        gpeak = grp.max(axis=2)
        lsub = gpeak + np.log(np.exp(grp - gpeak[:, :, None, :]).mean(axis=2))
        lps = np.logaddexp(lsub[:, 0], lsub[:, 1]) - LN2  # (L, kg)
        isel = (lsub[arangeL, lab_bits[j]] - lps) / LN2  # i of bit value sent
        m1 += weight * (isel @ wk) / m
        m2 += weight * ((isel * isel) @ wk) / m
        if mary:
            peak = lm.max(axis=0)
            lpbar = peak + np.log(np.exp(lm - peak[None, :]).mean(axis=0))
            io = (lm[j] - lpbar) / LN2
            cm += weight * np.array([io @ wk, (io * io) @ wk]) / m


def _moment_pass(base, cons, gh, gl, mary: bool):
    L = cons.L
    m1 = np.zeros(L)
    m2 = np.zeros(L)
    cm = np.zeros(2)
    if isinstance(base, Dmc):
        snap = _dmc_snapshot(base, cons, mary)
        m1, m2 = _snapshot_sub_moments(snap)
        if mary:
            cm = np.array(_snapshot_mary_moments(snap))
        return m1, m2, cm
    if isinstance(base, Awgn):
        _awgn_moment_pass(cons.symbols, base.n0, gh, mary, 1.0, m1, m2, cm)
        return m1, m2, cm
    tt, ww = laggauss(gl)
    ww = ww / ww.sum()  # E over |h|^2 ~ Exp(1)
    for t, w in zip(tt, ww):
        _awgn_moment_pass(np.sqrt(t) * cons.symbols, base.n0, gh, mary, float(w), m1, m2, cm)
    return m1, m2, cm


def moment_table(
    base: ChannelModel, cons: Constellation, *, mary: bool = False, gh: int = GH_NODES, gl: int = GL_NODES
):
    """Sub-channel information moments (and optionally full-input moments).

    Returns ``(m1, m2, cm)`` where ``m1[s-1]`` is the sub-channel capacity
    C(W_s) in bits, ``m2[s-1]`` the second moment of its information
    density, and ``cm = (E[i], E[i^2])`` for the full equiprobable input if
    requested.  Continuous channels are gated by node doubling: starting from
    the base node counts, all counts double until two successive passes agree
    within ``CONVERGENCE_TOL`` (the finer result is returned), with at most
    ``_MAX_DOUBLINGS`` escalations before ``QuadratureConvergenceError``.
    """
    res = _moment_pass(base, cons, gh, gl, mary)
    if isinstance(base, Dmc):
        return res
    worst = np.inf
    for _ in range(_MAX_DOUBLINGS):
        gh, gl = 2 * gh, 2 * gl
        fine = _moment_pass(base, cons, gh, gl, mary)
        worst = max(
            float(np.max(np.abs(res[0] - fine[0]))),
            float(np.max(np.abs(res[1] - fine[1]))),
            float(np.max(np.abs(res[2] - fine[2]))) if mary else 0.0,
        )
        res = fine
        if worst <= CONVERGENCE_TOL:
            return res
    raise QuadratureConvergenceError(
        f"node-doubling check failed: max shift {worst:.3e} > {CONVERGENCE_TOL:g}"
    )


# ---------------------------------------------------------------------------
# Cached stored ensembles for repeated E0 evaluation.
# ---------------------------------------------------------------------------

_CACHE: dict[tuple, Ensemble] = {}
_CACHE_MAX = 4


def _channel_key(base: ChannelModel) -> tuple:
    if isinstance(base, Dmc):
        return ("dmc", base.matrix.shape, base.matrix.tobytes())
    if isinstance(base, Awgn):
        return ("awgn", base.n0)
    return ("ray", base.n0)


def _cons_key(cons: Constellation) -> tuple:
    return (cons.name, cons.L, cons.points.tobytes(), cons.labels.tobytes())


def get_ensemble(
    base: ChannelModel, cons: Constellation, *, mary: bool = False, gh: int = GH_NODES, gl: int = GL_NODES
) -> Ensemble:
    """Stored snapshot collection for (base, cons), value-cached."""
    key = (_channel_key(base), _cons_key(cons), mary, gh, gl)
    ens = _CACHE.get(key)
    if ens is None:
        ens = Ensemble(cons, list(iter_snapshots(base, cons, gh, gl, mary)))
        if len(_CACHE) >= _CACHE_MAX:
            _CACHE.pop(next(iter(_CACHE)))
        _CACHE[key] = ens
    return ens
