"""Capacity, error exponents, dispersion and finite-blocklength rate bounds.

All information quantities are in bits (log base 2).  The parallel scheme
turns L sub-channels into one randomized binary channel (the combined view): its E0 is
the soft combine

    E0(rho) = -log2( (1/L) * sum_s 2**-E0_s(rho) )

over the per-sub-channel Gallager functions; the historical per-state
arithmetic average of E0_s values is also provided (the averaged kind) and
always overestimates the combined value by Jensen's inequality.  Error
exponents of the parallel scheme at total rate R are the binary-channel
exponents at R/L, optionally normalized by L to compare against the
unconstrained channel exponent on a per-channel-use axis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfc, erfcinv

from . import kernels
from ._ensemble import (
    Ensemble,
    QuadratureConvergenceError,
    get_ensemble,
    moment_table,
)
from ._opt import RHO_MAX, exponent_max
from .channel import ChannelModel
from .constellation import Constellation

__all__ = [
    "capacity_subchannel",
    "capacity_pbicm",
    "capacity_cm",
    "E0Evaluator",
    "e0_evaluator",
    "e0",
    "random_coding_exponent",
    "sphere_packing_exponent",
    "pbicm_exponent",
    "critical_rate",
    "DispersionReport",
    "dispersion_report",
    "rate_bounds",
    "exponent_gaussian_approx",
    "ExponentCurve",
    "exponent_curve",
    "qfunc",
    "qinv",
    "QuadratureConvergenceError",
]

E0_KINDS = ("Subchannel", "WbarCombined", "WachsmannAveraged", "Unconstrained")
_E0_ALIASES = {
    "subchannel": "Subchannel",
    "wbar": "WbarCombined",
    "wachsmann": "WachsmannAveraged",
    "unconstrained": "Unconstrained",
}
CURVE_KINDS = (
    "RandomCoding",
    "SpherePacking",
    "PbicmRandomCoding",
    "PbicmNormalized",
    "UnconstrainedRandomCoding",
)

_MOMENTS_CACHE: dict[tuple, tuple] = {}


def _moments(base: ChannelModel, cons: Constellation, mary: bool):
    from ._ensemble import _channel_key, _cons_key

    key = (_channel_key(base), _cons_key(cons), mary)
    out = _MOMENTS_CACHE.get(key)
    if out is None:
        out = moment_table(base, cons, mary=mary)
        if len(_MOMENTS_CACHE) > 16:
            _MOMENTS_CACHE.pop(next(iter(_MOMENTS_CACHE)))
        _MOMENTS_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# Capacities
# ---------------------------------------------------------------------------


def capacity_subchannel(base: ChannelModel, cons: Constellation, s: int) -> float:
    """C(W_s) in bits for sub-channel s (1-based)."""
    if not 1 <= s <= cons.L:
        raise ValueError(f"sub-channel index must be in 1..{cons.L}")
    return float(_moments(base, cons, False)[0][s - 1])


def capacity_pbicm(base: ChannelModel, cons: Constellation) -> float:
    """Achievable sum rate of the parallel scheme: sum_s C(W_s), bits/use."""
    return float(_moments(base, cons, False)[0].sum())


def capacity_cm(base: ChannelModel, cons: Constellation) -> float:
    """Coded-modulation capacity I(X;Y) with equiprobable symbols, bits/use."""
    return float(_moments(base, cons, True)[2][0])


# ---------------------------------------------------------------------------
# Gallager E0 evaluators
# ---------------------------------------------------------------------------


def _sub_integrals(ens: Ensemble, rho: float) -> np.ndarray:
    """2**-E0_s(rho) for every sub-channel, from the stored ensemble."""
    cache = ens.__dict__.setdefault("_sub_cache", {})
    v = cache.get(rho)
    if v is None:
        L = ens.L
        v = np.zeros(L)
        for snap in ens.snapshots:
            for s in range(L):
                v[s] += snap.weight * kernels.e0_binary_integral(
                    snap.log_sub[s, 0], snap.log_sub[s, 1], snap.int_w, rho
                )
        cache[rho] = v
    return v


def _mary_integral(ens: Ensemble, rho: float) -> float:
    cache = ens.__dict__.setdefault("_mary_cache", {})
    v = cache.get(rho)
    if v is None:
        v = 0.0
        for snap in ens.snapshots:
            v += snap.weight * kernels.e0_mary_integral(snap.log_mary, snap.int_w, rho)
        cache[rho] = v
    return v


@dataclass
class E0Evaluator:
    """Memoized E0(rho) for one of the four channel views.

    kind "Subchannel" (requires s): one binary sub-channel.
    kind "WbarCombined": the randomized binary channel (soft combine over
    states).
    kind "WachsmannAveraged": arithmetic mean of sub-channel E0 values
    (historical, an upper bound on the combined value).
    kind "Unconstrained": the base channel with equiprobable symbols.
    Lowercase short aliases (subchannel/wbar/wachsmann/unconstrained) are
    accepted and normalized.
    """

    base: ChannelModel
    cons: Constellation
    kind: str
    s: int | None = None
    _ens: Ensemble = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.kind = _E0_ALIASES.get(self.kind, self.kind)
        if self.kind not in E0_KINDS:
            raise ValueError(f"kind must be one of {E0_KINDS}")
        if self.kind == "Subchannel":
            if self.s is None or not 1 <= self.s <= self.cons.L:
                raise ValueError("Subchannel kind requires s in 1..L")
        elif self.s is not None:
            raise ValueError("s is only valid for the Subchannel kind")
        object.__setattr__(
            self, "_ens", get_ensemble(self.base, self.cons, mary=self.kind == "Unconstrained")
        )

    def e0(self, rho: float) -> float:
        rho = float(rho)
        if not 0.0 <= rho <= RHO_MAX:
            raise ValueError(f"rho must be in [0, {RHO_MAX:g}]")
        v = self._cache.get(rho)
        if v is None:
            v = self._eval(rho)
            self._cache[rho] = v
        return v

    def _eval(self, rho: float) -> float:
        if self.kind == "Unconstrained":
            return -math.log2(_mary_integral(self._ens, rho))
        ints = _sub_integrals(self._ens, rho)
        if self.kind == "Subchannel":
            return -math.log2(ints[self.s - 1])
        if self.kind == "WbarCombined":
            return -math.log2(ints.mean())
        return float(np.mean(-np.log2(ints)))  # WachsmannAveraged


def e0_evaluator(base: ChannelModel, cons: Constellation, kind: str, s: int | None = None) -> E0Evaluator:
    return E0Evaluator(base, cons, kind, s)


def e0(ev: E0Evaluator, rho: float) -> float:
    return ev.e0(rho)


# ---------------------------------------------------------------------------
# Error exponents
# ---------------------------------------------------------------------------


def random_coding_exponent(ev: E0Evaluator, rate: float) -> float:
    """max_{rho in [0,1]} E0(rho) - rho*rate, bits; zero for rate >= capacity."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    return exponent_max(ev.e0, rate, sphere=False)


def sphere_packing_exponent(ev: E0Evaluator, rate: float) -> float:
    """sup_{rho > 0} E0(rho) - rho*rate, bits; +inf below the cap-attaining rate."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    return exponent_max(ev.e0, rate, sphere=True)


def critical_rate(ev: E0Evaluator) -> float:
    """Rate below which the random-coding bound departs from sphere packing.

    Computed as dE0/drho at rho = 1 by a central finite difference.
    """
    h = 1e-5
    return (ev.e0(1.0 + h) - ev.e0(1.0 - h)) / (2 * h)


def pbicm_exponent(
    base: ChannelModel,
    cons: Constellation,
    rate_total: float,
    bound: str = "RandomCoding",
    normalized: bool = False,
) -> float:
    """Error exponent of the parallel scheme at total rate (bits/channel use).

    Equals the chosen binary-channel exponent at rate_total/L; with
    ``normalized=True`` the value is multiplied by L (exponent per binary
    code symbol rather than per channel use).
    """
    if rate_total < 0:
        raise ValueError("rate must be nonnegative")
    ev = e0_evaluator(base, cons, "WbarCombined")
    fn = {
        "RandomCoding": random_coding_exponent,
        "random_coding": random_coding_exponent,
        "SpherePacking": sphere_packing_exponent,
        "sphere_packing": sphere_packing_exponent,
    }.get(bound)
    if fn is None:
        raise ValueError("bound must be 'RandomCoding' or 'SpherePacking'")
    v = fn(ev, rate_total / cons.L)
    return cons.L * v if normalized else v


# ---------------------------------------------------------------------------
# Dispersion and finite-blocklength rate bounds
# ---------------------------------------------------------------------------


@dataclass
class DispersionReport:
    """Second-order statistics of the sub-channels and the parallel scheme.

    ``v_wbar`` is the dispersion of the randomized binary channel; it always
    decomposes as ``mean_subchannel_v + penalty`` where the penalty
    is the variance of the sub-channel capacities (the price of state
    randomization).  ``v_pbicm = L**2 * v_wbar`` is the dispersion governing
    the total rate of the parallel scheme.
    """

    L: int
    c_subchannels: list[float]
    v_subchannels: list[float]
    c_wbar: float
    c_pbicm: float
    v_wbar: float
    v_pbicm: float
    mean_subchannel_v: float
    penalty: float

    @property
    def per_subchannel(self) -> list[tuple[float, float]]:
        """(capacity, dispersion) pairs, one per sub-channel."""
        return list(zip(self.c_subchannels, self.v_subchannels))

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


def dispersion_report(base: ChannelModel, cons: Constellation) -> DispersionReport:
    m1, m2, _ = _moments(base, cons, False)
    c_sub = m1
    v_sub = m2 - m1 * m1
    c_wbar = float(c_sub.mean())
    v_wbar = float(m2.mean() - c_wbar * c_wbar)  # flat variance over (state, output)
    penalty = float(np.mean((c_sub - c_wbar) ** 2))
    return DispersionReport(
        L=cons.L,
        c_subchannels=[float(v) for v in c_sub],
        v_subchannels=[float(v) for v in v_sub],
        c_wbar=c_wbar,
        c_pbicm=float(c_sub.sum()),
        v_wbar=v_wbar,
        v_pbicm=float(cons.L**2 * v_wbar),
        mean_subchannel_v=float(v_sub.mean()),
        penalty=penalty,
    )


def rate_bounds(base: ChannelModel, cons: Constellation, n: int, pe: float) -> tuple[float, float]:
    """Normal-approximation bracket on the best total rate at blocklength n.

    Returns (lower, upper) in bits per channel use for target block error
    probability pe: the achievable side pays Q^{-1}(pe/L) (a union over the
    L parallel codes), the converse side Q^{-1}(pe).
    """
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    if not 0 < pe < 1:
        raise ValueError("target error probability must be in (0, 1)")
    rep = dispersion_report(base, cons)
    scale = math.sqrt(rep.v_pbicm / n)
    lower = rep.c_pbicm - scale * qinv(pe / cons.L)
    upper = rep.c_pbicm - scale * qinv(pe)
    return lower, upper


def exponent_gaussian_approx(c: float, v: float, rate: float) -> float:
    """Quadratic exponent approximation (c - rate)^2 / (2 v ln 2), bits."""
    if v <= 0:
        raise ValueError("dispersion must be positive")
    return (c - rate) ** 2 / (2.0 * v * math.log(2.0))


# ---------------------------------------------------------------------------
# Gaussian tail utilities
# ---------------------------------------------------------------------------


def qfunc(x: float) -> float:
    """Standard normal tail probability P(Z > x)."""
    return float(0.5 * erfc(x / math.sqrt(2.0)))


def qinv(eps: float) -> float:
    """Inverse of ``qfunc`` with Newton refinement on top of an erfc start.

    Relative residual |qfunc(qinv(eps)) - eps| <= 1e-12 * eps over the
    supported range (0, 1).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("argument must be in (0, 1)")
    x = math.sqrt(2.0) * float(erfcinv(2.0 * eps))
    for _ in range(2):
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if pdf == 0.0:
            break
        x += (qfunc(x) - eps) / pdf
    return x


# ---------------------------------------------------------------------------
# Exponent curves
# ---------------------------------------------------------------------------


@dataclass
class ExponentCurve:
    """Tabulated exponent-vs-rate curve; rates and values in bits."""

    kind: str
    rates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"kind must be one of {CURVE_KINDS}")
        self.rates = np.asarray(self.rates, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.rates.shape != self.values.shape or self.rates.ndim != 1:
            raise ValueError("rates and values must be 1-D and congruent")

    def to_csv(self, path: str | Path) -> None:
        lines = ["rate_bits,value_bits,kind"]
        for r, v in zip(self.rates, self.values):
            lines.append(f"{r:.9g},{v:.9g},{self.kind}")
        Path(path).write_text("\n".join(lines) + "\n")


def exponent_curve(
    base: ChannelModel, cons: Constellation, kind: str, rates: np.ndarray
) -> ExponentCurve:
    """Tabulate one exponent family over a grid of rates (bits).

    Rates are total bits per channel use for the Pbicm* and Unconstrained
    kinds, bits per binary-channel use for RandomCoding/SpherePacking.
    """
    rates = np.asarray(rates, dtype=float)
    if kind == "RandomCoding":
        ev = e0_evaluator(base, cons, "WbarCombined")
        vals = [random_coding_exponent(ev, r) for r in rates]
    elif kind == "SpherePacking":
        ev = e0_evaluator(base, cons, "WbarCombined")
        vals = [sphere_packing_exponent(ev, r) for r in rates]
    elif kind == "PbicmRandomCoding":
        vals = [pbicm_exponent(base, cons, r) for r in rates]
    elif kind == "PbicmNormalized":
        vals = [pbicm_exponent(base, cons, r, normalized=True) for r in rates]
    elif kind == "UnconstrainedRandomCoding":
        ev = e0_evaluator(base, cons, "Unconstrained")
        vals = [random_coding_exponent(ev, r) for r in rates]
    else:
        raise ValueError(f"kind must be one of {CURVE_KINDS}")
    return ExponentCurve(kind, rates, np.array(vals))
