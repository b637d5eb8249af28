"""Scalar maximization helpers for exponent computations."""
from __future__ import annotations

import math

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

RHO_MAX = 100.0  # sphere-packing search cap; maximizer at the cap => +inf


def maximize_concave(f, lo: float, hi: float, xtol: float = 1e-9) -> tuple[float, float]:
    """Golden-section maximum of a concave function on [lo, hi].

    Returns (argmax, max).  Concavity guarantees unimodality, so the
    bracket converges to the global maximum over the interval.
    """
    a, b = float(lo), float(hi)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def exponent_max(e0_fn, rate: float, sphere: bool, xtol: float = 1e-9) -> float:
    """max over rho of E0(rho) - rho*rate, clamped at 0.

    Random coding searches rho in [0, 1]; sphere packing searches (0, RHO_MAX]
    and returns +inf when the objective is still increasing at the cap.
    """

    def obj(rho: float) -> float:
        return e0_fn(rho) - rho * rate

    if sphere:
        if obj(RHO_MAX) >= obj(RHO_MAX - 1e-6):
            return math.inf
        _, v = maximize_concave(obj, 0.0, RHO_MAX, xtol)
    else:
        _, v = maximize_concave(obj, 0.0, 1.0, xtol)
    return max(0.0, v)
