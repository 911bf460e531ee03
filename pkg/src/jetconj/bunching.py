"""Bunching constants, admissibility checks and rescaling.

Rational constants are exact ``Fraction`` values.  Conditions involving the
real parameters ``lam`` and ``M`` are evaluated in log space because the
exponents involved (``2**(2d(d-1)**2)`` and friends) overflow any float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def stable_base(d: int) -> int:
    """``D = 2**(d-1)``."""
    return 2 ** (d - 1)


def epsilon(d: int) -> Fraction:
    """Admissible excess over the classical bunching exponent 2."""
    if d < 2:
        raise ValueError("epsilon is defined for d >= 2")
    if d == 2:
        return Fraction(1, 14)
    e = d * (d - 1) ** 2
    return Fraction(2 ** (d - 1) - 1, 2 ** (2 * e) - 2 ** e - 2 ** (d - 1) + 1)


def delta(d: int) -> Fraction:
    """``(D-1)/(D**(d(d-1)) - 1)``; zero for d = 1 by convention."""
    dd = stable_base(d)
    if d < 2:
        return Fraction(0)
    return Fraction(dd - 1, dd ** (d * (d - 1)) - 1)


def rescale_exponent(d: int) -> int:
    """``2**(3d(d-1)**2/2) - 1``, the power in the lower bound for R."""
    return 2 ** (3 * d * (d - 1) ** 2 // 2) - 1


def easy_inequality(d: int) -> bool:
    """``1/(2(2**(3d(d-1)**2/2) - 1)) >= epsilon(d)``, in exact arithmetic."""
    return Fraction(1, 2 * rescale_exponent(d)) >= epsilon(d)


def beta(lam: float, M: float) -> float:
    return math.log(M) / -math.log(lam)


@dataclass(frozen=True)
class SeriesCondition:
    ok: bool
    log_value: float


def check_series_condition(lam: float, M: float, d: int) -> SeriesCondition:
    """``(lam^2 M)**(D**(d(d-1))) * (lam M)**(-delta) < 1`` in log space."""
    if d < 2:
        return SeriesCondition(True, math.log(lam))
    power = stable_base(d) ** (d * (d - 1))
    val = power * math.log(lam * lam * M) - float(delta(d)) * math.log(lam * M)
    return SeriesCondition(val < 0, val)


def hypothesis_margin(lam: float, M: float, d: int) -> float:
    """Log of ``lam**(2+eps(d)) * M``; negative when the bunching hypothesis holds."""
    return (2 + float(epsilon(d))) * math.log(lam) + math.log(M)


@dataclass(frozen=True)
class RescalePlan:
    d: int
    lam: float
    M: float
    feasible: bool
    R: float
    log_lower: float
    log_upper: float
    margins: dict
    theta: float | None
    eta: float | None
    violation: str | None = None

    @property
    def lam_tilde(self) -> float:
        return self.R * self.lam

    @property
    def M_tilde(self) -> float:
        return self.M / self.R


def choose_rescaling(lam: float, M: float, d: int) -> RescalePlan:
    """Pick ``R`` at the log-midpoint of the feasible interval for

    * ``R > max(1, (lam^2 M)**(2**(3d(d-1)**2/2) - 1))``
    * ``R lam < 1``
    * ``R**2 lam**3 M < 1``
    """
    if not (0 < lam < 1 < M):
        raise ValueError("need 0 < lam < 1 < M")
    l2m = math.log(lam * lam * M)
    lower = max(0.0, rescale_exponent(d) * l2m) if d >= 2 else 0.0
    upper = min(-math.log(lam), -(3 * math.log(lam) + math.log(M)) / 2)
    nan = float("nan")
    if d >= 2 and hypothesis_margin(lam, M, d) >= 0:
        return RescalePlan(d, lam, M, False, nan, lower, upper, {}, None, None,
                           "bunching hypothesis violated: Lambda^(2+eps)*M >= 1")
    if not lower < upper:
        return RescalePlan(d, lam, M, False, nan, lower, upper, {}, None, None,
                           "no rescaling factor: lower bound on log R is not below the upper bound")
    log_r = 0.5 * (lower + upper)
    margins = {
        "R_above_power": log_r - rescale_exponent(d) * l2m if d >= 2 else log_r,
        "R_above_one": log_r,
        "R_lambda_below_one": -(log_r + math.log(lam)),
        "R2_lambda3_M_below_one": -(2 * log_r + 3 * math.log(lam) + math.log(M)),
    }
    # growth rate Theta > lam^2 M with eta(Theta) < 1 and Theta**E < R
    theta = eta = None
    if d >= 2:
        power = stable_base(d) ** (d * (d - 1))
        hi_t = min(float(delta(d)) * math.log(lam * M) / power, log_r / rescale_exponent(d))
        if l2m < hi_t:
            log_theta = 0.5 * (l2m + hi_t)
            theta = math.exp(log_theta)
            eta = math.exp(power * log_theta - float(delta(d)) * math.log(lam * M))
    return RescalePlan(d, lam, M, True, math.exp(log_r), lower, upper, margins, theta, eta)


@dataclass(frozen=True)
class PinchingReport:
    c_measured: float
    worst: tuple
    horizon: int
    ok: bool
    violation: str | None = None


def verify_pinched(mats, lam: float, M: float, c_max: float = math.inf) -> PinchingReport:
    """Smallest ``C`` with ``|L_{k,h}| <= C lam^(k-h)`` and
    ``|L_{k,h}^-1| <= C M^(k-h)`` over ``0 <= h <= k <= len(mats)``.

    Spectral norms.  Products are renormalised each step with the scale kept
    in log form, so long horizons do not overflow.
    """
    n = len(mats)
    if n == 0:
        return PinchingReport(1.0, (0, 0), 0, 1.0 <= c_max)
    L = np.asarray(mats)
    d = L.shape[1]
    Linv = np.linalg.inv(L)
    fwd = np.broadcast_to(np.eye(d, dtype=L.dtype), (n, d, d)).copy()
    bwd = fwd.copy()
    logf = np.zeros(n)
    logb = np.zeros(n)
    best, worst = 0.0, (0, 0)
    for g in range(1, n + 1):
        m = n - g + 1
        fwd = L[g - 1:g - 1 + m] @ fwd[:m]
        bwd = bwd[:m] @ Linv[g - 1:g - 1 + m]
        nf = np.linalg.norm(fwd, ord=2, axis=(1, 2))
        nb = np.linalg.norm(bwd, ord=2, axis=(1, 2))
        fwd /= nf[:, None, None]
        bwd /= nb[:, None, None]
        logf = logf[:m] + np.log(nf)
        logb = logb[:m] + np.log(nb)
        cf = logf - g * math.log(lam)
        cb = logb - g * math.log(M)
        both = np.maximum(cf, cb)
        h = int(np.argmax(both))
        if both[h] > best:
            best, worst = float(both[h]), (h + g, h)
    c = math.exp(best)
    ok = c <= c_max
    msg = None if ok else f"pinching constant {c:.4g} exceeds {c_max:.4g} at (k, h) = {worst}"
    return PinchingReport(c, worst, n, ok, msg)
