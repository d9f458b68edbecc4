"""Closed-form robustness bounds for the Lp location estimator.

Sorted noise distances ``d_1 < ... < d_M`` are split at the rival offset
``d_T`` into a first group (``d_i <= d_T``) and a second group
(``d_i > d_T``).  The functions here bound each group's contribution to
the objective difference, normalised by ``d_T ** p``, and combine the
bounds into the inlier-to-outlier ratio ``n/M`` that guarantees the true
transform wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

DEFAULT_TARGET = 0.999


class InfeasibleBoundError(ValueError):
    """No admissible exponent satisfies the requested confidence."""


@dataclass(frozen=True)
class BoundParams:
    M: int
    a: float
    p: float
    d_T: float = 1.0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be a positive integer")
        if not 0.5 < self.a < 1.0:
            raise ValueError("concentration exponent a must lie in (0.5, 1)")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if not self.d_T > 0.0:
            raise ValueError("d_T must be positive")


def concentration_probability(M: int, a: float) -> float:
    """Lower bound on P(all sorted uniforms lie within ``M**(a-1)`` of ``i/M``).

    Each order statistic gets a two-sided Hoeffding tail
    ``2 exp(-2 M**(2a-1))``; the joint bound is the per-index bound to the
    power ``M``.
    """
    tail = 2.0 * math.exp(-2.0 * M ** (2.0 * a - 1.0))
    if tail >= 1.0:
        return 0.0
    return math.exp(M * math.log1p(-tail))


def confidence_threshold(M: int, target: float = DEFAULT_TARGET) -> float:
    """Unrounded exponent at which :func:`concentration_probability` reaches ``target``."""
    if M < 2:
        raise ValueError("M must be at least 2")
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie in (0, 1)")
    lo, hi = 0.5, 1.0 - 1e-12
    if concentration_probability(M, hi) < target:
        raise InfeasibleBoundError(f"no a < 1 reaches {target} for M={M}")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if concentration_probability(M, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def min_confidence_exponent(M: int, target: float = DEFAULT_TARGET, decimals: int = 3) -> float:
    """Smallest concentration exponent ``a`` reaching ``target``, rounded to ``decimals``.

    Rounding is to nearest, so the returned value lies within half a unit
    of the exact threshold and may sit marginally below it.

    >>> min_confidence_exponent(1000)
    0.643
    """
    return round(confidence_threshold(M, target), decimals)


def tfg_bound_uniform(M: int, a: float) -> float:
    """First-group bound ``2 M**a`` for uniformly distributed distances."""
    return 2.0 * M ** a


def tsg_bound_uniform(M: int, a: float, p: float, d_T: float) -> float:
    """Second-group bound for uniform distances at rival offset ``d_T``."""
    BoundParams(M, a, p, d_T)
    head = M + 1.0 - M ** a
    return head ** p * d_T ** (1.0 - p) - d_T / (1.0 + p) + M ** a


def tsg_maximizer(M: int, a: float, p: float) -> float:
    """The ``d_T`` at which :func:`tsg_bound_uniform` peaks.

    Setting the derivative to zero gives ``(1 - p**2) ** (1/p) * (M + 1 - M**a)``.
    The often-quoted ``(1 - p**2) ** (1/p) * M`` is the large-``M``
    approximation of this.
    """
    BoundParams(M, a, p)
    return (1.0 - p * p) ** (1.0 / p) * (M + 1.0 - M ** a)


def tsg_max_uniform(M: int, a: float, p: float) -> float:
    BoundParams(M, a, p)
    return p * (1.0 - p * p) ** ((1.0 - p) / p) * (M + 1.0 - M ** a) + M ** a


def breakdown_ratio(p: float, M: int = 1000, a: float = 0.643) -> float:
    """Sufficient inlier-to-outlier ratio ``n/M`` for the true offset to win."""
    return (tfg_bound_uniform(M, a) + tsg_max_uniform(M, a, p)) / M


CDF = Callable[[float], float]


def tfg_bound_general(F: CDF, d_T: float, p: float, M: int) -> float:
    """First-group bound when distances follow an arbitrary CDF ``F``."""
    if not d_T > 0.0:
        raise ValueError("d_T must be positive")
    half = 2.0 ** -p
    return (
        (F(d_T) - F(0.75 * d_T)) * M
        - F(0.25 * d_T) * M * half
        + (F(0.75 * d_T) - F(0.5 * d_T)) * M * half
    )


def tsg_bound_general(F: CDF, d_T: float, p: float, M: int) -> float:
    """Second-group bound for an arbitrary CDF ``F``, by the mass ``F(d_T)``."""
    if not d_T > 0.0:
        raise ValueError("d_T must be positive")
    mass = F(d_T)
    if mass > 0.5:
        return M * (1.0 - mass)
    if mass >= 0.25:
        c = 1.5 ** p - 0.5 ** p
        return c * (1.0 - F(1.5 * d_T)) * M + (F(1.5 * d_T) - mass) * M
    m = math.floor(1.0 / d_T)
    total = 0.0
    for i in range(1, m):
        total += ((i + 1) ** p - i ** p) * (F((i + 1) * d_T) - F(i * d_T)) * M
    return total + (1.0 - F(m * d_T)) * M + (F(2.0 * d_T) - mass) * M


def uniform_cdf(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def power_cdf(K: float) -> CDF:
    """CDF ``x ** (K + 1)`` on ``[0, 1]``: the distance law of a uniform error vector."""
    def F(x: float) -> float:
        return min(max(x, 0.0), 1.0) ** (K + 1.0)
    return F


def a_table(Ms: Iterable[int] = range(100, 1001, 100), target: float = DEFAULT_TARGET):
    return [(M, min_confidence_exponent(M, target)) for M in Ms]


def breakdown_table(ps: Iterable[float] | None = None, M: int = 1000, a: float | None = None):
    if ps is None:
        ps = [round(0.05 * k, 2) for k in range(10, 0, -1)]
    if a is None:
        a = min_confidence_exponent(M)
    return [(p, breakdown_ratio(p, M, a)) for p in ps]
