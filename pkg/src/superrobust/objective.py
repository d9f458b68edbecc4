"""Residual penalty families and the total fitting objective."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .transforms import CONSISTENCY_RTOL, Experiment, Transform, residuals


@dataclass(frozen=True)
class Lp:
    """``x ** p`` with ``0 ** p`` taken as 0."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"Lp exponent must lie in (0, 1], got {self.p}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x > 0.0, np.power(x, self.p), 0.0)

    def spec(self) -> str:
        return f"lp:{self.p:g}"


@dataclass(frozen=True)
class L0:
    """Indicator of a residual above ``tol``."""

    tol: float = 1e-9

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("L0 tolerance must be positive")

    def __call__(self, x):
        return np.where(np.asarray(x, dtype=float) > self.tol, 1.0, 0.0)

    def spec(self) -> str:
        return f"l0:{self.tol:g}"


@dataclass(frozen=True)
class SRPiecewise:
    """``x ** p`` above ``k * p`` and a matched ``C * x ** q`` below it.

    ``C = (k p) ** (p - q)`` makes the two branches meet at ``x = k p``;
    the lower branch is convex for ``q >= 1``, which keeps small-``p`` fits
    well behaved near exact observations.
    """

    p: float
    q: float = 2.0
    k: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"SR exponent p must lie in (0, 1), got {self.p}")
        if not self.q >= 1.0:
            raise ValueError("SR exponent q must be >= 1")
        if not self.k > 0.0:
            raise ValueError("SR knot constant k must be positive")

    @property
    def knot(self) -> float:
        return self.k * self.p

    @property
    def log_c(self) -> float:
        return (self.p - self.q) * math.log(self.knot)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            logx = np.log(np.where(x > 0.0, x, 1.0))
            upper = np.exp(self.p * logx)
            lower = np.exp(self.log_c + self.q * logx)
        out = np.where(x >= self.knot, upper, lower)
        return np.where(x > 0.0, out, 0.0)

    def spec(self) -> str:
        return f"sr:{self.p:g},{self.q:g},{self.k:g}"


PenaltyFamily = Union[Lp, L0, SRPiecewise]


def penalty(family: PenaltyFamily, x):
    """Evaluate ``family`` at residual(s) ``x``; scalars in, scalars out."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise ValueError("penalty is only defined for nonnegative residuals")
    out = family(arr)
    return float(out) if out.ndim == 0 else out


def snap_exact(res: np.ndarray, outputs: np.ndarray, rtol: float = CONSISTENCY_RTOL) -> np.ndarray:
    """Zero the residuals of pairs that fit to within ``rtol * (1 + |O|)``.

    Without this, round-off residuals near 1e-16 cost ``1e-16 ** p`` each,
    which is about 0.5 at ``p = 0.02``, so exact fits would count almost
    like outliers.  ``rtol = 0`` disables the snap.
    """
    if rtol <= 0.0:
        return res
    limit = rtol * (1.0 + np.linalg.norm(outputs, axis=-1))
    return np.where(res <= limit, 0.0, res)


def objective_value(
    exp: Experiment, t: Transform, family: PenaltyFamily, exact_rtol: float = CONSISTENCY_RTOL
) -> float:
    """Sum of per-pair penalties of ``t`` over the experiment.

    Residuals within the exact-fit tolerance count as zero; pass
    ``exact_rtol=0`` for the raw sum.
    """
    return float(np.sum(family(snap_exact(residuals(exp, t), exp.outputs, exact_rtol))))


def parse_family(text: str) -> PenaltyFamily:
    """Parse ``lp:<p>``, ``l0:<tol>`` or ``sr:<p>,<q>,<k>``."""
    kind, _, args = text.strip().partition(":")
    kind = kind.lower()
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise ValueError(f"bad numeric argument in family spec {text!r}") from None
    if kind == "lp" and len(values) == 1:
        return Lp(values[0])
    if kind == "l0" and len(values) <= 1:
        return L0(*values)
    if kind == "sr" and 1 <= len(values) <= 3:
        return SRPiecewise(*values)
    raise ValueError(f"unrecognised family spec {text!r}; expected lp:<p>, l0:<tol> or sr:<p>,<q>,<k>")
