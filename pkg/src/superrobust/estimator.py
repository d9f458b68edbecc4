"""Minimisers of the robust objective over a transformation group.

For ``p < 1`` the objective is concave between the data-induced candidate
transforms (each candidate fits one pair exactly), so the primary search is
an exhaustive scan of those candidates.  An optional pattern search refines
the winner for groups where the candidates need not contain the joint
minimiser.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .objective import L0, Lp, PenaltyFamily, snap_exact
from .transforms import (
    CONSISTENCY_RTOL,
    TWO_PI,
    DegenerateExperimentError,
    Experiment,
    Group,
    Transform,
    residual_matrix,
    residuals,
)

MERGE_TOL = 1e-12
TIE_RTOL = 1e-12

DEFAULT_SCHEDULE = (0.9, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05, 0.02)


@dataclass(frozen=True)
class EstimateConfig:
    """Knobs for :func:`estimate`.

    ``refine=None`` picks the per-group default: refinement only for
    per-axis scaling in two or more dimensions.  ``initial_radius`` is
    relative to ``1 + |params|`` of the starting candidate.
    """

    refine: Optional[bool] = None
    initial_radius: float = 0.05
    shrink: float = 0.5
    iterations: int = 200
    pos_tol: float = 1e-9
    agree_tol: float = 1e-9
    exact_rtol: float = CONSISTENCY_RTOL

    def refine_for(self, group: Group, dim: int) -> bool:
        if self.refine is not None:
            return self.refine
        return group is Group.NONUNIFORM_SCALING and dim >= 2


@dataclass(frozen=True)
class AnnealSchedule:
    """Decreasing ``p`` values and the stopping rule for :func:`anneal_p`.

    With ``until_consensus`` set, agreement between consecutive estimates
    only counts once the estimate fits as many pairs as the L0 consensus
    transform; otherwise two large-``p`` estimates sitting on the same
    median-like compromise would end the run before ``p`` gets small.
    """

    p_values: tuple[float, ...] = DEFAULT_SCHEDULE
    stop_stable: int = 2
    until_consensus: bool = True

    def __post_init__(self):
        p = tuple(float(v) for v in self.p_values)
        if not p:
            raise ValueError("anneal schedule needs at least one p")
        if any(not 0.0 < v < 1.0 for v in p):
            raise ValueError("anneal p values must lie in (0, 1)")
        if any(b >= a for a, b in zip(p, p[1:])):
            raise ValueError("anneal p values must be strictly decreasing")
        if self.stop_stable < 1:
            raise ValueError("stop_stable must be at least 1")
        object.__setattr__(self, "p_values", p)


@dataclass(frozen=True)
class EstimationResult:
    best: Transform
    objective: float
    pos_size: int
    candidates_evaluated: int
    refinement_steps: int = 0
    family: Optional[PenaltyFamily] = None
    # annealing diagnostics
    p_final: Optional[float] = None
    matches_l0: Optional[bool] = None
    l0_pos_size: Optional[int] = None
    trace: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        out = {
            "group": self.best.group.value,
            "params": list(self.best.params),
            "objective": self.objective,
            "pos_size": self.pos_size,
            "candidates_evaluated": self.candidates_evaluated,
            "refinement_steps": self.refinement_steps,
        }
        if self.family is not None:
            out["family"] = self.family.spec()
        if self.p_final is not None:
            out["p_final"] = self.p_final
            out["matches_l0"] = self.matches_l0
            out["l0_pos_size"] = self.l0_pos_size
            out["trace"] = [{"p": p, "params": list(params)} for p, params in self.trace]
        return out


def _candidate_params(exp: Experiment, group: Group) -> np.ndarray:
    I, O = exp.inputs, exp.outputs
    if group is Group.TRANSLATION:
        return O - I
    if group is Group.UNIFORM_SCALING:
        ni = np.linalg.norm(I, axis=1)
        no = np.linalg.norm(O, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (no / ni)[:, None]
    if group is Group.NONUNIFORM_SCALING:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(O / I)
    if exp.dim != 2:
        raise DegenerateExperimentError("rotation needs 2-D observations")
    ang = np.arctan2(O[:, 1], O[:, 0]) - np.arctan2(I[:, 1], I[:, 0])
    ang = np.mod(ang, TWO_PI)
    ang[ang >= TWO_PI] = 0.0
    return ang[:, None]


def _merge(params: np.ndarray, group: Group, chunk: int = 1024) -> np.ndarray:
    """Drop rows within ``MERGE_TOL`` of an earlier row, keeping first occurrences."""
    n = len(params)
    dup = np.zeros(n, dtype=bool)
    for start in range(0, n, chunk):
        block = params[start:start + chunk]
        diff = np.abs(block[:, None, :] - params[None, :start + len(block), :])
        if group is Group.ROTATION2D:
            diff = np.minimum(diff, TWO_PI - diff)
        close = np.max(diff, axis=2) <= MERGE_TOL
        # only earlier rows count
        rows = np.arange(start, start + len(block))
        close &= np.arange(start + len(block))[None, :] < rows[:, None]
        dup[rows] = close.any(axis=1)
    return params[~dup]


def _valid_rows(params: np.ndarray, group: Group) -> np.ndarray:
    ok = np.all(np.isfinite(params), axis=1)
    if group in (Group.UNIFORM_SCALING, Group.NONUNIFORM_SCALING):
        ok &= np.all(params > 0.0, axis=1)
    return params[ok]


def candidate_params(exp: Experiment, group: "Group | str") -> np.ndarray:
    """Candidate parameter vectors as a ``(C, n_params)`` array, in pair order."""
    group = Group.parse(group)
    if len(exp) == 0:
        raise DegenerateExperimentError("experiment has no observation pairs")
    params = _merge(_valid_rows(_candidate_params(exp, group), group), group)
    if len(params) == 0:
        raise DegenerateExperimentError(f"no admissible {group.value} candidates")
    return params


def candidate_transforms(exp: Experiment, group: "Group | str") -> list[Transform]:
    """Transforms that fit at least one pair exactly, duplicates merged."""
    group = Group.parse(group)
    return [Transform(group, tuple(row)) for row in candidate_params(exp, group)]


def _select(scores: np.ndarray, norms: np.ndarray, lower_is_better: bool = True) -> int:
    """Index of the winner: best score, then smallest norm, then lowest index."""
    s = scores if lower_is_better else -scores
    best = s.min()
    tied = np.flatnonzero(s <= best + TIE_RTOL * max(1.0, abs(best)))
    # lexsort is stable, so equal norms keep index order
    return int(tied[np.lexsort((tied, norms[tied]))[0]])


def _pos_count(exp: Experiment, t: Transform, tol: float) -> int:
    return int(np.count_nonzero(residuals(exp, t) <= tol))


def pos(exp: Experiment, t: Transform, tol: float = 1e-9) -> tuple[int, ...]:
    """Indices of the pairs that ``t`` fits to within ``tol``."""
    return tuple(int(i) for i in np.flatnonzero(residuals(exp, t) <= tol))


def _scores(exp, group, family, params, exact_rtol):
    res = snap_exact(residual_matrix(exp, group, params), exp.outputs, exact_rtol)
    return family(res).sum(axis=1)


def _refine(exp, group, family, start: np.ndarray, config: EstimateConfig):
    """Compass search from ``start``; returns the end point and the number of accepted moves.

    Raw (unsnapped) residuals drive the search so that a move off an exact
    fit is always penalised.
    """
    x = start.astype(float).copy()
    fx = float(_scores(exp, group, family, x[None, :], 0.0)[0])
    radius = config.initial_radius * (1.0 + float(np.linalg.norm(x)))
    floor = 1e-13 * (1.0 + float(np.linalg.norm(x)))
    steps = 0
    k = len(x)
    for _ in range(config.iterations):
        if radius < floor:
            break
        moves = np.vstack([x + radius * np.eye(k), x - radius * np.eye(k)])
        if group is Group.ROTATION2D:
            moves = np.mod(moves, TWO_PI)
        if group in (Group.UNIFORM_SCALING, Group.NONUNIFORM_SCALING):
            moves = moves[np.all(moves > 0.0, axis=1)]
        if len(moves):
            vals = _scores(exp, group, family, moves, 0.0)
            j = int(np.argmin(vals))
            if vals[j] < fx:
                x, fx = moves[j], float(vals[j])
                steps += 1
                continue
        radius *= config.shrink
    return x, steps


def estimate(
    exp: Experiment,
    group: "Group | str",
    family: PenaltyFamily,
    config: EstimateConfig = EstimateConfig(),
) -> EstimationResult:
    """Minimise the summed penalty over the candidate set of ``group``.

    Parameters
    ----------
    exp : Experiment
        Observations, already passed through :func:`~superrobust.transforms.sanitize`.
    group : Group or str
    family : PenaltyFamily
        ``Lp``, ``L0`` or ``SRPiecewise``.
    config : EstimateConfig, optional

    Returns
    -------
    EstimationResult
        The winning transform.  Its objective never exceeds the objective
        of any candidate; ties go to the smaller parameter norm and then to
        the earlier candidate.
    """
    group = Group.parse(group)
    params = candidate_params(exp, group)
    scores = _scores(exp, group, family, params, config.exact_rtol)
    i = _select(scores, np.linalg.norm(params, axis=1))
    best, obj, steps = params[i], float(scores[i]), 0
    if config.refine_for(group, exp.dim):
        moved, steps = _refine(exp, group, family, best, config)
        moved_obj = float(_scores(exp, group, family, moved[None, :], config.exact_rtol)[0])
        if moved_obj < obj:
            best, obj = moved, moved_obj
        else:
            steps = 0
    t = Transform(group, tuple(best))
    return EstimationResult(
        best=t,
        objective=obj,
        pos_size=_pos_count(exp, t, config.pos_tol),
        candidates_evaluated=len(params),
        refinement_steps=steps,
        family=family,
    )


def estimate_l0(exp: Experiment, group: "Group | str", tol: float = 1e-9) -> EstimationResult:
    """Consensus estimate: the candidate fitting the largest number of pairs."""
    group = Group.parse(group)
    params = candidate_params(exp, group)
    counts = np.count_nonzero(residual_matrix(exp, group, params) <= tol, axis=1)
    i = _select(counts.astype(float), np.linalg.norm(params, axis=1), lower_is_better=False)
    return EstimationResult(
        best=Transform(group, tuple(params[i])),
        objective=float(len(exp) - counts[i]),
        pos_size=int(counts[i]),
        candidates_evaluated=len(params),
        family=L0(tol),
    )


def anneal_p(
    exp: Experiment,
    group: "Group | str",
    schedule: AnnealSchedule = AnnealSchedule(),
    config: EstimateConfig = EstimateConfig(),
) -> EstimationResult:
    """Run :func:`estimate` with ``Lp`` along a decreasing sequence of ``p``.

    Stops once ``schedule.stop_stable`` consecutive estimates agree to
    ``config.agree_tol`` (relative), subject to the schedule's consensus
    guard, or when the schedule runs out.  The
    returned result also reports whether the final estimate coincides with
    the L0 consensus transform.
    """
    group = Group.parse(group)
    consensus = estimate_l0(exp, group, config.pos_tol)
    trace = []
    last: Optional[EstimationResult] = None
    streak = 0
    for p in schedule.p_values:
        res = estimate(exp, group, Lp(p), config)
        trace.append((p, res.best.params))
        if last is not None and res.best.distance(last.best) <= config.agree_tol * (1.0 + res.best.norm):
            streak += 1
        else:
            streak = 1
        last = res
        settled = not schedule.until_consensus or res.pos_size >= consensus.pos_size
        if streak >= schedule.stop_stable and settled:
            break
    agrees = last.best.distance(consensus.best) <= config.agree_tol * (1.0 + last.best.norm)
    return replace(
        last,
        p_final=trace[-1][0],
        matches_l0=bool(agrees),
        l0_pos_size=consensus.pos_size,
        trace=tuple(trace),
    )
