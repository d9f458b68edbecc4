"""Synthetic experiments and seeded Monte Carlo studies.

Seeding rule: every trial draws from its own generator,
``numpy.random.default_rng(SeedSequence(master_seed, spawn_key=(cell, trial)))``.
``SeedSequence`` hashes the entropy and spawn key into independent
streams, so a trial's data depends only on ``(master_seed, cell, trial)``
and never on execution order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import breakdown_ratio, min_confidence_exponent
from .estimator import AnnealSchedule, EstimateConfig, anneal_p, estimate, estimate_l0, pos
from .objective import L0, Lp, PenaltyFamily
from .transforms import DimensionError, Experiment, Group, Transform, apply, sanitize


@dataclass(frozen=True)
class UniformRadius:
    max: float = 1.0

    def __post_init__(self):
        if not self.max > 0.0:
            raise ValueError("noise radius must be positive")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # 1 - U lies in (0, 1], so a noise pair is never an exact fit
        return self.max * (1.0 - rng.random(size))

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float) / self.max, 0.0, 1.0)

    def spec(self) -> str:
        return f"uniform:{self.max:g}"


@dataclass(frozen=True)
class PowerLaw:
    """Radii with density ``(K+1) x**K`` on ``[0, 1]``."""

    K: float = 0.0

    def __post_init__(self):
        if not self.K >= 0.0:
            raise ValueError("power-law exponent K must be nonnegative")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return (1.0 - rng.random(size)) ** (1.0 / (self.K + 1.0))

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0) ** (self.K + 1.0)

    def spec(self) -> str:
        return f"powerlaw:{self.K:g}"


@dataclass(frozen=True)
class Custom:
    inverse_cdf: Callable[[np.ndarray], np.ndarray]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.inverse_cdf(1.0 - rng.random(size)), dtype=float)

    def spec(self) -> str:
        return "custom"


NoiseModel = UniformRadius | PowerLaw | Custom


def parse_noise(text: str) -> NoiseModel:
    """Parse ``uniform:<max>`` or ``powerlaw:<K>``."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    try:
        value = float(arg) if arg else None
    except ValueError:
        raise ValueError(f"bad numeric argument in noise spec {text!r}") from None
    if kind == "uniform":
        return UniformRadius(1.0 if value is None else value)
    if kind in ("powerlaw", "power"):
        return PowerLaw(0.0 if value is None else value)
    raise ValueError(f"unrecognised noise spec {text!r}; expected uniform:<max> or powerlaw:<K>")


@dataclass(frozen=True)
class Truth:
    group: Group
    params: tuple[float, ...]
    n_ideal: int

    @property
    def transform(self) -> Transform:
        return Transform(self.group, self.params)

    def to_dict(self) -> dict:
        return {"group": self.group.value, "params": list(self.params), "n_ideal": self.n_ideal}


@dataclass(frozen=True)
class ScenarioConfig:
    group: Group
    dim: int
    n_ideal: int
    m_noise: int
    truth: Transform
    noise: NoiseModel = UniformRadius(1.0)
    family: PenaltyFamily = Lp(0.1)
    master_seed: int = 0
    anneal: bool = False
    estimate_config: EstimateConfig = EstimateConfig()

    def __post_init__(self):
        object.__setattr__(self, "group", Group.parse(self.group))
        if self.n_ideal < 0 or self.m_noise < 0 or self.n_ideal + self.m_noise < 1:
            raise ValueError("need n_ideal + m_noise >= 1 with both nonnegative")
        if self.truth.group is not self.group:
            raise ValueError("truth transform belongs to a different group")
        self.truth.check_dim(self.dim)


def trial_seed(master_seed: int, cell: int = 0, trial: int = 0) -> int:
    """64-bit per-trial seed derived from ``(master_seed, cell, trial)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(cell), int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _unit_vectors(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    if dim == 1:
        return np.where(rng.random(size) < 0.5, -1.0, 1.0)[:, None]
    v = rng.standard_normal((size, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def generate_experiment(cfg: ScenarioConfig, seed: Optional[int] = None) -> tuple[Experiment, Truth]:
    """Draw ``n_ideal`` exact pairs and ``m_noise`` noisy pairs.

    Inputs are uniform on ``[-1, 1]**dim``.  Noisy outputs sit at distance
    ``r ~ cfg.noise`` from the true output in a uniformly random
    direction.  Pairs are shuffled with the same generator.
    """
    rng = np.random.default_rng(trial_seed(cfg.master_seed) if seed is None else seed)
    N = cfg.n_ideal + cfg.m_noise
    inputs = rng.uniform(-1.0, 1.0, size=(N, cfg.dim))
    outputs = apply(cfg.truth, inputs)
    if cfg.m_noise:
        r = cfg.noise.sample(rng, cfg.m_noise)
        u = _unit_vectors(rng, cfg.m_noise, cfg.dim)
        outputs[cfg.n_ideal:] += r[:, None] * u
    order = rng.permutation(N)
    exp = Experiment(inputs[order], outputs[order])
    return exp, Truth(cfg.group, cfg.truth.params, cfg.n_ideal)


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    estimated: Transform
    param_error: float
    exact_recovery: bool
    objective: float
    pos_size: int
    truth_pos_size: int = 0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "group": self.estimated.group.value,
            "params": list(self.estimated.params),
            "param_error": self.param_error,
            "exact_recovery": self.exact_recovery,
            "objective": self.objective,
            "pos_size": self.pos_size,
            "truth_pos_size": self.truth_pos_size,
        }


def recovery_tolerance(truth: Transform) -> float:
    return 1e-6 * (1.0 + truth.norm)


def run_trial(cfg: ScenarioConfig, cell: int = 0, trial: int = 0) -> TrialRecord:
    """Generate, sanitise and estimate one seeded experiment."""
    seed = trial_seed(cfg.master_seed, cell, trial)
    exp, truth = generate_experiment(cfg, seed)
    exp = sanitize(exp, cfg.group)
    if cfg.anneal:
        res = anneal_p(exp, cfg.group, AnnealSchedule(), cfg.estimate_config)
    elif isinstance(cfg.family, L0):
        res = estimate_l0(exp, cfg.group, cfg.family.tol)
    else:
        res = estimate(exp, cfg.group, cfg.family, cfg.estimate_config)
    err = res.best.distance(cfg.truth)
    return TrialRecord(
        seed=seed,
        estimated=res.best,
        param_error=err,
        exact_recovery=bool(err <= recovery_tolerance(cfg.truth)),
        objective=res.objective,
        pos_size=res.pos_size,
        truth_pos_size=len(pos(exp, cfg.truth, cfg.estimate_config.pos_tol)),
    )


@dataclass
class RobustnessProfile:
    p_values: list[float]
    ratios: list[float]
    trials: int
    recoveries: np.ndarray
    analytic_bound: list[float]
    m_noise: int
    records: list[list[TrialRecord]] = field(default_factory=list, repr=False)

    @property
    def rates(self) -> np.ndarray:
        return self.recoveries / self.trials

    def rows(self):
        for i, p in enumerate(self.p_values):
            for j, ratio in enumerate(self.ratios):
                yield {
                    "p": p,
                    "inlier_ratio": ratio,
                    "trials": self.trials,
                    "recoveries": int(self.recoveries[i, j]),
                    "rate": float(self.recoveries[i, j]) / self.trials,
                    "analytic_bound": self.analytic_bound[i],
                }

    def write_csv(self, stream) -> None:
        writer = csv.DictWriter(stream, fieldnames=PROFILE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: _fmt(v) for k, v in row.items()})

    def write_trials_jsonl(self, stream) -> None:
        for i, p in enumerate(self.p_values):
            for j, ratio in enumerate(self.ratios):
                for rec in self.records[i * len(self.ratios) + j]:
                    stream.write(json.dumps({"p": p, "inlier_ratio": ratio, **rec.to_dict()}) + "\n")


PROFILE_COLUMNS = ["p", "inlier_ratio", "trials", "recoveries", "rate", "analytic_bound"]


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return v


def _overlay(p: float, M: int) -> float:
    if not 0.0 < p < 1.0 or M < 2:
        return math.nan
    try:
        return breakdown_ratio(p, M, min_confidence_exponent(M))
    except ValueError:
        return math.nan


def breakdown_profile(
    base: ScenarioConfig,
    p_values: Sequence[float],
    ratios: Sequence[float],
    trials: int,
) -> RobustnessProfile:
    """Exact-recovery rate on a ``p`` by ``n/M`` grid.

    ``base.m_noise`` fixes ``M``; each cell uses ``n = round(ratio * M)``
    inliers and the ``Lp(p)`` family.  Cells are numbered row-major and the
    cell number feeds the seed derivation.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    M = base.m_noise
    rec = np.zeros((len(p_values), len(ratios)), dtype=int)
    records = []
    for i, p in enumerate(p_values):
        for j, ratio in enumerate(ratios):
            cell = i * len(ratios) + j
            cfg = replace(base, family=Lp(p), n_ideal=int(round(ratio * M)))
            cell_records = [run_trial(cfg, cell, k) for k in range(trials)]
            rec[i, j] = sum(r.exact_recovery for r in cell_records)
            records.append(cell_records)
    return RobustnessProfile(
        p_values=[float(p) for p in p_values],
        ratios=[float(r) for r in ratios],
        trials=trials,
        recoveries=rec,
        analytic_bound=[_overlay(p, M) for p in p_values],
        m_noise=M,
        records=records,
    )


def order_stat_check(M: int, a: float, trials: int, seed: int = 0, batch: int = 1000) -> float:
    """Fraction of trials in which every sorted uniform lies within ``M**(a-1)`` of ``i/M``."""
    if M < 2:
        raise ValueError("M must be at least 2")
    if not 0.5 < a < 1.0:
        raise ValueError("a must lie in (0.5, 1)")
    rng = np.random.default_rng(seed)
    radius = M ** (a - 1.0)
    means = np.arange(1, M + 1) / M
    hits = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        d = np.sort(rng.random((b, M)), axis=1)
        hits += int(np.count_nonzero(np.all(np.abs(d - means) < radius, axis=1)))
        done += b
    return hits / trials


def default_truth(group: "Group | str", dim: int) -> Transform:
    group = Group.parse(group)
    if group is Group.TRANSLATION:
        return Transform(group, tuple(2.0 + 0.5 * k for k in range(dim)))
    if group is Group.UNIFORM_SCALING:
        return Transform(group, (1.5,))
    if group is Group.NONUNIFORM_SCALING:
        return Transform(group, tuple(1.5 + 0.5 * k for k in range(dim)))
    if dim != 2:
        raise DimensionError("rotation is only defined for 2-D points")
    return Transform(group, (0.7,))
