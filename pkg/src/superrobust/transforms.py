"""Transformation groups, observation pairs and residuals.

An experiment is a batch of ``(input, output)`` point pairs.  A transform
belongs to one of four groups (translation, uniform scaling, per-axis
scaling, planar rotation) and maps inputs to predicted outputs; the
residual of a pair is the Euclidean distance between the observed and the
predicted output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# |O - T(I)| <= CONSISTENCY_RTOL * (1 + |O|) counts as an exact fit.
CONSISTENCY_RTOL = 1e-9


class DimensionError(ValueError):
    """Point or parameter dimensions do not fit together."""


class DegenerateExperimentError(ValueError):
    """No usable observation pairs remain."""


class Group(str, Enum):
    TRANSLATION = "translation"
    UNIFORM_SCALING = "uniform_scaling"
    NONUNIFORM_SCALING = "nonuniform_scaling"
    ROTATION2D = "rotation2d"

    @classmethod
    def parse(cls, name: "str | Group") -> "Group":
        if isinstance(name, Group):
            return name
        key = name.strip().lower().replace("-", "_")
        aliases = {
            "uniform": cls.UNIFORM_SCALING,
            "scaling": cls.UNIFORM_SCALING,
            "nonuniform": cls.NONUNIFORM_SCALING,
            "rotation": cls.ROTATION2D,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown transformation group {name!r}") from None

    def n_params(self, dim: int) -> int:
        if self in (Group.TRANSLATION, Group.NONUNIFORM_SCALING):
            return dim
        return 1


@dataclass(frozen=True)
class Transform:
    """A group tag plus its parameter vector.

    Translation carries the offset, uniform scaling a single positive
    factor, non-uniform scaling one positive factor per axis, and
    ``Rotation2D`` a single angle which is stored reduced to ``[0, 2*pi)``.
    """

    group: Group
    params: tuple[float, ...]

    def __post_init__(self):
        group = Group.parse(self.group)
        params = tuple(float(v) for v in np.atleast_1d(np.asarray(self.params, dtype=float)))
        if not params:
            raise ValueError("transform needs at least one parameter")
        if not all(math.isfinite(v) for v in params):
            raise ValueError("transform parameters must be finite")
        if group in (Group.UNIFORM_SCALING, Group.ROTATION2D) and len(params) != 1:
            raise DimensionError(f"{group.value} takes exactly one parameter")
        if group in (Group.UNIFORM_SCALING, Group.NONUNIFORM_SCALING):
            if any(v <= 0.0 for v in params):
                raise ValueError("scale factors must be strictly positive")
        if group is Group.ROTATION2D:
            params = (_wrap_angle(params[0]),)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "params", params)

    @classmethod
    def identity(cls, group: "Group | str", dim: int) -> "Transform":
        group = Group.parse(group)
        if group is Group.TRANSLATION:
            return cls(group, (0.0,) * dim)
        if group is Group.NONUNIFORM_SCALING:
            return cls(group, (1.0,) * dim)
        if group is Group.ROTATION2D:
            return cls(group, (0.0,))
        return cls(group, (1.0,))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.params)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.params))

    def check_dim(self, dim: int) -> None:
        if self.group is Group.ROTATION2D and dim != 2:
            raise DimensionError("rotation is only defined for 2-D points")
        if self.group in (Group.TRANSLATION, Group.NONUNIFORM_SCALING) and len(self.params) != dim:
            raise DimensionError(
                f"{self.group.value} with {len(self.params)} parameters cannot act on {dim}-D points"
            )

    def distance(self, other: "Transform") -> float:
        """Parameter-space distance; angles are compared on the circle."""
        if self.group is not other.group or len(self.params) != len(other.params):
            raise DimensionError("transforms from different groups are not comparable")
        if self.group is Group.ROTATION2D:
            return angle_distance(self.params[0], other.params[0])
        return float(np.linalg.norm(self.vector - other.vector))

    def to_dict(self) -> dict:
        return {"group": self.group.value, "params": list(self.params)}


def _wrap_angle(theta: float) -> float:
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    # fmod of a tiny negative angle can round up to exactly 2*pi
    return 0.0 if theta >= TWO_PI else theta


def angle_distance(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class ObservationPair:
    input: tuple[float, ...]
    output: tuple[float, ...]


class Experiment:
    """An ordered, immutable batch of observation pairs.

    Inputs and outputs are held as read-only ``(N, dim)`` float arrays.
    """

    __slots__ = ("dim_in", "dim_out", "inputs", "outputs")

    def __init__(self, inputs, outputs, dim_in: int | None = None, dim_out: int | None = None):
        inputs = np.array(inputs, dtype=float)
        outputs = np.array(outputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs[:, None]
        if outputs.ndim == 1:
            outputs = outputs[:, None]
        if inputs.ndim != 2 or outputs.ndim != 2:
            raise DimensionError("inputs and outputs must be (N, dim) arrays")
        if len(inputs) != len(outputs):
            raise DimensionError("inputs and outputs must have the same length")
        if len(inputs) == 0:
            raise DegenerateExperimentError("experiment has no observation pairs")
        dim_in = inputs.shape[1] if dim_in is None else int(dim_in)
        dim_out = outputs.shape[1] if dim_out is None else int(dim_out)
        if inputs.shape[1] != dim_in or outputs.shape[1] != dim_out:
            raise DimensionError("pair dimensions disagree with the declared dimensions")
        if dim_in != dim_out:
            raise DimensionError("input and output dimensions must be equal")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(outputs))):
            raise ValueError("observation coordinates must be finite")
        inputs.flags.writeable = False
        outputs.flags.writeable = False
        object.__setattr__(self, "dim_in", dim_in)
        object.__setattr__(self, "dim_out", dim_out)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    def __setattr__(self, name, value):
        raise AttributeError("Experiment is immutable")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence[float], Sequence[float]] | ObservationPair]):
        ins, outs = [], []
        for pair in pairs:
            if isinstance(pair, ObservationPair):
                i, o = pair.input, pair.output
            else:
                i, o = pair
            ins.append(np.atleast_1d(np.asarray(i, dtype=float)))
            outs.append(np.atleast_1d(np.asarray(o, dtype=float)))
        if not ins:
            raise DegenerateExperimentError("experiment has no observation pairs")
        if len({len(v) for v in ins}) != 1 or len({len(v) for v in outs}) != 1:
            raise DimensionError("all pairs must share the same dimensions")
        return cls(np.vstack(ins), np.vstack(outs))

    @property
    def dim(self) -> int:
        return self.dim_in

    @property
    def pairs(self) -> list[ObservationPair]:
        return [ObservationPair(tuple(i), tuple(o)) for i, o in zip(self.inputs, self.outputs)]

    def subset(self, index) -> "Experiment":
        return Experiment(self.inputs[index], self.outputs[index], self.dim_in, self.dim_out)

    def __len__(self) -> int:
        return len(self.inputs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Experiment):
            return NotImplemented
        return np.array_equal(self.inputs, other.inputs) and np.array_equal(self.outputs, other.outputs)

    def __repr__(self) -> str:
        return f"Experiment(N={len(self)}, dim={self.dim})"


def apply_batch(group: Group, params: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Apply ``C`` transforms of one group to ``N`` points at once.

    ``params`` is ``(C, n_params)`` and ``points`` is ``(N, dim)``; the
    result is ``(C, N, dim)``.
    """
    params = np.asarray(params, dtype=float)
    points = np.asarray(points, dtype=float)
    if group is Group.TRANSLATION:
        return points[None, :, :] + params[:, None, :]
    if group in (Group.UNIFORM_SCALING, Group.NONUNIFORM_SCALING):
        return points[None, :, :] * params[:, None, :]
    c = np.cos(params[:, 0])[:, None]
    s = np.sin(params[:, 0])[:, None]
    x, y = points[None, :, 0], points[None, :, 1]
    return np.stack([c * x - s * y, s * x + c * y], axis=-1)


def apply(t: Transform, x) -> np.ndarray:
    """Map one point (or an ``(N, dim)`` array of points) through ``t``."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim <= 1
    pts = np.atleast_2d(pts.reshape(1, -1) if single else pts)
    t.check_dim(pts.shape[1])
    out = apply_batch(t.group, t.vector[None, :], pts)[0]
    return out[0] if single else out


def residual(pair: ObservationPair | tuple, t: Transform) -> float:
    """Euclidean distance ``|O - T(I)|`` for one pair."""
    if isinstance(pair, ObservationPair):
        i, o = pair.input, pair.output
    else:
        i, o = pair
    i = np.atleast_1d(np.asarray(i, dtype=float))
    o = np.atleast_1d(np.asarray(o, dtype=float))
    if i.shape != o.shape:
        raise DimensionError("input and output dimensions differ")
    return float(np.linalg.norm(o - apply(t, i)))


def residuals(exp: Experiment, t: Transform) -> np.ndarray:
    t.check_dim(exp.dim)
    return np.linalg.norm(exp.outputs - apply(t, exp.inputs), axis=1)


def residual_matrix(exp: Experiment, group: Group, params: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Residuals of every pair under each of ``C`` parameter vectors, shape ``(C, N)``."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    out = np.empty((len(params), len(exp)))
    for start in range(0, len(params), chunk):
        pred = apply_batch(group, params[start:start + chunk], exp.inputs)
        out[start:start + chunk] = np.linalg.norm(exp.outputs[None, :, :] - pred, axis=2)
    return out


def is_consistent(pair: ObservationPair | tuple, t: Transform, rtol: float = CONSISTENCY_RTOL) -> bool:
    """True when the pair is an exact fit for ``t`` up to floating-point slack."""
    o = pair.output if isinstance(pair, ObservationPair) else pair[1]
    return residual(pair, t) <= rtol * (1.0 + float(np.linalg.norm(o)))


def sanitize(exp: Experiment, group: "Group | str") -> Experiment:
    """Drop pairs whose inputs carry no information for ``group``.

    Per-axis scaling loses every pair with a zero input component; rotation
    and uniform scaling lose pairs whose input is the origin.
    """
    group = Group.parse(group)
    if group is Group.TRANSLATION:
        return exp
    if group is Group.ROTATION2D and exp.dim != 2:
        raise DimensionError("rotation is only defined for 2-D points")
    if group is Group.NONUNIFORM_SCALING:
        keep = np.all(exp.inputs != 0.0, axis=1)
    else:
        keep = np.any(exp.inputs != 0.0, axis=1)
    if not keep.any():
        raise DegenerateExperimentError(f"no usable pairs remain for {group.value}")
    if keep.all():
        return exp
    return exp.subset(np.flatnonzero(keep))
