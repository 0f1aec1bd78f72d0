"""Two-component state w = (f, p), physical constants and boundary signals."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ValidationError
from .grid import BoundarySegment, FloatArray, Grid, SegmentTag, l2_norm_boundary

logger = logging.getLogger(__name__)


class Orientation(str, Enum):
    COUNTER_CURRENT = "counter-current"
    CO_CURRENT = "co-current"


class AdvectionScheme(str, Enum):
    CENTERED = "centered"
    UPWIND = "upwind"


@dataclass(frozen=True)
class PhysicalParams:
    """PDE coefficients.

    ``beta_p`` is a nonnegative speed: the permeate moves along -y when
    counter-current and along +y when co-current. ``reaction_f`` and
    ``reaction_p`` add a ``-kappa * w`` term and are zero for the plant.
    """

    alpha_f: float
    alpha_p: float
    gamma_f: float
    gamma_p: float
    beta_f: float = 0.0
    beta_p: float = 0.0
    orientation: Orientation = Orientation.COUNTER_CURRENT
    advection_scheme: AdvectionScheme = AdvectionScheme.CENTERED
    reaction_f: float = 0.0
    reaction_p: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        object.__setattr__(self, "advection_scheme", AdvectionScheme(self.advection_scheme))
        for name in ("alpha_f", "alpha_p", "gamma_f", "gamma_p"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(f"{name} must be strictly positive, got {value}", key=name)
        for name in ("beta_f", "beta_p", "reaction_f", "reaction_p"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"{name} must be nonnegative, got {value}", key=name)

    @classmethod
    def baseline(cls) -> "PhysicalParams":
        """Constants of the baseline closed-loop example (no advection)."""
        return cls(alpha_f=3.0, alpha_p=3.5, gamma_f=0.2, gamma_p=0.1)

    @property
    def velocity_f(self) -> float:
        return self.beta_f

    @property
    def velocity_p(self) -> float:
        return self.beta_p if self.orientation is Orientation.CO_CURRENT else -self.beta_p

    @property
    def weights(self) -> tuple[float, float]:
        """Component weights (alpha_p*gamma_p, alpha_f*gamma_f) of the inner product."""
        return (self.alpha_p * self.gamma_p, self.alpha_f * self.gamma_f)

    def component(self, c: int) -> tuple[float, float, float, float]:
        """(alpha, velocity, gamma, reaction) of component 0 (f) or 1 (p)."""
        if c == 0:
            return self.alpha_f, self.velocity_f, self.gamma_f, self.reaction_f
        return self.alpha_p, self.velocity_p, self.gamma_p, self.reaction_p

    def scaled_advection(self, t: float) -> "PhysicalParams":
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"advection scale must lie in [0, 1], got {t}")
        return dataclasses.replace(self, beta_f=t * self.beta_f, beta_p=t * self.beta_p)


@dataclass(eq=False)
class FieldPair:
    grid: Grid
    f: FloatArray
    p: FloatArray

    def __post_init__(self) -> None:
        self.f = np.asarray(self.f, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.f.size == self.grid.size:
            self.f = self.f.reshape(self.grid.shape)
        if self.p.size == self.grid.size:
            self.p = self.p.reshape(self.grid.shape)
        if self.f.shape != self.grid.shape or self.p.shape != self.grid.shape:
            raise ValidationError(
                f"field shapes {self.f.shape}/{self.p.shape} do not match grid {self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> "FieldPair":
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, cf: float, cp: float) -> "FieldPair":
        return cls(grid, np.full(grid.shape, float(cf)), np.full(grid.shape, float(cp)))

    @classmethod
    def from_functions(cls, grid: Grid, f_fn: Callable, p_fn: Callable) -> "FieldPair":
        X, Y = grid.mesh
        f = np.broadcast_to(np.asarray(f_fn(X, Y), dtype=float), grid.shape)
        p = np.broadcast_to(np.asarray(p_fn(X, Y), dtype=float), grid.shape)
        return cls(grid, f.copy(), p.copy())

    @classmethod
    def from_vector(cls, grid: Grid, vector) -> "FieldPair":
        vec = np.asarray(vector, dtype=float)
        if vec.shape != (2 * grid.size,):
            raise ValidationError(f"state vector of shape {vec.shape} does not fit grid {grid.shape}")
        return cls(grid, vec[: grid.size].copy(), vec[grid.size :].copy())

    def vector(self) -> FloatArray:
        return np.concatenate([self.f.ravel(), self.p.ravel()])

    def component(self, c: int) -> FloatArray:
        return self.f if c == 0 else self.p

    def copy(self) -> "FieldPair":
        return FieldPair(self.grid, self.f.copy(), self.p.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.f).all() and np.isfinite(self.p).all())

    def _check(self, other: "FieldPair") -> None:
        if other.grid != self.grid:
            raise ValidationError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other: "FieldPair") -> "FieldPair":
        self._check(other)
        return FieldPair(self.grid, self.f + other.f, self.p + other.p)

    def __sub__(self, other: "FieldPair") -> "FieldPair":
        self._check(other)
        return FieldPair(self.grid, self.f - other.f, self.p - other.p)

    def __mul__(self, scale: float) -> "FieldPair":
        return FieldPair(self.grid, scale * self.f, scale * self.p)

    __rmul__ = __mul__

    def __neg__(self) -> "FieldPair":
        return FieldPair(self.grid, -self.f, -self.p)


Evaluator = Callable[[float, FloatArray], object]


@dataclass(frozen=True, eq=False)
class BoundarySignal:
    """Time-dependent two-component data on one boundary segment.

    ``evaluator(t, s)`` receives the arclength coordinates of the segment
    nodes and returns something broadcastable to ``(2, len(s))``.
    """

    tag: SegmentTag
    evaluator: Evaluator
    label: str = ""

    def sample(self, t: float, segment: BoundarySegment) -> FloatArray:
        if segment.tag is not self.tag:
            raise ValidationError(f"signal for {self.tag.value} sampled on {segment.tag.value}")
        raw = np.asarray(self.evaluator(float(t), segment.s), dtype=float)
        try:
            values = np.array(np.broadcast_to(raw, (2, segment.size)))
        except ValueError as exc:
            raise ValidationError(
                f"signal {self.label or self.tag.value} returned shape {raw.shape}, "
                f"expected (2, {segment.size})"
            ) from exc
        return values

    @classmethod
    def zero(cls, tag: SegmentTag) -> "BoundarySignal":
        return cls(tag, lambda t, s: np.zeros((2, s.size)), label="zero")

    @classmethod
    def constant(cls, tag: SegmentTag, cf: float, cp: float) -> "BoundarySignal":
        return cls(tag, lambda t, s: np.array([[cf], [cp]]), label=f"constant({cf}, {cp})")


def _check_grids(a: FieldPair, b: FieldPair) -> None:
    if a.grid != b.grid:
        raise ValidationError(f"grid mismatch: {a.grid} vs {b.grid}")


def weighted_inner_product(a: FieldPair, b: FieldPair, params: PhysicalParams) -> float:
    """alpha_p*gamma_p <a.f, b.f> + alpha_f*gamma_f <a.p, b.p> with trapezoidal quadrature."""
    _check_grids(a, b)
    cf, cp = params.weights
    w = a.grid.weights
    return float(cf * np.sum(w * a.f * b.f) + cp * np.sum(w * a.p * b.p))


def weighted_norm(a: FieldPair, params: PhysicalParams) -> float:
    return math.sqrt(max(weighted_inner_product(a, a, params), 0.0))


def trace(w: FieldPair, segment: BoundarySegment) -> FloatArray:
    """Nodal restriction of (f, p) to ``segment`` as a ``(2, n)`` array."""
    if segment.size != (w.grid.nx if segment.tag.axis == 1 else w.grid.ny):
        raise ValidationError(f"segment {segment.tag.value} does not belong to grid {w.grid.shape}")
    return np.vstack([w.f[segment.i, segment.j], w.p[segment.i, segment.j]])


def normal_derivative(w: FieldPair, segment: BoundarySegment) -> FloatArray:
    """One-sided second-order outward normal derivative, ``(2, n)``.

    (3 w_b - 4 w_{b+1} + w_{b+2}) / (2 h) with steps taken inward.
    """
    tag = segment.tag
    n_normal = w.grid.ny if tag.axis == 1 else w.grid.nx
    if n_normal < 3:
        raise ValidationError(f"need 3 nodes normal to {tag.value}, grid has {n_normal}")
    step_i, step_j = (0, -tag.sign) if tag.axis == 1 else (-tag.sign, 0)
    i0, j0 = segment.i, segment.j
    out = np.empty((2, segment.size))
    for c, arr in enumerate((w.f, w.p)):
        out[c] = (
            3.0 * arr[i0, j0] - 4.0 * arr[i0 + step_i, j0 + step_j] + arr[i0 + 2 * step_i, j0 + 2 * step_j]
        ) / (2.0 * segment.inward_step)
    return out


def boundary_norm(segment: BoundarySegment, traces) -> float:
    """sqrt(|c1|^2 + |c2|^2) of a two-component trace in the boundary L2 norm."""
    arr = np.asarray(traces, dtype=float)
    if arr.ndim == 1:
        return l2_norm_boundary(segment, arr)
    return math.sqrt(sum(l2_norm_boundary(segment, row) ** 2 for row in arr))
