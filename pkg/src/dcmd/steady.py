"""Stationary solution for prescribed inlet temperatures and settling toward it."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ValidationError
from .fields import FieldPair, Orientation, PhysicalParams, weighted_norm
from .grid import FloatArray, Grid, SegmentTag, l2_norm_domain
from .operators import DiscreteOperator, assemble, inlet_bc
from .solvers import SolverMethod, solve_linear
from .timestepping import BoundaryData, step_backward_euler

logger = logging.getLogger(__name__)

NORM_FLOOR = 1e-13
MIN_SAMPLES = 10


def _as_trace(value, n: int, name: str) -> FloatArray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValidationError(f"{name} has shape {arr.shape}, expected ({n},)", key=name)
    return arr


def inlet_data(grid: Grid, params: PhysicalParams, T_f, T_p) -> dict[SegmentTag, FloatArray]:
    """Boundary data for :func:`dcmd.operators.inlet_bc`; outlets carry zero flux."""
    nx = grid.nx
    tf = _as_trace(T_f, nx, "T_f")
    tp = _as_trace(T_p, nx, "T_p")
    zero = np.zeros(nx)
    if params.orientation is Orientation.COUNTER_CURRENT:
        return {SegmentTag.GAMMA1: np.vstack([tf, zero]), SegmentTag.GAMMA3: np.vstack([zero, tp])}
    return {SegmentTag.GAMMA1: np.vstack([tf, tp]), SegmentTag.GAMMA3: np.vstack([zero, zero])}


def solve_stationary(
    op: DiscreteOperator,
    data: Optional[BoundaryData] = None,
    method: SolverMethod | str = SolverMethod.DIRECT,
) -> FieldPair:
    """Solve A_ff w_f = -(b_f + A_fD g) with w_D = g."""
    b = op.boundary_vector(data)
    g = b[op.dirichlet]
    rhs = -b[op.free]
    if g.size:
        rhs = rhs - op.coupling_block @ g
    out = np.empty(op.size)
    out[op.free] = solve_linear(op.free_block, rhs, method=method)
    out[op.dirichlet] = g
    return FieldPair.from_vector(op.grid, out)


def solve_steady(grid: Grid, params: PhysicalParams, T_f, T_p) -> FieldPair:
    """Steady temperatures for inlet traces ``T_f`` (feed) and ``T_p`` (permeate)."""
    op = assemble(grid, params, inlet_bc(params.orientation))
    data = inlet_data(grid, params, T_f, T_p)
    steady = solve_stationary(op, data)
    logger.info(
        "steady state on %dx%d: f in [%.4g, %.4g], p in [%.4g, %.4g]",
        grid.nx,
        grid.ny,
        steady.f.min(),
        steady.f.max(),
        steady.p.min(),
        steady.p.max(),
    )
    return steady


def stationary_residual(
    op: DiscreteOperator, w: FieldPair, data: Optional[BoundaryData], params: PhysicalParams
) -> float:
    """Weighted norm of A w + b on the free nodes."""
    return weighted_norm(op.apply(w, data=data or {}), params)


def simulate_transient(
    op: DiscreteOperator,
    w0: FieldPair,
    dt: float,
    horizon: float,
    data: Optional[BoundaryData] = None,
    method: SolverMethod | str = SolverMethod.DIRECT,
) -> list[tuple[float, FieldPair]]:
    """Backward Euler history with time-independent boundary data."""
    if not dt > 0:
        raise ValidationError(f"time step must be positive, got {dt}", key="dt")
    steps = int(round(horizon / dt))
    history = [(0.0, w0)]
    w = w0
    for n in range(steps):
        w = step_backward_euler(op, w, n * dt, dt, data=data or {}, method=method)
        history.append(((n + 1) * dt, w))
    return history


@dataclass(frozen=True)
class SettlingResult:
    rate: float
    r_squared: float
    samples: int
    saturated: bool = False

    @property
    def decaying(self) -> bool:
        return not self.saturated and self.rate > 0


def fit_log_slope(times, values) -> tuple[float, float, float]:
    """Least-squares line through (t, log v): (slope, intercept, r squared)."""
    t = np.asarray(times, dtype=float)
    logs = np.log(np.asarray(values, dtype=float))
    fit = stats.linregress(t, logs)
    return float(fit.slope), float(fit.intercept), float(fit.rvalue**2)


def settling_rate(
    history: Sequence[tuple[float, FieldPair]],
    reference: FieldPair,
    params: Optional[PhysicalParams] = None,
    skip: float = 0.0,
) -> SettlingResult:
    """Exponential decay rate of |w(t) - reference| over samples with t >= skip.

    The weighted norm is used when ``params`` is given, the plain L2 norm of
    both components otherwise.
    """
    window = [(t, w) for t, w in history if t >= skip]
    if len(window) < MIN_SAMPLES:
        raise ValidationError(f"settling fit needs at least {MIN_SAMPLES} samples, got {len(window)}")

    def norm(w: FieldPair) -> float:
        diff = w - reference
        if params is not None:
            return weighted_norm(diff, params)
        return math.hypot(l2_norm_domain(w.grid, diff.f), l2_norm_domain(w.grid, diff.p))

    times = np.array([t for t, _ in window])
    norms = np.array([norm(w) for _, w in window])
    usable = norms >= NORM_FLOOR
    if usable.sum() < MIN_SAMPLES:
        logger.warning("settling norm at floor (%d usable samples), no rate reported", int(usable.sum()))
        return SettlingResult(rate=math.nan, r_squared=math.nan, samples=int(usable.sum()), saturated=True)
    slope, _, r2 = fit_log_slope(times[usable], norms[usable])
    return SettlingResult(rate=-slope, r_squared=r2, samples=int(usable.sum()))
