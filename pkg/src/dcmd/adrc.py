"""Disturbance-rejection output tracking for the membrane module.

Three copies of the coupled system run side by side:

* the plant ``w``: flux disturbance ``d`` on Gamma1, control flux on Gamma3;
* the extended state observer ``w_hat``: same control flux, measured
  temperatures ``y_m`` imposed on Gamma1;
* the servo ``v``: reference ``r`` imposed on Gamma3 and the observer trace
  imposed on Gamma1.

The control is the outward flux of the servo on Gamma3, taken from the
observer's own discretization of that boundary.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import LinearSolveError, SimulationError, ValidationError
from .fields import (
    BoundarySignal,
    FieldPair,
    PhysicalParams,
    boundary_norm,
    normal_derivative,
    trace,
    weighted_norm,
)
from .grid import FloatArray, Grid, SegmentTag
from .operators import COUPLED, DIRICHLET, NEUMANN, BcSpec, DiscreteOperator, assemble
from .solvers import SolverMethod
from .timestepping import implied_flux, step_backward_euler

logger = logging.getLogger(__name__)

G1, G2, G3, G4 = SegmentTag.GAMMA1, SegmentTag.GAMMA2, SegmentTag.GAMMA3, SegmentTag.GAMMA4


class Actuation(str, Enum):
    FEED = "feed"  # u = (du1/dnu, 0)
    BOTH = "both"  # u = dv/dnu on both components


class Subsystem(str, Enum):
    PLANT = "plant"
    OBSERVER = "observer"
    SERVO = "servo"


_SUBSYSTEM_BC = {
    Subsystem.PLANT: {G1: (NEUMANN, NEUMANN), G2: (NEUMANN, NEUMANN), G3: (NEUMANN, NEUMANN), G4: (COUPLED, COUPLED)},
    Subsystem.OBSERVER: {
        G1: (DIRICHLET, DIRICHLET),
        G2: (NEUMANN, NEUMANN),
        G3: (NEUMANN, NEUMANN),
        G4: (COUPLED, COUPLED),
    },
    Subsystem.SERVO: {
        G1: (DIRICHLET, DIRICHLET),
        G2: (NEUMANN, NEUMANN),
        G3: (DIRICHLET, DIRICHLET),
        G4: (COUPLED, COUPLED),
    },
}


def subsystem_bc(kind: Subsystem | str) -> BcSpec:
    return BcSpec.build(_SUBSYSTEM_BC[Subsystem(kind)])


@lru_cache(maxsize=16)
def subsystem_operator(kind: Subsystem, grid: Grid, params: PhysicalParams) -> DiscreteOperator:
    return assemble(grid, params, subsystem_bc(kind))


def _pair(trace_like, n: int, name: str) -> FloatArray:
    """Normalize a scalar, a first-component trace or a (2, n) pair."""
    arr = np.asarray(trace_like, dtype=float)
    if arr.ndim == 0:
        arr = np.full((2, n), float(arr))
    elif arr.ndim == 1:
        arr = np.vstack([arr, np.zeros_like(arr)])
    if arr.shape != (2, n):
        raise ValidationError(f"{name} has shape {arr.shape}, expected (2, {n})", key=name)
    return arr


def step_plant(
    state: FieldPair,
    u,
    d,
    params: PhysicalParams,
    grid: Grid,
    dt: float,
    method: SolverMethod | str = SolverMethod.DIRECT,
) -> FieldPair:
    """Plant step: flux ``d`` on Gamma1, control flux ``u`` on Gamma3."""
    op = subsystem_operator(Subsystem.PLANT, grid, params)
    data = {G1: _pair(d, grid.nx, "d"), G3: _pair(u, grid.nx, "u")}
    return step_backward_euler(op, state, 0.0, dt, data=data, method=method)


def step_observer(
    state: FieldPair,
    u,
    y_m,
    params: PhysicalParams,
    grid: Grid,
    dt: float,
    method: SolverMethod | str = SolverMethod.DIRECT,
) -> FieldPair:
    """Observer step: measured temperatures on Gamma1, control flux on Gamma3."""
    op = subsystem_operator(Subsystem.OBSERVER, grid, params)
    data = {G1: _pair(y_m, grid.nx, "y_m"), G3: _pair(u, grid.nx, "u")}
    return step_backward_euler(op, state, 0.0, dt, data=data, method=method)


def step_servo(
    state: FieldPair,
    r,
    w_hat_trace,
    params: PhysicalParams,
    grid: Grid,
    dt: float,
    method: SolverMethod | str = SolverMethod.DIRECT,
) -> FieldPair:
    """Servo step: reference on Gamma3, observer trace on Gamma1."""
    op = subsystem_operator(Subsystem.SERVO, grid, params)
    data = {G1: _pair(w_hat_trace, grid.nx, "w_hat_trace"), G3: _pair(r, grid.nx, "r")}
    return step_backward_euler(op, state, 0.0, dt, data=data, method=method)


def compute_control(v: FieldPair, grid: Grid) -> FloatArray:
    """u1 = dv1/dnu on Gamma3, one-sided."""
    return normal_derivative(v, grid.segment(G3))[0]


def servo_flux(
    v_prev: FieldPair,
    v_next: FieldPair,
    params: PhysicalParams,
    grid: Grid,
    dt: float,
) -> FloatArray:
    """Outward flux of the servo on Gamma3 as the observer discretizes it.

    This is the flux under which the servo step ``v_prev -> v_next`` also
    satisfies the observer's Gamma3 rows, so ``v - w_hat`` sees zero flux there.
    """
    op = subsystem_operator(Subsystem.OBSERVER, grid, params)
    return implied_flux(op, G3, v_prev, v_next, dt)


def control_pair(flux: FloatArray, actuation: Actuation | str = Actuation.FEED) -> FloatArray:
    """Applied two-component control on Gamma3 from a ``(2, nx)`` servo flux."""
    flux = np.asarray(flux, dtype=float)
    if Actuation(actuation) is Actuation.BOTH:
        return flux.copy()
    return np.vstack([flux[0], np.zeros_like(flux[0])])


def estimate_disturbance(w_hat: FieldPair, grid: Grid) -> FloatArray:
    """d_hat = dw_hat/dnu on Gamma1."""
    return normal_derivative(w_hat, grid.segment(G1))


@dataclass
class Scenario:
    params: PhysicalParams
    grid: Grid
    disturbance: BoundarySignal
    reference: BoundarySignal
    w0: FieldPair
    w_hat0: FieldPair
    v0: FieldPair
    horizon: float
    dt: float
    noise: Optional[BoundarySignal] = None
    actuation: Actuation = Actuation.FEED
    solver: SolverMethod = SolverMethod.DIRECT

    def __post_init__(self) -> None:
        self.actuation = Actuation(self.actuation)
        self.solver = SolverMethod(self.solver)
        if not self.dt > 0:
            raise ValidationError(f"time step must be positive, got {self.dt}", key="time.dt")
        if not self.horizon >= self.dt:
            raise ValidationError(
                f"horizon {self.horizon} must be at least one time step {self.dt}", key="time.horizon"
            )
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValidationError(
                f"horizon {self.horizon} is not a whole number of steps of {self.dt}", key="time.horizon"
            )
        for name, sig, tag in (("disturbance", self.disturbance, G1), ("reference", self.reference, G3)):
            if sig.tag is not tag:
                raise ValidationError(f"{name} must live on {tag.value}, got {sig.tag.value}", key=f"signals.{name}")
        if self.noise is not None and self.noise.tag is not G1:
            raise ValidationError(f"noise must live on Gamma1, got {self.noise.tag.value}", key="signals.noise")
        for name in ("w0", "w_hat0", "v0"):
            if getattr(self, name).grid != self.grid:
                raise ValidationError(f"initial state {name} is on a different grid", key=f"initial.{name}")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class ClosedLoopState:
    t: float
    step: int
    w: FieldPair
    w_hat: FieldPair
    v: FieldPair
    control: FloatArray  # (2, nx) on Gamma3, applied over the step ending at t
    disturbance_estimate: FloatArray  # (2, nx) on Gamma1


@dataclass(frozen=True)
class MetricsRow:
    t: float
    tracking_error: float
    observer_error: float
    servo_gap: float
    disturbance_error: float
    control_norm: float

    FIELDS = ("t", "tracking_error", "observer_error", "servo_gap", "disturbance_error", "control_norm")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.FIELDS)


@dataclass
class ClosedLoopResult:
    metrics: list[MetricsRow]
    final: ClosedLoopState
    scenario: Scenario = field(repr=False)


def tracking_error_trace(state: ClosedLoopState, scn: Scenario) -> FloatArray:
    """e = y_r - r on Gamma3 as a (2, nx) array."""
    seg = scn.grid.segment(G3)
    return trace(state.w, seg) - scn.reference.sample(state.t, seg)


def _metrics(state: ClosedLoopState, scn: Scenario) -> MetricsRow:
    grid, params = scn.grid, scn.params
    g1, g3 = grid.segment(G1), grid.segment(G3)
    d = scn.disturbance.sample(state.t, g1)
    row = MetricsRow(
        t=state.t,
        tracking_error=boundary_norm(g3, tracking_error_trace(state, scn)),
        observer_error=weighted_norm(state.w - state.w_hat, params),
        servo_gap=weighted_norm(state.w_hat - state.v, params),
        disturbance_error=boundary_norm(g1, d - state.disturbance_estimate),
        control_norm=boundary_norm(g3, state.control),
    )
    if not all(np.isfinite(row.as_tuple())):
        raise SimulationError("non-finite metrics", step=state.step)
    return row


StepCallback = Callable[[ClosedLoopState, MetricsRow], None]


def initial_state(scn: Scenario) -> ClosedLoopState:
    seg = scn.grid.segment(G3)
    return ClosedLoopState(
        t=0.0,
        step=0,
        w=scn.w0.copy(),
        w_hat=scn.w_hat0.copy(),
        v=scn.v0.copy(),
        control=control_pair(normal_derivative(scn.v0, seg), scn.actuation),
        disturbance_estimate=estimate_disturbance(scn.w_hat0, scn.grid),
    )


def advance(state: ClosedLoopState, scn: Scenario) -> ClosedLoopState:
    """One closed-loop step from t_n to t_{n+1}.

    The servo steps first on the observer trace at t_n. Its Gamma3 flux over
    the step drives plant and observer; the measurement is taken on the
    updated plant and imposed on the observer.
    """
    grid, params, dt, method = scn.grid, scn.params, scn.dt, scn.solver
    n = state.step + 1
    t_next = n * dt
    g1, g3 = grid.segment(G1), grid.segment(G3)
    try:
        v = step_servo(state.v, scn.reference.sample(t_next, g3), trace(state.w_hat, g1), params, grid, dt, method)
        u = control_pair(servo_flux(state.v, v, params, grid, dt), scn.actuation)
        w = step_plant(state.w, u, scn.disturbance.sample(t_next, g1), params, grid, dt, method)
        y_m = trace(w, g1)
        if scn.noise is not None:
            y_m = y_m + scn.noise.sample(t_next, g1)
        w_hat = step_observer(state.w_hat, u, y_m, params, grid, dt, method)
    except LinearSolveError as exc:
        raise SimulationError(str(exc), step=n, residual=exc.residual) from exc
    if not (w.is_finite() and w_hat.is_finite() and v.is_finite()):
        raise SimulationError("state became non-finite", step=n)
    return ClosedLoopState(
        t=t_next,
        step=n,
        w=w,
        w_hat=w_hat,
        v=v,
        control=u,
        disturbance_estimate=estimate_disturbance(w_hat, grid),
    )


def run_closed_loop(scn: Scenario, on_step: Optional[StepCallback] = None) -> ClosedLoopResult:
    """Run plant, observer and servo to the horizon; one metrics row per step plus t = 0."""
    state = initial_state(scn)
    row = _metrics(state, scn)
    metrics = [row]
    if on_step is not None:
        on_step(state, row)
    steps = scn.steps
    report_every = max(1, steps // 10)
    logger.info(
        "closed loop on %dx%d grid: %d steps of %g, actuation=%s",
        scn.grid.nx,
        scn.grid.ny,
        steps,
        scn.dt,
        scn.actuation.value,
    )
    for _ in range(steps):
        state = advance(state, scn)
        row = _metrics(state, scn)
        metrics.append(row)
        if on_step is not None:
            on_step(state, row)
        if state.step % report_every == 0:
            logger.info(
                "t=%.4g tracking=%.4e observer=%.4e disturbance=%.4e",
                row.t,
                row.tracking_error,
                row.observer_error,
                row.disturbance_error,
            )
    return ClosedLoopResult(metrics=metrics, final=state, scenario=scn)
