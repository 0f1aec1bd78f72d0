"""Backward Euler on the free unknowns of an assembled operator.

With f the free and D the Dirichlet nodes, one step solves

    (I - dt A_ff) w_f+ = w_f + dt (b_f + s_f) + dt A_fD g

and sets w_D+ = g, so Dirichlet data holds exactly at t + dt.
"""
from __future__ import annotations

import logging
from functools import lru_cache
from typing import Callable, Mapping, Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .fields import FieldPair
from .grid import FloatArray, SegmentTag
from .operators import DiscreteOperator
from .solvers import DEFAULT_RTOL, SolverMethod, make_solver

logger = logging.getLogger(__name__)

BoundaryData = Mapping[SegmentTag, FloatArray]
Forcing = Callable[[float], Union[FieldPair, FloatArray]]


class BackwardEuler:
    """One operator, one step size, one factorization."""

    def __init__(
        self,
        op: DiscreteOperator,
        dt: float,
        method: SolverMethod | str = SolverMethod.DIRECT,
        rtol: float = DEFAULT_RTOL,
    ) -> None:
        if not dt > 0:
            raise ValidationError(f"time step must be positive, got {dt}", key="dt")
        self.op = op
        self.dt = float(dt)
        n_free = op.free.size
        system = sp.identity(n_free, format="csc") - self.dt * op.free_block
        self._solver = make_solver(system, method, rtol=rtol)
        logger.debug("backward Euler system with %d free unknowns, dt=%g", n_free, dt)

    def step(self, w: FieldPair, b: FloatArray, source: Optional[FloatArray] = None) -> FieldPair:
        op = self.op
        if w.grid != op.grid:
            raise ValidationError(f"state grid {w.grid} does not match operator grid {op.grid}")
        state = w.vector()
        g = b[op.dirichlet]
        rhs = state[op.free] + self.dt * b[op.free]
        if source is not None:
            rhs += self.dt * source[op.free]
        if g.size:
            rhs += self.dt * (op.coupling_block @ g)
        out = np.empty_like(state)
        out[op.free] = self._solver.solve(rhs)
        out[op.dirichlet] = g
        return FieldPair.from_vector(op.grid, out)


# A closed loop holds three factorizations; ladders visit grids one at a time.
@lru_cache(maxsize=6)
def stepper(op: DiscreteOperator, dt: float, method: str = SolverMethod.DIRECT.value) -> BackwardEuler:
    return BackwardEuler(op, dt, method)


def _source_vector(forcing: Forcing, t: float) -> FloatArray:
    value = forcing(t)
    if isinstance(value, FieldPair):
        return value.vector()
    return np.asarray(value, dtype=float)


def step_backward_euler(
    op: DiscreteOperator,
    w: FieldPair,
    t: float,
    dt: float,
    data: Optional[BoundaryData] = None,
    forcing: Optional[Forcing] = None,
    method: SolverMethod | str = SolverMethod.DIRECT,
) -> FieldPair:
    """Advance ``w`` from ``t`` to ``t + dt``.

    Boundary data comes from ``data`` when given (already evaluated at
    ``t + dt``), otherwise from the operator's signals at ``t + dt``.
    ``forcing(t)`` returns an interior source added on free nodes.
    """
    t_new = t + dt
    b = op.rhs_bc(t_new) if data is None else op.boundary_vector(data)
    source = None if forcing is None else _source_vector(forcing, t_new)
    return stepper(op, float(dt), SolverMethod(method).value).step(w, b, source)


def implied_flux(
    op: DiscreteOperator,
    tag: SegmentTag,
    w_prev: FieldPair,
    w_next: FieldPair,
    dt: float,
    data: Optional[BoundaryData] = None,
) -> FloatArray:
    """Flux data on ``tag`` under which ``w_prev -> w_next`` is a step of ``op``.

    Each flux entry lifts into exactly one row of ``op``, so the rows on
    ``tag`` are solved for the data one by one. ``data`` holds the other
    segments' boundary data for those rows and defaults to zero.
    """
    if not dt > 0:
        raise ValidationError(f"time step must be positive, got {dt}", key="dt")
    lift = op.flux_lift.get(tag)
    if lift is None:
        raise ValidationError(f"operator carries no flux data on {tag.value}")
    lift = lift.tocsc()
    lift.eliminate_zeros()
    if not np.all(np.diff(lift.indptr) == 1):
        raise ValidationError(f"flux on {tag.value} does not enter one row per entry")
    others = {k: v for k, v in (data or {}).items() if k is not tag}
    x_next = w_next.vector()
    residual = (x_next - w_prev.vector()) / dt - op.matrix @ x_next - op.boundary_vector(others)
    return (residual[lift.indices] / lift.data).reshape(2, -1)
