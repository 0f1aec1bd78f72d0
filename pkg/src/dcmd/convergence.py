"""Manufactured-solution refinement ladders for the space-time scheme.

The manufactured pair is separable, f* = exp(-t) a(x) c(y) and
p* = exp(-t) b(x) c(y), with the x-profiles corrected by c1 x^2 and c2 x^2
so that the coupled membrane condition at x = 1 holds exactly. Forcing and
boundary data are derived symbolically.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import sympy

from .errors import ValidationError
from .fields import BoundarySignal, FieldPair, PhysicalParams, weighted_norm
from .grid import Grid, SegmentTag, make_grid
from .operators import COUPLED, DIRICHLET, NEUMANN, BcSpec, assemble
from .timestepping import step_backward_euler

logger = logging.getLogger(__name__)

T, X, Y = sympy.symbols("t x y", real=True)

BC_KINDS = {
    SegmentTag.GAMMA1: (DIRICHLET, DIRICHLET),
    SegmentTag.GAMMA2: (NEUMANN, NEUMANN),
    SegmentTag.GAMMA3: (NEUMANN, NEUMANN),
    SegmentTag.GAMMA4: (COUPLED, COUPLED),
}

# coordinate fixed on each side and the outward derivative there
_SIDES = {
    SegmentTag.GAMMA1: (Y, 0, -1),
    SegmentTag.GAMMA2: (X, 0, -1),
    SegmentTag.GAMMA3: (Y, None, 1),
    SegmentTag.GAMMA4: (X, 1, 1),
}


def _robin_profiles(a_base: sympy.Expr, b_base: sympy.Expr, params: PhysicalParams) -> tuple[sympy.Expr, sympy.Expr]:
    c1, c2 = sympy.symbols("c1 c2")
    a = a_base + c1 * X**2
    b = b_base + c2 * X**2
    jump = (a - b).subs(X, 1)
    equations = [
        sympy.diff(a, X).subs(X, 1) + params.gamma_f * jump,
        sympy.diff(b, X).subs(X, 1) - params.gamma_p * jump,
    ]
    solution = sympy.solve(equations, [c1, c2], dict=True)
    if not solution:
        raise ValidationError("could not fit manufactured profiles to the membrane condition")
    return a.subs(solution[0]), b.subs(solution[0])


@dataclass(frozen=True)
class ManufacturedSolution:
    params: PhysicalParams
    length: float
    f_expr: sympy.Expr
    p_expr: sympy.Expr

    @classmethod
    def polynomial(cls, params: PhysicalParams, length: float = 1.0) -> "ManufacturedSolution":
        """Quadratic profiles, reproduced exactly by the spatial scheme."""
        a, b = _robin_profiles(sympy.Integer(1), sympy.Rational(1, 2), params)
        c = 1 + Y - Y**2 / (2 * length)
        return cls(params, length, sympy.exp(-T) * a * c, sympy.exp(-T) * b * c)

    @classmethod
    def trigonometric(cls, params: PhysicalParams, length: float = 1.0) -> "ManufacturedSolution":
        a, b = _robin_profiles(sympy.cos(sympy.pi * X), sympy.cos(sympy.pi * X) / 2, params)
        c = sympy.cos(sympy.pi * Y / (2 * length)) + 1
        return cls(params, length, sympy.exp(-T) * a * c, sympy.exp(-T) * b * c)

    def _source_expr(self, expr: sympy.Expr, component: int) -> sympy.Expr:
        alpha, velocity, _, reaction = self.params.component(component)
        laplacian = sympy.diff(expr, X, 2) + sympy.diff(expr, Y, 2)
        return sympy.diff(expr, T) - alpha * laplacian + velocity * sympy.diff(expr, Y) + reaction * expr

    @cached_property
    def _exact_fns(self) -> tuple[Callable, Callable]:
        return (sympy.lambdify((T, X, Y), self.f_expr, "numpy"), sympy.lambdify((T, X, Y), self.p_expr, "numpy"))

    @cached_property
    def _source_fns(self) -> tuple[Callable, Callable]:
        return tuple(
            sympy.lambdify((T, X, Y), self._source_expr(expr, c), "numpy")
            for c, expr in enumerate((self.f_expr, self.p_expr))
        )  # type: ignore[return-value]

    def exact(self, grid: Grid, t: float) -> FieldPair:
        ff, fp = self._exact_fns
        return FieldPair.from_functions(grid, lambda x, y: ff(t, x, y), lambda x, y: fp(t, x, y))

    def forcing(self, grid: Grid) -> Callable[[float], FieldPair]:
        sf, sp_ = self._source_fns

        def source(t: float) -> FieldPair:
            return FieldPair.from_functions(grid, lambda x, y: sf(t, x, y), lambda x, y: sp_(t, x, y))

        return source

    def boundary_signal(self, tag: SegmentTag) -> BoundarySignal:
        """Dirichlet values on Gamma1, outward normal derivatives elsewhere."""
        var, fixed, sign = _SIDES[tag]
        fixed = self.length if fixed is None else fixed
        kind = BC_KINDS[tag][0]
        exprs = []
        for expr in (self.f_expr, self.p_expr):
            value = expr if kind is DIRICHLET else sign * sympy.diff(expr, var)
            exprs.append(value.subs(var, fixed))
        free_var = X if var is Y else Y
        fns = [sympy.lambdify((T, free_var), e, "numpy") for e in exprs]

        def evaluate(t: float, s: np.ndarray) -> np.ndarray:
            return np.vstack([np.broadcast_to(fn(t, s), s.shape) for fn in fns])

        return BoundarySignal(tag, evaluate, label=f"manufactured {tag.value}")

    def bc(self) -> BcSpec:
        signals = {tag: self.boundary_signal(tag) for tag in (SegmentTag.GAMMA1, SegmentTag.GAMMA2, SegmentTag.GAMMA3)}
        return BcSpec.build(BC_KINDS, signals)


def solve_error(mms: ManufacturedSolution, grid: Grid, dt: float, horizon: float) -> float:
    """Weighted-norm error at ``horizon`` of the backward Euler solution."""
    if grid.length != mms.length:
        raise ValidationError(f"grid height {grid.length} differs from manufactured height {mms.length}")
    op = assemble(grid, mms.params, mms.bc())
    steps = int(round(horizon / dt))
    source = mms.forcing(grid)
    w = mms.exact(grid, 0.0)
    for n in range(steps):
        w = step_backward_euler(op, w, n * dt, dt, forcing=source)
    return weighted_norm(w - mms.exact(grid, steps * dt), mms.params)


@dataclass(frozen=True)
class LadderResult:
    kind: str
    steps: tuple[float, ...]  # mesh width or time step per level
    errors: tuple[float, ...]

    @property
    def orders(self) -> tuple[float, ...]:
        return observed_orders(self.steps, self.errors)


def observed_orders(steps: Sequence[float], errors: Sequence[float]) -> tuple[float, ...]:
    return tuple(
        math.log(errors[k] / errors[k + 1]) / math.log(steps[k] / steps[k + 1]) for k in range(len(errors) - 1)
    )


def run_space_ladder(
    params: PhysicalParams,
    levels: Sequence[int] = (9, 17, 33),
    horizon: float = 0.25,
    length: float = 1.0,
) -> LadderResult:
    """Refine h with dt = h^2 on the trigonometric solution."""
    if len(levels) < 3:
        raise ValidationError("a refinement ladder needs at least three levels")
    mms = ManufacturedSolution.trigonometric(params, length)
    hs, errors = [], []
    for nx in levels:
        ny = int(round(length * (nx - 1))) + 1
        grid = make_grid(nx, ny, length)
        dt = horizon / round(horizon / grid.hx**2)
        err = solve_error(mms, grid, dt, horizon)
        logger.info("space ladder h=%.5g dt=%.3g error=%.4e", grid.hx, dt, err)
        hs.append(grid.hx)
        errors.append(err)
    return LadderResult("space", tuple(hs), tuple(errors))


def run_time_ladder(
    params: PhysicalParams,
    dts: Sequence[float] = (0.04, 0.02, 0.01),
    horizon: float = 0.4,
    nx: int = 9,
    length: float = 1.0,
) -> LadderResult:
    """Refine dt on the polynomial solution, which carries no spatial error."""
    if len(dts) < 3:
        raise ValidationError("a refinement ladder needs at least three levels")
    mms = ManufacturedSolution.polynomial(params, length)
    ny = int(round(length * (nx - 1))) + 1
    grid = make_grid(nx, ny, length)
    errors = []
    for dt in dts:
        err = solve_error(mms, grid, dt, horizon)
        logger.info("time ladder dt=%.4g error=%.4e", dt, err)
        errors.append(err)
    return LadderResult("time", tuple(float(dt) for dt in dts), tuple(errors))
