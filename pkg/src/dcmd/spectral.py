"""Numerical checks of operator properties in the weighted inner product.

All checks act on the free block of an assembled operator (Dirichlet nodes
removed), which is the discrete generator of the homogeneous problem.
"""
from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg as la

from .errors import ValidationError
from .fields import FieldPair, Orientation, PhysicalParams, weighted_norm
from .grid import FloatArray, Grid, SegmentTag
from .operators import COUPLED, DIRICHLET, NEUMANN, BcSpec, BoundaryCondition, DiscreteOperator, assemble, inlet_bc
from .steady import simulate_transient

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4000
RATIO_TOLERANCE = 1e-12


class Direction(str, Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


def free_weights(op: DiscreteOperator, params: Optional[PhysicalParams] = None) -> FloatArray:
    """Inner-product weights of the free unknowns."""
    params = params or op.params
    cf, cp = params.weights
    w = op.grid.weights.ravel()
    return np.concatenate([cf * w, cp * w])[op.free]


def homogeneous_operator(
    grid: Grid, params: PhysicalParams, orientation: Optional[Orientation] = None
) -> DiscreteOperator:
    """Generator with the physical boundary conditions and zero data."""
    return assemble(grid, params, inlet_bc(orientation or params.orientation))


def weighted_asymmetry(
    matrix,
    weights: FloatArray,
    trials: int = 50,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """max |<A a, b>_W - <a, A b>_W| / (|a|_W |b|_W) over random pairs."""
    rng = rng or np.random.default_rng(0)
    n = matrix.shape[0]
    worst = 0.0
    for _ in range(trials):
        a = rng.standard_normal(n)
        b = rng.standard_normal(n)
        lhs = np.dot(weights * (matrix @ a), b)
        rhs = np.dot(weights * a, matrix @ b)
        scale = math.sqrt(np.dot(weights * a, a) * np.dot(weights * b, b))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def check_weighted_symmetry(
    op: DiscreteOperator,
    params: Optional[PhysicalParams] = None,
    trials: int = 50,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Largest relative symmetry defect of the free block in the weighted metric.

    ``params`` overrides the weights only; the operator is used as assembled.
    """
    value = weighted_asymmetry(op.free_block, free_weights(op, params), trials, rng)
    logger.debug("weighted asymmetry %.3e over %d trials", value, trials)
    return value


def rayleigh_quotient(op: DiscreteOperator, w: FieldPair, params: Optional[PhysicalParams] = None) -> float:
    """<A w, w>_W / <w, w>_W on the free nodes."""
    x = w.vector()[op.free]
    weights = free_weights(op, params)
    denom = float(np.dot(weights * x, x))
    if denom == 0.0:
        raise ValidationError("Rayleigh quotient of a state that vanishes on the free nodes")
    return float(np.dot(weights * (op.free_block @ x), x)) / denom


def sine_family(grid: Grid, modes: int = 3) -> list[FieldPair]:
    """sin(m pi x) sin(n pi y / L) test states on both components."""
    X, Y = grid.mesh
    states = []
    for m in range(1, modes + 1):
        for n in range(1, modes + 1):
            shape = np.sin(m * np.pi * X) * np.sin(n * np.pi * Y / grid.length)
            states.append(FieldPair(grid, shape, shape))
            states.append(FieldPair(grid, shape, -0.5 * shape))
    return states


def max_dissipation_bound(op: DiscreteOperator, params: Optional[PhysicalParams] = None) -> float:
    """Largest weighted Rayleigh quotient, from the symmetric generalized eigenproblem."""
    a = op.free_block.toarray()
    weights = free_weights(op, params)
    wa = weights[:, None] * a
    sym = 0.5 * (wa + wa.T)
    eig = la.eigh(sym, np.diag(weights), eigvals_only=True)
    return float(eig[-1])


def check_dissipativity(
    op: DiscreteOperator,
    t: float = 1.0,
    trials: int = 50,
    rng: Optional[np.random.Generator] = None,
    exact: bool = True,
) -> float:
    """Max weighted Rayleigh quotient of A0 + t B0, where ``op`` is A0 + B0.

    Random states, the sine family and, on small grids, the exact bound from
    the symmetric part all contribute to the maximum.
    """
    if not math.isclose(t, 1.0):
        op = assemble(op.grid, op.params.scaled_advection(t), op.bc)
    rng = rng or np.random.default_rng(0)
    worst = -math.inf
    for _ in range(trials):
        vec = np.zeros(op.size)
        vec[op.free] = rng.standard_normal(op.free.size)
        worst = max(worst, rayleigh_quotient(op, FieldPair.from_vector(op.grid, vec)))
    for state in sine_family(op.grid):
        vec = state.vector()
        vec[op.dirichlet] = 0.0
        if np.any(vec):
            worst = max(worst, rayleigh_quotient(op, FieldPair.from_vector(op.grid, vec)))
    if exact and op.free.size <= DENSE_LIMIT:
        worst = max(worst, max_dissipation_bound(op))
    logger.debug("max Rayleigh quotient %.4e at advection scale %g", worst, t)
    return worst


def spectrum(op: DiscreteOperator) -> np.ndarray:
    """Eigenvalues of the dense free block; small grids only."""
    n = op.free.size
    if n > DENSE_LIMIT:
        raise ValidationError(f"dense eigen-analysis limited to {DENSE_LIMIT} unknowns, operator has {n}")
    return la.eigvals(op.free_block.toarray())


def cocurrent_transform(
    w: FieldPair,
    params: PhysicalParams,
    grid: Optional[Grid] = None,
    direction: Direction | str = Direction.FORWARD,
) -> FieldPair:
    """g = f exp(-beta_f y / 2 alpha_f), q = p exp(-beta_p y / 2 alpha_p), or its inverse."""
    if params.orientation is not Orientation.CO_CURRENT:
        raise ValidationError("the diagonalizing change of variables needs co-current flow")
    grid = grid or w.grid
    sign = -1.0 if Direction(direction) is Direction.FORWARD else 1.0
    Y = grid.mesh[1]
    ef = np.exp(sign * params.beta_f * Y / (2.0 * params.alpha_f))
    ep = np.exp(sign * params.beta_p * Y / (2.0 * params.alpha_p))
    return FieldPair(grid, w.f * ef, w.p * ep)


def transformed_system(grid: Grid, params: PhysicalParams) -> DiscreteOperator:
    """Advection-free co-current system with reaction beta^2/(4 alpha) and Robin outlet."""
    kf = params.beta_f / (2.0 * params.alpha_f)
    kp = params.beta_p / (2.0 * params.alpha_p)
    reduced = PhysicalParams(
        alpha_f=params.alpha_f,
        alpha_p=params.alpha_p,
        gamma_f=params.gamma_f,
        gamma_p=params.gamma_p,
        orientation=Orientation.CO_CURRENT,
        reaction_f=params.beta_f**2 / (4.0 * params.alpha_f),
        reaction_p=params.beta_p**2 / (4.0 * params.alpha_p),
    )
    bc = BcSpec.build(
        {
            SegmentTag.GAMMA1: (DIRICHLET, DIRICHLET),
            SegmentTag.GAMMA2: (NEUMANN, NEUMANN),
            SegmentTag.GAMMA3: (BoundaryCondition.robin(-kf), BoundaryCondition.robin(-kp)),
            SegmentTag.GAMMA4: (COUPLED, COUPLED),
        }
    )
    return assemble(grid, reduced, bc)


def default_initial(grid: Grid) -> FieldPair:
    L = grid.length
    return FieldPair.from_functions(
        grid,
        lambda x, y: np.sin(np.pi * y / (2 * L)) * (1.0 + 0.5 * np.cos(np.pi * x)),
        lambda x, y: 0.5 * np.sin(np.pi * y / (2 * L)) + 0.0 * x,
    )


def check_diagonalization(
    params: PhysicalParams,
    grid: Grid,
    horizon: float,
    dt: float,
    initial: Optional[FieldPair] = None,
) -> float:
    """Max over time of |T(w_h) - g_h|_W, T the co-current change of variables.

    ``w_h`` solves the co-current system with advection and ``g_h`` the
    transformed system started from ``T(w_h(0))``; both use zero inlet data.
    """
    if params.orientation is not Orientation.CO_CURRENT:
        raise ValidationError("diagonalization check needs co-current flow", key="orientation")
    kf = params.beta_f / (2.0 * params.alpha_f)
    kp = params.beta_p / (2.0 * params.alpha_p)
    if abs(kf - kp) > RATIO_TOLERANCE:
        raise ValidationError(
            f"beta_f/(2 alpha_f) = {kf:.6g} differs from beta_p/(2 alpha_p) = {kp:.6g}", key="beta_p"
        )
    w0 = initial or default_initial(grid)
    original = simulate_transient(homogeneous_operator(grid, params), w0, dt, horizon)
    transformed = simulate_transient(
        transformed_system(grid, params), cocurrent_transform(w0, params, grid), dt, horizon
    )
    worst = 0.0
    for (_, w), (_, g) in zip(original, transformed):
        worst = max(worst, weighted_norm(cocurrent_transform(w, params, grid) - g, params))
    logger.info("diagonalization discrepancy %.3e on %dx%d, dt=%g", worst, grid.nx, grid.ny, dt)
    return worst


def max_real_eigenvalue(op: DiscreteOperator) -> float:
    return float(np.max(spectrum(op).real))

