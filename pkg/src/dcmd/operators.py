"""Sparse finite-difference assembly of the coupled advection-diffusion operator.

Each component c in {f, p} obeys

    d/dt w_c = alpha_c * Lap(w_c) - v_c * d/dy w_c - kappa_c * w_c

on a uniform grid. Flux-type boundary conditions are imposed by
eliminating a ghost node: with g the outward normal derivative,
``w_ghost = w_mirror + 2 h g``. Dirichlet rows are identity rows; their data
lives in the boundary vector.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .fields import AdvectionScheme, BoundarySignal, FieldPair, Orientation, PhysicalParams
from .grid import FloatArray, Grid, SegmentTag

logger = logging.getLogger(__name__)

SEGMENTS = (SegmentTag.GAMMA1, SegmentTag.GAMMA2, SegmentTag.GAMMA3, SegmentTag.GAMMA4)

# Dirichlet data priority at shared corners.
DIRICHLET_PRIORITY = (SegmentTag.GAMMA4, SegmentTag.GAMMA2, SegmentTag.GAMMA3, SegmentTag.GAMMA1)


class BcKind(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    ROBIN = "robin"
    ROBIN_COUPLED = "robin-coupled"


@dataclass(frozen=True)
class BoundaryCondition:
    kind: BcKind
    kappa: float = 0.0

    @classmethod
    def dirichlet(cls) -> "BoundaryCondition":
        return cls(BcKind.DIRICHLET)

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls(BcKind.NEUMANN)

    @classmethod
    def robin(cls, kappa: float) -> "BoundaryCondition":
        """dw/dnu = kappa * w."""
        return cls(BcKind.ROBIN, float(kappa))

    @classmethod
    def robin_coupled(cls) -> "BoundaryCondition":
        return cls(BcKind.ROBIN_COUPLED)


DIRICHLET = BoundaryCondition.dirichlet()
NEUMANN = BoundaryCondition.neumann()
COUPLED = BoundaryCondition.robin_coupled()

ConditionPair = tuple[BoundaryCondition, BoundaryCondition]


@dataclass(frozen=True)
class BcSpec:
    """Boundary conditions per segment and component, plus optional signals.

    ``conditions`` is ordered like :data:`SEGMENTS`. Signals supply the data
    of Dirichlet and Neumann entries when :meth:`DiscreteOperator.rhs_bc` is
    used; segments without a signal get zero data.
    """

    conditions: tuple[ConditionPair, ConditionPair, ConditionPair, ConditionPair]
    signals: tuple[tuple[SegmentTag, BoundarySignal], ...] = ()

    @classmethod
    def build(
        cls,
        conditions: Mapping[SegmentTag, ConditionPair],
        signals: Optional[Mapping[SegmentTag, BoundarySignal]] = None,
    ) -> "BcSpec":
        missing = [tag.value for tag in SEGMENTS if tag not in conditions]
        if missing:
            raise ValidationError(f"boundary conditions missing for {', '.join(missing)}")
        spec = cls(
            tuple(tuple(conditions[tag]) for tag in SEGMENTS),  # type: ignore[arg-type]
            tuple((tag, sig) for tag, sig in (signals or {}).items()),
        )
        spec.validate()
        return spec

    def validate(self) -> None:
        for tag, pair in zip(SEGMENTS, self.conditions):
            if len(pair) != 2:
                raise ValidationError(f"{tag.value} needs one condition per component")
            coupled = [bc.kind is BcKind.ROBIN_COUPLED for bc in pair]
            if any(coupled) and tag is not SegmentTag.GAMMA4:
                raise ValidationError(f"coupled Robin condition is only legal on Gamma4, not {tag.value}")
            if any(coupled) and not all(coupled):
                raise ValidationError("coupled Robin condition must be set for both components on Gamma4")
        for tag, sig in self.signals:
            if sig.tag is not tag:
                raise ValidationError(f"signal tagged {sig.tag.value} attached to {tag.value}")

    def condition(self, tag: SegmentTag, component: int) -> BoundaryCondition:
        return self.conditions[SEGMENTS.index(tag)][component]


def inlet_bc(
    orientation: Orientation | str,
    signals: Optional[Mapping[SegmentTag, BoundarySignal]] = None,
) -> BcSpec:
    """Physical boundary configuration of the membrane module.

    The feed enters at y = 0 with a prescribed temperature and leaves through
    a zero-flux outlet at y = L. The permeate inlet is y = L when
    counter-current and y = 0 when co-current. Both walls at x = 0 are
    insulated and x = 1 is the membrane.
    """
    orientation = Orientation(orientation)
    if orientation is Orientation.COUNTER_CURRENT:
        gamma1, gamma3 = (DIRICHLET, NEUMANN), (NEUMANN, DIRICHLET)
    else:
        gamma1, gamma3 = (DIRICHLET, DIRICHLET), (NEUMANN, NEUMANN)
    return BcSpec.build(
        {
            SegmentTag.GAMMA1: gamma1,
            SegmentTag.GAMMA2: (NEUMANN, NEUMANN),
            SegmentTag.GAMMA3: gamma3,
            SegmentTag.GAMMA4: (COUPLED, COUPLED),
        },
        signals,
    )


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    grid: Grid
    params: PhysicalParams
    bc: BcSpec
    matrix: sp.csr_matrix
    dirichlet_mask: np.ndarray
    # segment -> sparse map from the flattened (2, n) data array to the boundary vector
    flux_lift: Mapping[SegmentTag, sp.csr_matrix]
    # segment -> (rows, positions in the flattened data array)
    dirichlet_rows: Mapping[SegmentTag, tuple[np.ndarray, np.ndarray]]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet_mask)

    @cached_property
    def dirichlet(self) -> np.ndarray:
        return np.flatnonzero(self.dirichlet_mask)

    @cached_property
    def free_block(self) -> sp.csr_matrix:
        return self.matrix[self.free][:, self.free].tocsr()

    @cached_property
    def coupling_block(self) -> sp.csr_matrix:
        return self.matrix[self.free][:, self.dirichlet].tocsr()

    def boundary_vector(self, data: Optional[Mapping[SegmentTag, FloatArray]] = None) -> FloatArray:
        """Affine boundary contribution for explicit ``(2, n)`` data per segment.

        Free rows receive the flux lift; Dirichlet rows receive the data.
        Missing segments count as zero data.
        """
        b = np.zeros(self.size)
        for tag, values in (data or {}).items():
            seg = self.grid.segment(tag)
            arr = np.asarray(values, dtype=float)
            if arr.ndim == 1:
                arr = np.vstack([arr, np.zeros_like(arr)])
            if arr.shape != (2, seg.size):
                raise ValidationError(
                    f"boundary data for {tag.value} has shape {arr.shape}, expected (2, {seg.size})"
                )
            flat = arr.ravel()
            lift = self.flux_lift.get(tag)
            if lift is not None:
                b += lift @ flat
            rows, src = self.dirichlet_rows.get(tag, (None, None))
            if rows is not None and rows.size:
                b[rows] = flat[src]
        return b

    def sample_data(self, t: float) -> dict[SegmentTag, FloatArray]:
        return {tag: sig.sample(t, self.grid.segment(tag)) for tag, sig in self.bc.signals}

    def rhs_bc(self, t: float) -> FloatArray:
        return self.boundary_vector(self.sample_data(t))

    def apply(self, w: FieldPair, t: float = 0.0, data=None) -> FieldPair:
        """A w + b on free nodes; Dirichlet entries are zero."""
        b = self.rhs_bc(t) if data is None else self.boundary_vector(data)
        out = self.matrix @ w.vector() + b
        out[self.dirichlet] = 0.0
        return FieldPair.from_vector(self.grid, out)


def _stencil_1d(k: int, h: float, alpha: float, velocity: float, scheme: AdvectionScheme) -> dict[int, float]:
    """Coefficients of alpha d2/ds2 - velocity d/ds at node k, keyed by neighbour index.

    Out-of-range indices denote ghost nodes.
    """
    coeffs = {k - 1: alpha / h**2, k: -2.0 * alpha / h**2, k + 1: alpha / h**2}
    if velocity:
        if scheme is AdvectionScheme.CENTERED:
            coeffs[k + 1] -= velocity / (2.0 * h)
            coeffs[k - 1] += velocity / (2.0 * h)
        elif velocity > 0:
            coeffs[k] -= velocity / h
            coeffs[k - 1] += velocity / h
        else:
            coeffs[k + 1] -= velocity / h
            coeffs[k] += velocity / h
    return coeffs


def _ghost_segment(axis: int, target: int) -> SegmentTag:
    if axis == 0:
        return SegmentTag.GAMMA2 if target < 0 else SegmentTag.GAMMA4
    return SegmentTag.GAMMA1 if target < 0 else SegmentTag.GAMMA3


def _dirichlet_owner(grid: Grid, bc: BcSpec, i: int, j: int, c: int) -> Optional[SegmentTag]:
    through = []
    if j == 0:
        through.append(SegmentTag.GAMMA1)
    if i == 0:
        through.append(SegmentTag.GAMMA2)
    if j == grid.ny - 1:
        through.append(SegmentTag.GAMMA3)
    if i == grid.nx - 1:
        through.append(SegmentTag.GAMMA4)
    dirichlet = [tag for tag in through if bc.condition(tag, c).kind is BcKind.DIRICHLET]
    if not dirichlet:
        return None
    return min(dirichlet, key=DIRICHLET_PRIORITY.index)


class _Triplets:
    def __init__(self) -> None:
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []

    def add(self, row: int, col: int, value: float) -> None:
        self.rows.append(row)
        self.cols.append(col)
        self.vals.append(value)

    def to_csr(self, shape: tuple[int, int]) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=shape)


def assemble(grid: Grid, params: PhysicalParams, bc: BcSpec) -> DiscreteOperator:
    """Assemble A_h = alpha Lap - v d/dy - kappa with the conditions in ``bc``."""
    bc.validate()
    nx, ny, npts = grid.nx, grid.ny, grid.size
    size = 2 * npts
    seg_size = {tag: grid.segment(tag).size for tag in SEGMENTS}
    entries = _Triplets()
    lifts = {tag: _Triplets() for tag in SEGMENTS}
    dirichlet_mask = np.zeros(size, dtype=bool)
    dirichlet_src: dict[SegmentTag, tuple[list[int], list[int]]] = {tag: ([], []) for tag in SEGMENTS}

    for c in (0, 1):
        alpha, velocity, gamma, reaction = params.component(c)
        offset = c * npts
        other = (1 - c) * npts
        for i in range(nx):
            for j in range(ny):
                row = offset + i * ny + j
                owner = _dirichlet_owner(grid, bc, i, j, c)
                if owner is not None:
                    dirichlet_mask[row] = True
                    entries.add(row, row, 1.0)
                    pos = i if owner.axis == 1 else j
                    dirichlet_src[owner][0].append(row)
                    dirichlet_src[owner][1].append(c * seg_size[owner] + pos)
                    continue

                diag = -reaction
                for axis, k, n, h in ((0, i, nx, grid.hx), (1, j, ny, grid.hy)):
                    v_axis = velocity if axis == 1 else 0.0
                    for target, coef in _stencil_1d(k, h, alpha, v_axis, params.advection_scheme).items():
                        if target == k:
                            diag += coef
                            continue
                        inside = 0 <= target < n
                        # ghost node: w_ghost = w_mirror + 2 h g
                        col = target if inside else 2 * k - target
                        entries.add(row, offset + (col * ny + j if axis == 0 else i * ny + col), coef)
                        if inside:
                            continue
                        tag = _ghost_segment(axis, target)
                        gcoef = 2.0 * h * coef
                        cond = bc.condition(tag, c)
                        if cond.kind is BcKind.NEUMANN:
                            pos = j if axis == 0 else i
                            lifts[tag].add(row, c * seg_size[tag] + pos, gcoef)
                        elif cond.kind is BcKind.ROBIN:
                            diag += gcoef * cond.kappa
                        else:  # coupled: g = -gamma_c (w_c - w_other)
                            diag -= gcoef * gamma
                            entries.add(row, other + i * ny + j, gcoef * gamma)
                entries.add(row, row, diag)

    matrix = entries.to_csr((size, size))
    flux_lift = {tag: lifts[tag].to_csr((size, 2 * seg_size[tag])) for tag in SEGMENTS if lifts[tag].rows}
    dirichlet_rows = {
        tag: (np.asarray(rows, dtype=np.intp), np.asarray(src, dtype=np.intp))
        for tag, (rows, src) in dirichlet_src.items()
        if rows
    }
    logger.debug(
        "assembled %dx%d operator, nnz=%d, %d Dirichlet rows",
        size,
        size,
        matrix.nnz,
        int(dirichlet_mask.sum()),
    )
    return DiscreteOperator(grid, params, bc, matrix, dirichlet_mask, flux_lift, dirichlet_rows)
