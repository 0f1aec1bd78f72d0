"""Uniform grid on (0, 1) x (0, L), boundary segments and quadrature.

Nodal arrays are shaped ``(nx, ny)`` and indexed ``[i, j]`` with
``(x, y) = (i * hx, j * hy)``. Flattening is row-major, so node ``(i, j)``
has flat index ``i * ny + j``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .errors import ValidationError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


class SegmentTag(str, Enum):
    GAMMA1 = "Gamma1"  # y = 0
    GAMMA2 = "Gamma2"  # x = 0
    GAMMA3 = "Gamma3"  # y = L
    GAMMA4 = "Gamma4"  # x = 1

    @property
    def axis(self) -> int:
        """Array axis of the outward normal (0 for x, 1 for y)."""
        return 1 if self in (SegmentTag.GAMMA1, SegmentTag.GAMMA3) else 0

    @property
    def sign(self) -> int:
        """+1 when the outward normal points along the positive axis."""
        return 1 if self in (SegmentTag.GAMMA3, SegmentTag.GAMMA4) else -1

    @property
    def normal(self) -> str:
        return ("+" if self.sign > 0 else "-") + ("y" if self.axis == 1 else "x")


@dataclass(frozen=True, eq=False)
class BoundarySegment:
    """Nodes of one boundary side, ordered by increasing arclength.

    Corners belong to both adjacent segments here; :meth:`Grid.owner`
    gives the precedence partition.
    """

    tag: SegmentTag
    i: NDArray[np.intp]
    j: NDArray[np.intp]
    s: FloatArray = field(repr=False)
    h: float
    inward_step: float  # spacing normal to the segment

    @property
    def size(self) -> int:
        return int(self.i.size)

    @property
    def normal(self) -> str:
        return self.tag.normal

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    length: float

    def __post_init__(self) -> None:
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValidationError(f"node counts must be integers, got nx={self.nx}, ny={self.ny}")
        if self.nx < 3 or self.ny < 3:
            raise ValidationError(f"grid needs at least 3 nodes per direction, got {self.nx}x{self.ny}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValidationError(f"domain height must be positive, got L={self.length}")

    @property
    def hx(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.length / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @cached_property
    def x(self) -> FloatArray:
        return np.arange(self.nx) * self.hx

    @cached_property
    def y(self) -> FloatArray:
        return np.arange(self.ny) * self.hy

    @cached_property
    def mesh(self) -> tuple[FloatArray, FloatArray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def weights(self) -> FloatArray:
        """Trapezoidal node weights: half on edges, a quarter at corners."""
        return np.outer(trapezoid_weights(self.nx, self.hx), trapezoid_weights(self.ny, self.hy))

    def index(self, i, j):
        return np.asarray(i) * self.ny + np.asarray(j)

    def segment(self, tag: SegmentTag) -> BoundarySegment:
        return self._segments[tag]

    @cached_property
    def _segments(self) -> dict[SegmentTag, BoundarySegment]:
        ix = np.arange(self.nx)
        jy = np.arange(self.ny)
        zx = np.zeros(self.nx, dtype=np.intp)
        zy = np.zeros(self.ny, dtype=np.intp)
        return {
            SegmentTag.GAMMA1: BoundarySegment(SegmentTag.GAMMA1, ix, zx, self.x, self.hx, self.hy),
            SegmentTag.GAMMA2: BoundarySegment(SegmentTag.GAMMA2, zy, jy, self.y, self.hy, self.hx),
            SegmentTag.GAMMA3: BoundarySegment(SegmentTag.GAMMA3, ix, zx + self.ny - 1, self.x, self.hx, self.hy),
            SegmentTag.GAMMA4: BoundarySegment(SegmentTag.GAMMA4, zy + self.nx - 1, jy, self.y, self.hy, self.hx),
        }

    @cached_property
    def owner(self) -> dict[tuple[int, int], SegmentTag]:
        """Boundary partition: corners go to the x-normal sides Gamma2/Gamma4."""
        owned: dict[tuple[int, int], SegmentTag] = {}
        for tag in (SegmentTag.GAMMA1, SegmentTag.GAMMA3, SegmentTag.GAMMA2, SegmentTag.GAMMA4):
            seg = self.segment(tag)
            for i, j in zip(seg.i.tolist(), seg.j.tolist()):
                owned[(i, j)] = tag
        return owned


def make_grid(nx: int, ny: int, length_L: float) -> Grid:
    grid = Grid(int(nx), int(ny), float(length_L))
    logger.debug("grid %dx%d on (0,1)x(0,%g): hx=%g hy=%g", grid.nx, grid.ny, grid.length, grid.hx, grid.hy)
    return grid


def l2_norm_domain(grid: Grid, values) -> float:
    """Trapezoidal L2 norm over the domain."""
    arr = np.asarray(values, dtype=float)
    if arr.size != grid.size:
        raise ValidationError(f"field has {arr.size} entries, grid has {grid.size} nodes")
    arr = arr.reshape(grid.shape)
    return float(np.sqrt(np.sum(grid.weights * arr * arr)))


def trapezoid_weights(n: int, h: float) -> FloatArray:
    w = np.full(n, h)
    w[[0, -1]] *= 0.5
    return w


def l2_norm_boundary(segment: BoundarySegment, trace) -> float:
    """Trapezoidal L2 norm of a scalar trace along ``segment``."""
    arr = np.asarray(trace, dtype=float)
    if arr.shape != (segment.size,):
        raise ValidationError(
            f"trace of shape {arr.shape} does not match {segment.tag.value} with {segment.size} nodes"
        )
    return float(np.sqrt(np.sum(trapezoid_weights(segment.size, segment.h) * arr * arr)))
