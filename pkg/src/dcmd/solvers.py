"""Sparse linear solves held to a relative residual contract."""
from __future__ import annotations

import logging
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import LinearSolveError, SingularSystemError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-10


class SolverMethod(str, Enum):
    DIRECT = "direct"
    BICGSTAB = "bicgstab"


def relative_residual(matrix, x: np.ndarray, rhs: np.ndarray) -> float:
    scale = float(np.linalg.norm(rhs))
    res = float(np.linalg.norm(rhs - matrix @ x))
    if scale == 0.0:
        return res
    return res / scale


class Factorization:
    """SuperLU factorization with residual checking and one refinement sweep."""

    def __init__(self, matrix, rtol: float = DEFAULT_RTOL) -> None:
        self.matrix = sp.csc_matrix(matrix)
        self.rtol = rtol
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValidationError(f"matrix must be square, got {self.matrix.shape}")
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:
            raise SingularSystemError(f"factorization failed: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x = self._lu.solve(rhs)
        res = relative_residual(self.matrix, x, rhs)
        if not res <= self.rtol:
            x = x + self._lu.solve(rhs - self.matrix @ x)
            res = relative_residual(self.matrix, x, rhs)
        if not np.isfinite(x).all():
            raise SingularSystemError("direct solve produced non-finite values", residual=res)
        if not res <= self.rtol:
            raise LinearSolveError("direct solve missed residual tolerance", residual=res)
        logger.debug("direct solve, relative residual %.2e", res)
        return x


class IterativeSolver:
    """BiCGSTAB preconditioned by an incomplete LU factorization."""

    def __init__(self, matrix, rtol: float = DEFAULT_RTOL, maxiter: Optional[int] = None) -> None:
        self.matrix = sp.csc_matrix(matrix)
        self.rtol = rtol
        self.maxiter = maxiter or 10 * self.matrix.shape[0]
        try:
            ilu = spla.spilu(self.matrix, drop_tol=1e-5, fill_factor=20)
        except RuntimeError as exc:
            raise SingularSystemError(f"incomplete factorization failed: {exc}") from exc
        self._precond = spla.LinearOperator(self.matrix.shape, ilu.solve)

    def solve(self, rhs: np.ndarray, x0: Optional[np.ndarray] = None) -> np.ndarray:
        iterations = 0

        def count(_xk) -> None:
            nonlocal iterations
            iterations += 1

        x, info = spla.bicgstab(
            self.matrix,
            rhs,
            x0=x0,
            rtol=self.rtol,
            atol=0.0,
            maxiter=self.maxiter,
            M=self._precond,
            callback=count,
        )
        res = relative_residual(self.matrix, x, rhs)
        if info < 0:
            raise LinearSolveError("BiCGSTAB breakdown", residual=res, iterations=iterations)
        if info > 0 or not res <= self.rtol:
            raise LinearSolveError(
                f"BiCGSTAB did not converge in {iterations} iterations", residual=res, iterations=iterations
            )
        logger.debug("bicgstab converged in %d iterations, relative residual %.2e", iterations, res)
        return x


def make_solver(matrix, method: SolverMethod | str = SolverMethod.DIRECT, rtol: float = DEFAULT_RTOL):
    method = SolverMethod(method)
    if method is SolverMethod.DIRECT:
        return Factorization(matrix, rtol=rtol)
    return IterativeSolver(matrix, rtol=rtol)


def solve_linear(
    matrix,
    rhs,
    method: SolverMethod | str = SolverMethod.DIRECT,
    rtol: float = DEFAULT_RTOL,
    maxiter: Optional[int] = None,
) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` with ``|rhs - matrix @ x| <= rtol * |rhs|``."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (matrix.shape[0],):
        raise ValidationError(f"rhs of shape {rhs.shape} does not match matrix {matrix.shape}")
    if SolverMethod(method) is SolverMethod.BICGSTAB:
        return IterativeSolver(matrix, rtol=rtol, maxiter=maxiter).solve(rhs)
    return Factorization(matrix, rtol=rtol).solve(rhs)
