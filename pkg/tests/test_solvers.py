"""Tests for the direct and iterative linear solvers."""

import numpy as np
import pytest
import scipy.sparse as sp

from dcmd.errors import LinearSolveError, SimulationError, SingularSystemError, ValidationError
from dcmd.fields import Orientation
from dcmd.operators import assemble, inlet_bc
from dcmd.solvers import Factorization, SolverMethod, relative_residual, solve_linear


def _laplacian_1d(n: int) -> sp.csr_matrix:
    return sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n), format="csr")


class TestSolveLinear:
    """Residual contract of both methods."""

    @pytest.mark.parametrize("method", [SolverMethod.DIRECT, SolverMethod.BICGSTAB])
    def test_residual_contract(self, method, rng):
        """Test the relative residual stays below 1e-10."""
        matrix = _laplacian_1d(200) + 0.1 * sp.identity(200)
        rhs = rng.standard_normal(200)
        x = solve_linear(matrix, rhs, method=method)
        assert relative_residual(matrix, x, rhs) <= 1e-10

    def test_methods_agree_on_stationary_block(self, baseline_params, small_grid, rng):
        """Test direct and BiCGSTAB solutions of the free block coincide."""
        op = assemble(small_grid, baseline_params, inlet_bc(Orientation.COUNTER_CURRENT))
        rhs = rng.standard_normal(op.free.size)
        direct = solve_linear(op.free_block, rhs, method="direct")
        iterative = solve_linear(op.free_block, rhs, method="bicgstab")
        np.testing.assert_allclose(iterative, direct, rtol=1e-5, atol=1e-6)

    def test_singular_matrix(self):
        """Test an exactly singular matrix is reported."""
        matrix = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SingularSystemError):
            Factorization(matrix).solve(np.array([1.0, 2.0]))

    def test_rhs_shape(self):
        """Test a right-hand side of the wrong length is refused."""
        with pytest.raises(ValidationError):
            solve_linear(_laplacian_1d(5), np.ones(4))

    def test_unknown_method(self):
        """Test method names are validated."""
        with pytest.raises(ValueError):
            solve_linear(_laplacian_1d(5), np.ones(5), method="gmres")


class TestErrors:
    """Diagnostics carried by numerical errors."""

    def test_linear_solve_error_reports_residual(self):
        """Test the message names the relative residual."""
        exc = LinearSolveError("did not converge", residual=3.5e-4, iterations=12)
        assert "relative residual 3.500e-04" in str(exc)
        assert exc.iterations == 12

    def test_simulation_error_reports_step(self):
        """Test the message starts with the failing step."""
        exc = SimulationError("state became non-finite", step=42)
        assert str(exc).startswith("step 42")
