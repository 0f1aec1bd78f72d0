"""Tests for backward Euler stepping."""

import dataclasses

import numpy as np
import pytest

from dcmd.errors import ValidationError
from dcmd.fields import BoundarySignal, FieldPair, Orientation, trace, weighted_norm
from dcmd.grid import SegmentTag, make_grid
from dcmd.operators import COUPLED, DIRICHLET, NEUMANN, BcSpec, assemble, inlet_bc
from dcmd.timestepping import BackwardEuler, implied_flux, step_backward_euler, stepper

G1, G2, G3, G4 = SegmentTag.GAMMA1, SegmentTag.GAMMA2, SegmentTag.GAMMA3, SegmentTag.GAMMA4

ALL_NEUMANN = {G1: (NEUMANN, NEUMANN), G2: (NEUMANN, NEUMANN), G3: (NEUMANN, NEUMANN), G4: (COUPLED, COUPLED)}


def _random_free_state(op, rng) -> FieldPair:
    vec = rng.standard_normal(op.size)
    vec[op.dirichlet] = 0.0
    return FieldPair.from_vector(op.grid, vec)


class TestBackwardEuler:
    """Single steps of the implicit scheme."""

    @pytest.mark.parametrize("orientation", list(Orientation))
    def test_contraction_in_weighted_norm(self, advected_params, small_grid, rng, orientation):
        """Test |w_{n+1}|_w <= |w_n|_w for homogeneous data."""
        params = dataclasses.replace(advected_params, orientation=orientation)
        op = assemble(small_grid, params, inlet_bc(orientation))
        w = _random_free_state(op, rng)
        for n in range(5):
            nxt = step_backward_euler(op, w, n * 0.01, 0.01, data={})
            assert weighted_norm(nxt, params) <= weighted_norm(w, params) * (1 + 1e-12)
            w = nxt

    def test_equal_constants_are_stationary(self, baseline_params, small_grid):
        """Test equal constants with zero flux do not move."""
        op = assemble(small_grid, baseline_params, BcSpec.build(ALL_NEUMANN))
        w = FieldPair.constant(small_grid, 35.0, 35.0)
        nxt = step_backward_euler(op, w, 0.0, 0.05, data={})
        np.testing.assert_allclose(nxt.vector(), 35.0, rtol=1e-12)

    def test_uniform_source(self, baseline_params, small_grid):
        """Test a uniform source on both components integrates to dt*s."""
        op = assemble(small_grid, baseline_params, BcSpec.build(ALL_NEUMANN))
        source = FieldPair.constant(small_grid, 2.0, 2.0)
        nxt = step_backward_euler(op, FieldPair.zeros(small_grid), 0.0, 0.1, data={}, forcing=lambda t: source)
        np.testing.assert_allclose(nxt.vector(), 0.2, rtol=1e-10)

    def test_dirichlet_signal_evaluated_at_new_time(self, baseline_params, small_grid):
        """Test operator signals are sampled at t + dt and imposed exactly."""
        ramp = BoundarySignal(G1, lambda t, s: np.array([[t], [2 * t]]))
        bc = BcSpec.build({**ALL_NEUMANN, G1: (DIRICHLET, DIRICHLET)}, {G1: ramp})
        op = assemble(small_grid, baseline_params, bc)
        nxt = step_backward_euler(op, FieldPair.zeros(small_grid), 0.3, 0.1)
        tr = trace(nxt, small_grid.segment(G1))
        np.testing.assert_allclose(tr[0], 0.4, rtol=1e-14)
        np.testing.assert_allclose(tr[1], 0.8, rtol=1e-14)

    def test_rejects_nonpositive_dt(self, baseline_params, tiny_grid):
        """Test dt <= 0 is a validation error."""
        op = assemble(tiny_grid, baseline_params, BcSpec.build(ALL_NEUMANN))
        with pytest.raises(ValidationError):
            BackwardEuler(op, 0.0)

    def test_bicgstab_matches_direct(self, baseline_params, small_grid, rng):
        """Test the iterative solver reproduces the factorized step."""
        op = assemble(small_grid, baseline_params, inlet_bc(Orientation.COUNTER_CURRENT))
        w = _random_free_state(op, rng)
        direct = step_backward_euler(op, w, 0.0, 0.01, data={})
        iterative = step_backward_euler(op, w, 0.0, 0.01, data={}, method="bicgstab")
        np.testing.assert_allclose(iterative.vector(), direct.vector(), atol=1e-8)

    def test_factorization_cache_is_bounded(self, baseline_params):
        """Test a ladder of grids does not keep every factorization alive."""
        bc = BcSpec.build(ALL_NEUMANN)
        for n in range(5, 15):
            grid = make_grid(n, 2 * n - 1, 2.0)
            step_backward_euler(assemble(grid, baseline_params, bc), FieldPair.zeros(grid), 0.0, 0.01)
        assert stepper.cache_info().currsize <= 6


class TestImpliedFlux:
    """Flux data recovered from a completed step."""

    def test_recovers_the_flux_of_a_step(self, baseline_params, small_grid, rng):
        op = assemble(small_grid, baseline_params, BcSpec.build(ALL_NEUMANN))
        w = _random_free_state(op, rng)
        flux = rng.standard_normal((2, small_grid.nx))
        nxt = step_backward_euler(op, w, 0.0, 0.01, data={G3: flux})
        np.testing.assert_allclose(implied_flux(op, G3, w, nxt, 0.01), flux, atol=1e-8)

    def test_other_segments_data_is_accounted_for(self, baseline_params, small_grid, rng):
        op = assemble(small_grid, baseline_params, BcSpec.build(ALL_NEUMANN))
        w = _random_free_state(op, rng)
        data = {G1: rng.standard_normal((2, small_grid.nx)), G3: rng.standard_normal((2, small_grid.nx))}
        nxt = step_backward_euler(op, w, 0.0, 0.01, data=data)
        np.testing.assert_allclose(implied_flux(op, G3, w, nxt, 0.01, data=data), data[G3], atol=1e-8)

    def test_segment_without_flux_data(self, baseline_params, tiny_grid):
        bc = BcSpec.build({**ALL_NEUMANN, G3: (DIRICHLET, DIRICHLET)})
        op = assemble(tiny_grid, baseline_params, bc)
        w = FieldPair.zeros(tiny_grid)
        with pytest.raises(ValidationError):
            implied_flux(op, G3, w, w, 0.01)
