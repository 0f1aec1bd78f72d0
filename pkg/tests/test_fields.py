"""Tests for field pairs, the weighted inner product and boundary operators."""

import math

import numpy as np
import pytest

from dcmd.errors import ValidationError
from dcmd.fields import (
    BoundarySignal,
    FieldPair,
    Orientation,
    PhysicalParams,
    boundary_norm,
    normal_derivative,
    trace,
    weighted_inner_product,
    weighted_norm,
)
from dcmd.grid import SegmentTag, make_grid


class TestPhysicalParams:
    """Coefficient validation and derived quantities."""

    def test_baseline_constants(self, baseline_params):
        """Test the baseline coefficients and zero advection."""
        assert (baseline_params.alpha_f, baseline_params.alpha_p) == (3.0, 3.5)
        assert (baseline_params.gamma_f, baseline_params.gamma_p) == (0.2, 0.1)
        assert baseline_params.beta_f == baseline_params.beta_p == 0.0

    @pytest.mark.parametrize("name", ["alpha_f", "alpha_p", "gamma_f", "gamma_p"])
    def test_rejects_nonpositive_diffusivity_and_transfer(self, name):
        """Test each strictly positive coefficient names itself on failure."""
        values = dict(alpha_f=3.0, alpha_p=3.5, gamma_f=0.2, gamma_p=0.1)
        values[name] = 0.0
        with pytest.raises(ValidationError) as info:
            PhysicalParams(**values)
        assert info.value.key == name

    def test_permeate_velocity_sign_follows_orientation(self, advected_params):
        """Test beta_p is a speed and the orientation picks the direction."""
        assert advected_params.velocity_f == 0.6
        assert advected_params.velocity_p == -0.7
        co = PhysicalParams(3.0, 3.5, 0.2, 0.1, beta_f=0.6, beta_p=0.7, orientation=Orientation.CO_CURRENT)
        assert co.velocity_p == 0.7

    def test_scaled_advection(self, advected_params):
        """Test A0 + t B0 scales both velocities."""
        half = advected_params.scaled_advection(0.5)
        assert (half.beta_f, half.beta_p) == (0.3, 0.35)
        with pytest.raises(ValidationError):
            advected_params.scaled_advection(1.5)


class TestFieldPair:
    """Construction and arithmetic."""

    def test_vector_layout(self, tiny_grid):
        """Test the state vector is f then p, each row-major."""
        w = FieldPair.from_functions(tiny_grid, lambda x, y: x + 10 * y, lambda x, y: -x)
        vec = w.vector()
        assert vec.shape == (2 * tiny_grid.size,)
        assert vec[tiny_grid.index(1, 2)] == pytest.approx(w.f[1, 2])
        assert vec[tiny_grid.size + tiny_grid.index(3, 0)] == pytest.approx(w.p[3, 0])
        back = FieldPair.from_vector(tiny_grid, vec)
        np.testing.assert_array_equal(back.f, w.f)

    def test_shape_mismatch(self, tiny_grid):
        """Test arrays that do not match the grid are refused."""
        with pytest.raises(ValidationError):
            FieldPair(tiny_grid, np.zeros((3, 3)), np.zeros(tiny_grid.shape))

    def test_grid_mismatch_in_arithmetic(self, tiny_grid, small_grid):
        """Test fields on different grids cannot be combined."""
        with pytest.raises(ValidationError):
            FieldPair.zeros(tiny_grid) - FieldPair.zeros(small_grid)

    def test_constant_function_broadcasts(self, tiny_grid):
        """Test a function returning a scalar fills the grid."""
        w = FieldPair.from_functions(tiny_grid, lambda x, y: 2.0, lambda x, y: 0.0)
        assert np.all(w.f == 2.0) and np.all(w.p == 0.0)


class TestWeightedInnerProduct:
    """The alpha*gamma-weighted pairing."""

    def test_constant_pair(self, baseline_params, small_grid):
        """Test <(1,1),(1,1)>_w = (alpha_p gamma_p + alpha_f gamma_f) * area."""
        one = FieldPair.constant(small_grid, 1.0, 1.0)
        expected = (3.5 * 0.1 + 3.0 * 0.2) * 2.0
        assert weighted_inner_product(one, one, baseline_params) == pytest.approx(expected)
        assert weighted_norm(one, baseline_params) == pytest.approx(math.sqrt(expected))

    def test_symmetric_and_bilinear(self, baseline_params, tiny_grid, rng):
        """Test <a,b> = <b,a> and linearity in the first slot."""
        a = FieldPair(tiny_grid, rng.standard_normal(tiny_grid.shape), rng.standard_normal(tiny_grid.shape))
        b = FieldPair(tiny_grid, rng.standard_normal(tiny_grid.shape), rng.standard_normal(tiny_grid.shape))
        ab = weighted_inner_product(a, b, baseline_params)
        assert ab == pytest.approx(weighted_inner_product(b, a, baseline_params))
        assert weighted_inner_product(a * 2.0, b, baseline_params) == pytest.approx(2.0 * ab)


class TestBoundaryOperators:
    """Traces, one-sided normal derivatives and boundary norms."""

    def test_trace_of_coordinates(self, small_grid):
        """Test the Gamma4 trace of f = y is the arclength and p = x is one."""
        w = FieldPair.from_functions(small_grid, lambda x, y: y, lambda x, y: x)
        seg = small_grid.segment(SegmentTag.GAMMA4)
        tr = trace(w, seg)
        assert tr.shape == (2, seg.size)
        np.testing.assert_allclose(tr[0], seg.s)
        np.testing.assert_allclose(tr[1], 1.0)

    @pytest.mark.parametrize(
        "tag, expected",
        [
            (SegmentTag.GAMMA1, -2.0),  # -d/dy of x^2 + 2y
            (SegmentTag.GAMMA3, 2.0),
            (SegmentTag.GAMMA2, 0.0),  # -d/dx at x = 0
        ],
    )
    def test_normal_derivative_exact_on_quadratics(self, small_grid, tag, expected):
        """Test the one-sided formula is exact for quadratics and points outward."""
        w = FieldPair.from_functions(small_grid, lambda x, y: x**2 + 2 * y, lambda x, y: y**2)
        dn = normal_derivative(w, small_grid.segment(tag))
        np.testing.assert_allclose(dn[0], expected, atol=1e-10)

    def test_normal_derivative_on_membrane(self, small_grid):
        """Test d/dnu = d/dx on Gamma4 for x^2."""
        w = FieldPair.from_functions(small_grid, lambda x, y: x**2, lambda x, y: -3 * x)
        dn = normal_derivative(w, small_grid.segment(SegmentTag.GAMMA4))
        np.testing.assert_allclose(dn[0], 2.0, atol=1e-10)
        np.testing.assert_allclose(dn[1], -3.0, atol=1e-10)

    def test_boundary_norm_combines_components(self):
        """Test sqrt(|c1|^2 + |c2|^2) for constants on a unit segment."""
        grid = make_grid(11, 11, 1.0)
        seg = grid.segment(SegmentTag.GAMMA1)
        assert boundary_norm(seg, np.vstack([3 * np.ones(11), 4 * np.ones(11)])) == pytest.approx(5.0)


class TestBoundarySignal:
    """Sampling time-dependent boundary data."""

    def test_sample_broadcasts(self, small_grid):
        """Test a per-component column broadcasts along the segment."""
        sig = BoundarySignal.constant(SegmentTag.GAMMA3, 1.5, -2.0)
        values = sig.sample(0.3, small_grid.segment(SegmentTag.GAMMA3))
        assert values.shape == (2, small_grid.nx)
        assert np.all(values[0] == 1.5) and np.all(values[1] == -2.0)

    def test_sample_on_wrong_segment(self, small_grid):
        """Test a Gamma1 signal cannot be sampled on Gamma3."""
        sig = BoundarySignal.zero(SegmentTag.GAMMA1)
        with pytest.raises(ValidationError):
            sig.sample(0.0, small_grid.segment(SegmentTag.GAMMA3))

    def test_bad_shape(self, small_grid):
        """Test an evaluator returning the wrong shape is reported."""
        sig = BoundarySignal(SegmentTag.GAMMA1, lambda t, s: np.zeros(3))
        with pytest.raises(ValidationError):
            sig.sample(0.0, small_grid.segment(SegmentTag.GAMMA1))
