"""Tests for expressions, scenario documents and presets."""

import math

import numpy as np
import pytest

from dcmd.adrc import Actuation
from dcmd.errors import ScenarioParseError, ValidationError
from dcmd.expressions import (
    Expression,
    check_expression,
    field_from_expressions,
    signal_from_expressions,
    signal_from_table,
)
from dcmd.fields import Orientation
from dcmd.grid import SegmentTag, make_grid
from dcmd.scenario import (
    ZERO_SIGNAL,
    SignalSpec,
    build_scenario,
    load_config,
    load_preset,
    parse_scenario,
    preset_text,
    to_toml,
)

MINIMAL = """
[geometry]
nx = 5
ny = 9
length = 2.0

[physics]
alpha_f = 3.0
alpha_p = 3.5
gamma_f = 0.2
gamma_p = 0.1

[time]
dt = 0.01
horizon = 0.05
"""


def with_section(extra: str) -> str:
    return MINIMAL + "\n" + extra + "\n"


class TestExpression:
    """Whitelisted arithmetic in t, x and y."""

    def test_evaluates_on_arrays(self):
        expr = Expression("2*x + t - y**2")
        np.testing.assert_allclose(expr(1.0, np.array([0.0, 1.0]), 2.0), [-3.0, -1.0])

    def test_constant_broadcasts(self):
        out = Expression("3")(0.0, np.zeros((2, 3)), 0.0)
        assert out.shape == (2, 3)
        np.testing.assert_array_equal(out, 3.0)

    def test_named_constants_and_functions(self):
        out = Expression("pi + e + sqrt(4) + exp(0) + cos(0) + sin(0)")(0.0, 0.0, 0.0)
        assert float(out) == pytest.approx(math.pi + math.e + 4.0)

    @pytest.mark.parametrize(
        "text",
        ["__import__('os')", "x.real", "lambda: 1", "log(x)", "'abc'", "x if y else t", "sin(x, y)", "True", "x^2"],
    )
    def test_rejected(self, text):
        with pytest.raises(ScenarioParseError):
            check_expression(text)

    def test_syntax_error_reports_column(self):
        with pytest.raises(ScenarioParseError) as info:
            Expression("sin(", key="signals.reference[0]")
        assert info.value.column is not None
        assert info.value.key == "signals.reference[0]"
        assert "signals.reference[0]" in str(info.value)

    def test_unknown_name_reports_position(self):
        with pytest.raises(ScenarioParseError) as info:
            check_expression("x + z")
        assert info.value.column == 5

    def test_empty(self):
        with pytest.raises(ScenarioParseError):
            Expression("  ")

    @pytest.mark.parametrize("text", ["9**9**9**9", "(x**2)**3", "2**(x**2)"])
    def test_nested_powers_rejected(self, text):
        with pytest.raises(ScenarioParseError) as info:
            Expression(text)
        assert "nested power" in str(info.value)

    def test_large_constant_exponent_rejected(self):
        with pytest.raises(ScenarioParseError) as info:
            Expression("10**1000")
        assert info.value.column == 5

    def test_flat_powers_allowed(self):
        out = Expression("x**2 + 2**-3 + (t + 1)**0.5")(3.0, 2.0, 0.0)
        assert float(out) == pytest.approx(4.0 + 0.125 + 2.0)


class TestSignals:
    """Boundary signals built from expressions and tables."""

    def test_gamma3_expression_uses_x(self):
        grid = make_grid(5, 9, 2.0)
        seg = grid.segment(SegmentTag.GAMMA3)
        sig = signal_from_expressions(SegmentTag.GAMMA3, ("x*t", "y"), 2.0, "signals.reference")
        values = sig.sample(2.0, seg)
        np.testing.assert_allclose(values[0], 2.0 * grid.x)
        np.testing.assert_allclose(values[1], 2.0)

    def test_gamma2_expression_uses_y(self):
        grid = make_grid(5, 9, 2.0)
        seg = grid.segment(SegmentTag.GAMMA2)
        sig = signal_from_expressions(SegmentTag.GAMMA2, ("y", "x"), 2.0, "k")
        values = sig.sample(0.0, seg)
        np.testing.assert_allclose(values[0], grid.y)
        np.testing.assert_allclose(values[1], 0.0)

    def test_expression_pair_length(self):
        with pytest.raises(ValidationError):
            signal_from_expressions(SegmentTag.GAMMA1, ("0",), 2.0, "signals.disturbance")

    def test_table_interpolates_and_holds(self):
        grid = make_grid(5, 9, 2.0)
        seg = grid.segment(SegmentTag.GAMMA1)
        sig = signal_from_table(SegmentTag.GAMMA1, (0.0, 1.0, 2.0), ((0.0, 10.0, 10.0), (5.0, 5.0, 0.0)), "d")
        np.testing.assert_allclose(sig.sample(0.5, seg), [[5.0] * 5, [5.0] * 5])
        np.testing.assert_allclose(sig.sample(3.0, seg), [[10.0] * 5, [0.0] * 5])

    def test_table_times_must_increase(self):
        with pytest.raises(ValidationError) as info:
            signal_from_table(SegmentTag.GAMMA1, (0.0, 0.0), ((1.0, 2.0), (1.0, 2.0)), "signals.noise")
        assert info.value.key == "signals.noise.times"

    def test_table_shape(self):
        with pytest.raises(ValidationError) as info:
            signal_from_table(SegmentTag.GAMMA1, (0.0, 1.0), ((1.0, 2.0),), "signals.noise")
        assert info.value.key == "signals.noise.values"

    def test_initial_field(self):
        grid = make_grid(5, 9, 2.0)
        w = field_from_expressions(grid, ("x + y", "2"), "initial.plant")
        X, Y = grid.mesh
        np.testing.assert_allclose(w.f, X + Y)
        np.testing.assert_allclose(w.p, 2.0)


class TestLoadConfig:
    """Parsing and validation of scenario documents."""

    def test_minimal_defaults(self):
        config = load_config(MINIMAL)
        assert (config.geometry.nx, config.geometry.ny, config.geometry.length) == (5, 9, 2.0)
        assert config.physics.beta_f == 0.0
        assert config.physics.orientation == Orientation.COUNTER_CURRENT.value
        assert config.signals.disturbance == ZERO_SIGNAL and config.signals.noise is None
        assert config.initial.plant == ("0", "0")
        assert config.control.actuation == "feed" and config.control.solver == "direct"
        assert config.output.snapshot_every == 0

    def test_reads_path(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(MINIMAL, encoding="utf-8")
        assert load_config(path) == load_config(str(path)) == load_config(MINIMAL)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError) as info:
            load_config(tmp_path / "absent.toml")
        assert info.value.key == "scenario"

    def test_path_string_without_toml_suffix(self, tmp_path):
        """Test a single-line string is read as a file name whatever its suffix."""
        path = tmp_path / "run.cfg"
        path.write_text(MINIMAL, encoding="utf-8")
        assert load_config(str(path)) == load_config(MINIMAL)
        with pytest.raises(ValidationError) as info:
            load_config(str(tmp_path / "run.tom"))
        assert info.value.key == "scenario"
        assert "cannot read scenario" in str(info.value)

    def test_toml_syntax_error_location(self):
        with pytest.raises(ScenarioParseError) as info:
            load_config("[geometry\nnx = 5\n")
        assert info.value.line == 1
        assert info.value.column is not None

    @pytest.mark.parametrize(
        ("extra", "key"),
        [
            ("[plots]\nwidth = 3", "plots"),
            ("[control]\nactuation = 'permeate'", "control.actuation"),
            ("[control]\nmode = 'fast'", "control.mode"),
            ("[output]\nsnapshot_every = -1", "output.snapshot_every"),
            ("[signals]\nreference = ['1']", "signals.reference"),
            ("[signals]\nnoise = { times = [0.0, 1.0] }", "signals.noise.values"),
            ("[initial]\nplant = [1, 2]", "initial.plant"),
        ],
    )
    def test_rejections_name_the_key(self, extra, key):
        with pytest.raises(ValidationError) as info:
            load_config(with_section(extra))
        assert info.value.key == key

    def test_wrong_type(self):
        with pytest.raises(ValidationError) as info:
            load_config(MINIMAL.replace("nx = 5", "nx = 5.5"))
        assert info.value.key == "geometry.nx"

    def test_missing_required_key(self):
        with pytest.raises(ValidationError) as info:
            load_config(MINIMAL.replace("dt = 0.01\n", ""))
        assert info.value.key == "time.dt"

    def test_tabulated_signal(self):
        config = load_config(with_section("[signals]\ndisturbance = { times = [0.0, 1.0], values = [[0, 1], [2, 3]] }"))
        spec = config.signals.disturbance
        assert spec.tabulated
        assert spec.values == ((0.0, 1.0), (2.0, 3.0))

    def test_round_trip(self):
        config = load_config(
            with_section(
                "[signals]\n"
                "disturbance = { times = [0.0, 0.5, 1.0], values = [[0.0, 0.1, 0.0], [0.0, -0.1, 0.0]] }\n"
                "reference = ['15*sin(pi*x*t/2)', \"10\"]\n"
                "noise = ['0.01*sin(40*t)', '0']\n"
                "[control]\nactuation = 'both'\nsolver = 'bicgstab'\n"
                "[output]\nsnapshot_every = 5"
            ).replace("alpha_p = 3.5", "alpha_p = 3.5\nbeta_f = 0.6\nbeta_p = 0.7\norientation = 'co-current'")
        )
        assert load_config(to_toml(config)) == config

    def test_overrides(self):
        config = load_config(MINIMAL).with_overrides(grid=(11, 21), dt=0.005, snapshot_every=2)
        assert (config.geometry.nx, config.geometry.ny) == (11, 21)
        assert config.time.dt == 0.005 and config.time.horizon == 0.05
        assert config.output.snapshot_every == 2


class TestBuildScenario:
    """From validated documents to runnable scenarios."""

    def test_builds_minimal(self):
        scn = parse_scenario(with_section("[initial]\nplant = ['x', 'y']\n[control]\nactuation = 'both'"))
        assert scn.steps == 5
        assert scn.grid.shape == (5, 9)
        assert scn.actuation is Actuation.BOTH
        np.testing.assert_allclose(scn.w0.f, scn.grid.mesh[0])
        assert scn.noise is None

    def test_geometry_errors_are_prefixed(self):
        with pytest.raises(ValidationError) as info:
            build_scenario(load_config(MINIMAL.replace("nx = 5", "nx = 2")))
        assert info.value.key.startswith("geometry")

    def test_physics_errors_are_prefixed(self):
        with pytest.raises(ValidationError) as info:
            build_scenario(load_config(MINIMAL.replace("alpha_f = 3.0", "alpha_f = -3.0")))
        assert info.value.key == "physics.alpha_f"

    def test_time_errors_keep_their_key(self):
        with pytest.raises(ValidationError) as info:
            parse_scenario(MINIMAL.replace("horizon = 0.05", "horizon = 0.055"))
        assert info.value.key == "time.horizon"


class TestPresets:
    """Bundled scenario documents."""

    def test_baseline_constants(self):
        config = load_preset("baseline")
        assert (config.geometry.nx, config.geometry.ny, config.geometry.length) == (101, 201, 2.0)
        phys = config.physics
        assert (phys.alpha_f, phys.alpha_p, phys.gamma_f, phys.gamma_p) == (3.0, 3.5, 0.2, 0.1)
        assert (config.time.dt, config.time.horizon) == (0.002, 10.0)
        assert config.control.actuation == "both"

    def test_baseline_builds_on_coarse_grid(self):
        config = load_preset("baseline").with_overrides(grid=(11, 21), horizon=0.02)
        scn = build_scenario(config)
        assert scn.steps == 10
        seg = scn.grid.segment(SegmentTag.GAMMA3)
        ref = scn.reference.sample(1.0, seg)
        np.testing.assert_allclose(ref[0], 15.0 * np.sin(np.pi * scn.grid.x / 2), atol=1e-12)

    def test_unknown_preset(self):
        with pytest.raises(ValidationError):
            preset_text("pilot-plant")

    def test_signal_spec_defaults_to_zero(self):
        seg = make_grid(5, 9, 2.0).segment(SegmentTag.GAMMA1)
        assert np.all(SignalSpec().build(SegmentTag.GAMMA1, 2.0, "k").sample(1.0, seg) == 0.0)
