"""TOML scenario documents for closed-loop runs.

A document has the sections ``[geometry]``, ``[physics]``, ``[signals]``,
``[initial]``, ``[time]``, ``[control]`` and ``[output]``. Only geometry,
physics and time are required; every other value has a documented default.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import re
import tomllib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

from .adrc import Actuation, Scenario
from .errors import ScenarioParseError, ValidationError
from .expressions import field_from_expressions, signal_from_expressions, signal_from_table
from .fields import AdvectionScheme, BoundarySignal, Orientation, PhysicalParams
from .grid import Grid, SegmentTag, make_grid
from .solvers import SolverMethod

logger = logging.getLogger(__name__)

ZERO_PAIR = ("0", "0")


@dataclass(frozen=True)
class GeometryConfig:
    nx: int
    ny: int
    length: float


@dataclass(frozen=True)
class PhysicsConfig:
    alpha_f: float
    alpha_p: float
    gamma_f: float
    gamma_p: float
    beta_f: float = 0.0
    beta_p: float = 0.0
    orientation: str = Orientation.COUNTER_CURRENT.value
    advection_scheme: str = AdvectionScheme.CENTERED.value


@dataclass(frozen=True)
class SignalSpec:
    """Either two expressions in (t, x) or a spatially uniform table over t."""

    expressions: Optional[tuple[str, str]] = None
    times: Optional[tuple[float, ...]] = None
    values: Optional[tuple[tuple[float, ...], tuple[float, ...]]] = None

    @property
    def tabulated(self) -> bool:
        return self.times is not None

    def build(self, tag: SegmentTag, length: float, key: str) -> BoundarySignal:
        if self.tabulated:
            return signal_from_table(tag, self.times or (), self.values or ((), ()), key)
        return signal_from_expressions(tag, self.expressions or ZERO_PAIR, length, key)


ZERO_SIGNAL = SignalSpec(expressions=ZERO_PAIR)


@dataclass(frozen=True)
class SignalsConfig:
    disturbance: SignalSpec = ZERO_SIGNAL
    reference: SignalSpec = ZERO_SIGNAL
    noise: Optional[SignalSpec] = None


@dataclass(frozen=True)
class InitialConfig:
    plant: tuple[str, str] = ZERO_PAIR
    observer: tuple[str, str] = ZERO_PAIR
    servo: tuple[str, str] = ZERO_PAIR


@dataclass(frozen=True)
class TimeConfig:
    dt: float
    horizon: float


@dataclass(frozen=True)
class ControlConfig:
    actuation: str = Actuation.FEED.value
    solver: str = SolverMethod.DIRECT.value


@dataclass(frozen=True)
class OutputConfig:
    snapshot_every: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: GeometryConfig
    physics: PhysicsConfig
    time: TimeConfig
    signals: SignalsConfig = field(default_factory=SignalsConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def with_overrides(
        self,
        grid: Optional[tuple[int, int]] = None,
        dt: Optional[float] = None,
        horizon: Optional[float] = None,
        snapshot_every: Optional[int] = None,
    ) -> "ScenarioConfig":
        config = self
        if grid is not None:
            config = dataclasses.replace(config, geometry=dataclasses.replace(config.geometry, nx=grid[0], ny=grid[1]))
        if dt is not None or horizon is not None:
            time = dataclasses.replace(
                config.time,
                dt=config.time.dt if dt is None else float(dt),
                horizon=config.time.horizon if horizon is None else float(horizon),
            )
            config = dataclasses.replace(config, time=time)
        if snapshot_every is not None:
            config = dataclasses.replace(config, output=OutputConfig(snapshot_every=snapshot_every))
        return config


# -- reading -----------------------------------------------------------------


class _Table:
    """Consumes keys of one TOML table and reports whatever is left over."""

    def __init__(self, data: Any, path: str) -> None:
        if not isinstance(data, dict):
            raise ValidationError(f"[{path}] must be a table", key=path)
        self.data = dict(data)
        self.path = path

    def key(self, name: str) -> str:
        return f"{self.path}.{name}"

    def take(self, name: str, default: Any = dataclasses.MISSING) -> Any:
        if name in self.data:
            return self.data.pop(name)
        if default is dataclasses.MISSING:
            raise ValidationError(f"missing required key {self.key(name)}", key=self.key(name))
        return default

    def number(self, name: str, default: Any = dataclasses.MISSING) -> float:
        value = self.take(name, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{self.key(name)} must be a number, got {value!r}", key=self.key(name))
        return float(value)

    def integer(self, name: str, default: Any = dataclasses.MISSING) -> int:
        value = self.take(name, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"{self.key(name)} must be an integer, got {value!r}", key=self.key(name))
        return value

    def choice(self, name: str, options: Sequence[str], default: str) -> str:
        value = self.take(name, default)
        if value not in options:
            raise ValidationError(
                f"{self.key(name)} must be one of {', '.join(options)}, got {value!r}", key=self.key(name)
            )
        return value

    def pair(self, name: str, default: tuple[str, str] = ZERO_PAIR) -> tuple[str, str]:
        value = self.take(name, default)
        return _expression_pair(value, self.key(name))

    def finish(self) -> None:
        if self.data:
            unknown = sorted(self.data)
            raise ValidationError(
                f"unknown key(s) in [{self.path}]: {', '.join(unknown)}", key=self.key(unknown[0])
            )


def _expression_pair(value: Any, key: str) -> tuple[str, str]:
    if not isinstance(value, (list, tuple)) or len(value) != 2 or not all(isinstance(v, str) for v in value):
        raise ValidationError(f"{key} must be a pair of expression strings", key=key)
    return (value[0], value[1])


def _signal_spec(value: Any, key: str) -> SignalSpec:
    if isinstance(value, dict):
        table = _Table(value, key)
        times = table.take("times")
        values = table.take("values")
        table.finish()
        try:
            times_t = tuple(float(v) for v in times)
            values_t = tuple(tuple(float(v) for v in row) for row in values)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{key} must hold numeric times and values", key=key) from exc
        if len(values_t) != 2:
            raise ValidationError(f"{key}.values must have one row per component", key=f"{key}.values")
        return SignalSpec(times=times_t, values=(values_t[0], values_t[1]))
    return SignalSpec(expressions=_expression_pair(value, key))


SECTIONS = ("geometry", "physics", "signals", "initial", "time", "control", "output")


def config_from_mapping(doc: Mapping[str, Any]) -> ScenarioConfig:
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ValidationError(f"unknown section(s): {', '.join(unknown)}", key=unknown[0])

    geo = _Table(doc.get("geometry", {}), "geometry")
    geometry = GeometryConfig(nx=geo.integer("nx"), ny=geo.integer("ny"), length=geo.number("length"))
    geo.finish()

    phys = _Table(doc.get("physics", {}), "physics")
    physics = PhysicsConfig(
        alpha_f=phys.number("alpha_f"),
        alpha_p=phys.number("alpha_p"),
        gamma_f=phys.number("gamma_f"),
        gamma_p=phys.number("gamma_p"),
        beta_f=phys.number("beta_f", 0.0),
        beta_p=phys.number("beta_p", 0.0),
        orientation=phys.choice("orientation", [o.value for o in Orientation], Orientation.COUNTER_CURRENT.value),
        advection_scheme=phys.choice(
            "advection_scheme", [s.value for s in AdvectionScheme], AdvectionScheme.CENTERED.value
        ),
    )
    phys.finish()

    sig = _Table(doc.get("signals", {}), "signals")
    noise = sig.take("noise", None)
    signals = SignalsConfig(
        disturbance=_signal_spec(sig.take("disturbance", list(ZERO_PAIR)), sig.key("disturbance")),
        reference=_signal_spec(sig.take("reference", list(ZERO_PAIR)), sig.key("reference")),
        noise=None if noise is None else _signal_spec(noise, sig.key("noise")),
    )
    sig.finish()

    ini = _Table(doc.get("initial", {}), "initial")
    initial = InitialConfig(plant=ini.pair("plant"), observer=ini.pair("observer"), servo=ini.pair("servo"))
    ini.finish()

    tim = _Table(doc.get("time", {}), "time")
    time = TimeConfig(dt=tim.number("dt"), horizon=tim.number("horizon"))
    tim.finish()

    ctl = _Table(doc.get("control", {}), "control")
    control = ControlConfig(
        actuation=ctl.choice("actuation", [a.value for a in Actuation], Actuation.FEED.value),
        solver=ctl.choice("solver", [m.value for m in SolverMethod], SolverMethod.DIRECT.value),
    )
    ctl.finish()

    out = _Table(doc.get("output", {}), "output")
    output = OutputConfig(snapshot_every=out.integer("snapshot_every", 0))
    out.finish()
    if output.snapshot_every < 0:
        raise ValidationError("output.snapshot_every must be >= 0", key="output.snapshot_every")

    return ScenarioConfig(geometry, physics, time, signals, initial, control, output)


def load_config(source: Union[str, Path]) -> ScenarioConfig:
    """Parse a scenario from a path or from TOML text."""
    text = _read_source(source)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        message, line, column = _decode_error_location(exc)
        raise ScenarioParseError(f"invalid TOML: {message}", line, column) from exc
    return config_from_mapping(doc)


_LOCATION = re.compile(r"\s*\(at line (\d+), column (\d+)\)$")


def _decode_error_location(exc: tomllib.TOMLDecodeError) -> tuple[str, Optional[int], Optional[int]]:
    """Message, line and column; before 3.14 they are only embedded in the text."""
    text = str(exc)
    match = _LOCATION.search(text)
    if match:
        return text[: match.start()], int(match.group(1)), int(match.group(2))
    return text, getattr(exc, "lineno", None), getattr(exc, "colno", None)


def _read_source(source: Union[str, Path]) -> str:
    """A single-line string names a file; a scenario document spans several lines."""
    if isinstance(source, Path) or "\n" not in source:
        path = Path(source)
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read scenario {path}: {exc.strerror}", key="scenario") from exc
    return source


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Turn a validated config into a runnable :class:`dcmd.adrc.Scenario`."""
    geo = config.geometry
    try:
        grid: Grid = make_grid(geo.nx, geo.ny, geo.length)
    except ValidationError as exc:
        raise ValidationError(str(exc), key=f"geometry.{exc.key}" if exc.key else "geometry") from exc
    phys = config.physics
    try:
        params = PhysicalParams(
            alpha_f=phys.alpha_f,
            alpha_p=phys.alpha_p,
            gamma_f=phys.gamma_f,
            gamma_p=phys.gamma_p,
            beta_f=phys.beta_f,
            beta_p=phys.beta_p,
            orientation=Orientation(phys.orientation),
            advection_scheme=AdvectionScheme(phys.advection_scheme),
        )
    except ValidationError as exc:
        raise ValidationError(str(exc), key=f"physics.{exc.key}" if exc.key else "physics") from exc

    signals = config.signals
    L = geo.length
    noise = None
    if signals.noise is not None:
        noise = signals.noise.build(SegmentTag.GAMMA1, L, "signals.noise")
    return Scenario(
        params=params,
        grid=grid,
        disturbance=signals.disturbance.build(SegmentTag.GAMMA1, L, "signals.disturbance"),
        reference=signals.reference.build(SegmentTag.GAMMA3, L, "signals.reference"),
        w0=field_from_expressions(grid, config.initial.plant, "initial.plant"),
        w_hat0=field_from_expressions(grid, config.initial.observer, "initial.observer"),
        v0=field_from_expressions(grid, config.initial.servo, "initial.servo"),
        horizon=config.time.horizon,
        dt=config.time.dt,
        noise=noise,
        actuation=Actuation(config.control.actuation),
        solver=SolverMethod(config.control.solver),
    )


def parse_scenario(source: Union[str, Path]) -> Scenario:
    return build_scenario(load_config(source))


PRESETS = ("baseline",)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}", key="preset")
    return (resources.files("dcmd") / "presets" / f"{name}.toml").read_text(encoding="utf-8")


def load_preset(name: str) -> ScenarioConfig:
    config = load_config(preset_text(name))
    logger.debug("loaded preset %s", name)
    return config


# -- writing -----------------------------------------------------------------


def _value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_value(v) for v in value) + "]"
    raise TypeError(f"cannot write {type(value).__name__} to TOML")


def _signal_value(spec: SignalSpec) -> str:
    if spec.tabulated:
        return f"{{ times = {_value(spec.times)}, values = {_value(spec.values)} }}"
    return _value(spec.expressions)


def to_toml(config: ScenarioConfig) -> str:
    """Serialize ``config``; ``load_config(to_toml(c)) == c``."""
    lines: list[str] = []
    for name in ("geometry", "physics", "time", "initial", "control", "output"):
        lines.append(f"[{name}]")
        for f in dataclasses.fields(getattr(config, name)):
            lines.append(f"{f.name} = {_value(getattr(getattr(config, name), f.name))}")
        lines.append("")
    lines.append("[signals]")
    for name in ("disturbance", "reference", "noise"):
        spec = getattr(config.signals, name)
        if spec is not None:
            lines.append(f"{name} = {_signal_value(spec)}")
    lines.append("")
    return "\n".join(lines)
