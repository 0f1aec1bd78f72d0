"""Direct contact membrane distillation: coupled feed/permeate heat transport
on the unit-by-L rectangle, with disturbance-rejection output tracking.

Typical use::

    from dcmd.scenario import load_preset, build_scenario
    from dcmd.adrc import run_closed_loop

    config = load_preset("baseline").with_overrides(grid=(26, 51))
    result = run_closed_loop(build_scenario(config))
"""

from .errors import DcmdError, LinearSolveError, NumericalError, ScenarioParseError, SimulationError, ValidationError
from .fields import FieldPair, PhysicalParams
from .grid import Grid, SegmentTag, make_grid

__all__ = [
    "DcmdError",
    "FieldPair",
    "Grid",
    "LinearSolveError",
    "NumericalError",
    "PhysicalParams",
    "ScenarioParseError",
    "SegmentTag",
    "SimulationError",
    "ValidationError",
    "make_grid",
]
