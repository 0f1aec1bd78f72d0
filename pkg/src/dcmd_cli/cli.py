"""Command line for closed-loop runs, steady states and numerical checks."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from dcmd.adrc import ClosedLoopState, MetricsRow, run_closed_loop
from dcmd.convergence import LadderResult, run_space_ladder, run_time_ladder
from dcmd.errors import NumericalError, ValidationError
from dcmd.fields import Orientation, PhysicalParams
from dcmd.grid import make_grid
from dcmd.operators import assemble, inlet_bc
from dcmd.output import CheckResult, atomic_write_text, format_report, write_metrics, write_report, write_snapshot
from dcmd.scenario import ScenarioConfig, build_scenario, load_config, load_preset, to_toml
from dcmd.spectral import (
    check_diagonalization,
    check_dissipativity,
    check_weighted_symmetry,
    homogeneous_operator,
    max_real_eigenvalue,
)
from dcmd.steady import inlet_data, solve_steady, stationary_residual

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

SYMMETRY_TOL = 1e-10
DISSIPATIVITY_TOL = 1e-10
EIGENVALUE_BOUND = -1e-8
DIAGONALIZATION_TOL = 1e-3
STEADY_RESIDUAL_TOL = 1e-8
SPACE_ORDER = 1.9
TIME_ORDER = 0.9

# velocities used by the checks that need advection (beta/(2 alpha) = 0.1 on both sides)
VERIFY_BETA_F = 0.6
VERIFY_BETA_P = 0.7


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 like every other validation failure."""

    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _grid_shape(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(part) for part in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected NXxNY such as 26x51, got {text!r}") from exc
    return nx, ny


# -- simulate ----------------------------------------------------------------


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = load_preset(args.preset) if args.preset else load_config(Path(args.scenario))
    return config.with_overrides(
        grid=args.grid, dt=args.dt, horizon=args.horizon, snapshot_every=args.snapshot_every
    )


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    scenario = build_scenario(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "scenario.toml", to_toml(config))

    every = config.output.snapshot_every
    on_step: Optional[Callable[[ClosedLoopState, MetricsRow], None]] = None
    if every:
        snapshots = out / "snapshots"

        def on_step(state: ClosedLoopState, row: MetricsRow) -> None:
            if state.step % every == 0:
                write_snapshot(snapshots, f"plant_{state.step:06d}", state.w, state.t, state.step)

    result = run_closed_loop(scenario, on_step=on_step)
    write_metrics(out / "metrics.csv", result.metrics)
    last = result.metrics[-1]
    print(
        f"t={last.t:.6g} tracking_error={last.tracking_error:.6e} "
        f"observer_error={last.observer_error:.6e} disturbance_error={last.disturbance_error:.6e}"
    )
    return 0


# -- steady ------------------------------------------------------------------


def _cmd_steady(args: argparse.Namespace) -> int:
    nx, ny = args.grid
    grid = make_grid(nx, ny, args.length)
    params = PhysicalParams(
        alpha_f=args.alpha_f,
        alpha_p=args.alpha_p,
        gamma_f=args.gamma_f,
        gamma_p=args.gamma_p,
        beta_f=args.beta_f,
        beta_p=args.beta_p,
        orientation=Orientation(args.orientation),
    )
    steady = solve_steady(grid, params, args.inlet_f, args.inlet_p)
    op = assemble(grid, params, inlet_bc(params.orientation))
    residual = stationary_residual(op, steady, inlet_data(grid, params, args.inlet_f, args.inlet_p), params)
    check = CheckResult("steady_residual", residual, STEADY_RESIDUAL_TOL)
    write_snapshot(args.out, "steady", steady, 0.0, 0)
    write_report(Path(args.out) / "steady_report.txt", [check])
    print(f"steady residual {residual:.6e} on {nx}x{ny}")
    if not check.passed:
        print(f"steady residual above {STEADY_RESIDUAL_TOL:g}", file=sys.stderr)
        return 2
    return 0


# -- verify ------------------------------------------------------------------


def _verify_checks(nx: int, ny: int, length: float, trials: int, seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    grid = make_grid(nx, ny, length)
    base = PhysicalParams.baseline()
    results: list[CheckResult] = []
    for orientation in Orientation:
        tag = "counter" if orientation is Orientation.COUNTER_CURRENT else "co"
        a0 = homogeneous_operator(grid, base, orientation)
        asymmetry = check_weighted_symmetry(a0, trials=trials, rng=rng)
        results.append(CheckResult(f"symmetry_{tag}", asymmetry, SYMMETRY_TOL))
        advected = PhysicalParams(
            alpha_f=base.alpha_f,
            alpha_p=base.alpha_p,
            gamma_f=base.gamma_f,
            gamma_p=base.gamma_p,
            beta_f=VERIFY_BETA_F,
            beta_p=VERIFY_BETA_P,
            orientation=orientation,
        )
        op = homogeneous_operator(grid, advected)
        for t in (0.0, 0.5, 1.0):
            value = check_dissipativity(op, t=t, trials=trials, rng=rng)
            results.append(CheckResult(f"dissipativity_{tag}_t{t:g}", value, DISSIPATIVITY_TOL))
        results.append(CheckResult(f"max_real_eigenvalue_{tag}", max_real_eigenvalue(op), EIGENVALUE_BOUND))

    co = PhysicalParams(
        alpha_f=base.alpha_f,
        alpha_p=base.alpha_p,
        gamma_f=base.gamma_f,
        gamma_p=base.gamma_p,
        beta_f=VERIFY_BETA_F,
        beta_p=VERIFY_BETA_P,
        orientation=Orientation.CO_CURRENT,
    )
    ladder = []
    for level in range(3):
        fine = make_grid((nx - 1) * 2**level + 1, (ny - 1) * 2**level + 1, length)
        ladder.append(check_diagonalization(co, fine, horizon=1.0, dt=0.01))
    decreasing = all(b < a for a, b in zip(ladder, ladder[1:]))
    results.append(CheckResult("diagonalization_finest", ladder[-1], DIAGONALIZATION_TOL))
    results.append(CheckResult("diagonalization_decreasing", 1.0 if decreasing else 0.0, 1.0, upper=False))

    steady = solve_steady(grid, base, 60.0, 20.0)
    op = assemble(grid, base, inlet_bc(base.orientation))
    residual = stationary_residual(op, steady, inlet_data(grid, base, 60.0, 20.0), base)
    results.append(CheckResult("steady_residual", residual, STEADY_RESIDUAL_TOL))
    return results


def _cmd_verify(args: argparse.Namespace) -> int:
    nx, ny = args.grid
    results = _verify_checks(nx, ny, args.length, args.trials, args.seed)
    if args.out:
        write_report(Path(args.out) / "verify_report.txt", results)
    sys.stdout.write(format_report(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
        return 2
    return 0


# -- convergence -------------------------------------------------------------


def _ladder_table(ladders: list[LadderResult]) -> str:
    lines = ["kind step error order"]
    for ladder in ladders:
        orders = (math.nan,) + ladder.orders
        for step, err, order in zip(ladder.steps, ladder.errors, orders):
            lines.append(f"{ladder.kind} {step:.6e} {err:.6e} {order:.4f}")
    return "\n".join(lines) + "\n"


def _cmd_convergence(args: argparse.Namespace) -> int:
    params = PhysicalParams.baseline()
    ladders: list[LadderResult] = []
    checks: list[CheckResult] = []
    if args.kind in ("space", "both"):
        space = run_space_ladder(params)
        ladders.append(space)
        checks.append(CheckResult("space_order", space.orders[-1], SPACE_ORDER, upper=False))
    if args.kind in ("time", "both"):
        time = run_time_ladder(params)
        ladders.append(time)
        checks.append(CheckResult("time_order", time.orders[-1], TIME_ORDER, upper=False))
    table = _ladder_table(ladders)
    if args.out:
        atomic_write_text(Path(args.out) / "convergence.txt", table)
        write_report(Path(args.out) / "convergence_report.txt", checks)
    sys.stdout.write(table)
    sys.stdout.write(format_report(checks))
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"convergence orders below target: {', '.join(failed)}", file=sys.stderr)
        return 2
    return 0


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dcmd")
    parser.add_argument(
        "--log-level",
        "-l",
        choices=LOG_LEVELS,
        type=str.upper,
        help="Set the log level for dcmd",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_sim = sub.add_parser("simulate", help="Run the closed loop and write metrics.csv")
    source = p_sim.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", help="Scenario TOML file")
    source.add_argument("--preset", help="Shipped scenario name, e.g. baseline")
    p_sim.add_argument("--out", required=True, help="Output directory")
    p_sim.add_argument("--grid", type=_grid_shape, help="Override the grid, NXxNY")
    p_sim.add_argument("--dt", type=float, help="Override the time step")
    p_sim.add_argument("--horizon", type=float, help="Override the final time")
    p_sim.add_argument("--snapshot-every", type=int, help="Write a plant snapshot every N steps")

    p_steady = sub.add_parser("steady", help="Solve the stationary problem for constant inlets")
    p_steady.add_argument("--out", required=True, help="Output directory")
    p_steady.add_argument("--grid", type=_grid_shape, default=(26, 51))
    p_steady.add_argument("--length", type=float, default=2.0)
    p_steady.add_argument("--inlet-f", type=float, default=60.0, help="Feed inlet temperature")
    p_steady.add_argument("--inlet-p", type=float, default=20.0, help="Permeate inlet temperature")
    p_steady.add_argument("--orientation", choices=[o.value for o in Orientation], default="counter-current")
    p_steady.add_argument("--beta-f", type=float, default=0.0)
    p_steady.add_argument("--beta-p", type=float, default=0.0)
    p_steady.add_argument("--alpha-f", type=float, default=3.0)
    p_steady.add_argument("--alpha-p", type=float, default=3.5)
    p_steady.add_argument("--gamma-f", type=float, default=0.2)
    p_steady.add_argument("--gamma-p", type=float, default=0.1)

    p_verify = sub.add_parser("verify", help="Check symmetry, dissipativity and diagonalization numerically")
    p_verify.add_argument("--grid", type=_grid_shape, default=(5, 9))
    p_verify.add_argument("--length", type=float, default=2.0)
    p_verify.add_argument("--out", help="Directory for verify_report.txt")
    p_verify.add_argument("--trials", type=int, default=50)
    p_verify.add_argument("--seed", type=int, default=0)

    p_conv = sub.add_parser("convergence", help="Manufactured-solution refinement ladders")
    p_conv.add_argument("--kind", choices=["space", "time", "both"], default="both")
    p_conv.add_argument("--out", help="Directory for convergence.txt")
    return parser


COMMANDS = {
    "simulate": _cmd_simulate,
    "steady": _cmd_steady,
    "verify": _cmd_verify,
    "convergence": _cmd_convergence,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if getattr(args, "log_level", None):
        level = getattr(logging, args.log_level, None)
        if level is not None:
            logging.basicConfig(level=level)
            logging.getLogger("dcmd").setLevel(level)
            logging.getLogger("dcmd_cli").setLevel(level)

    try:
        return COMMANDS[args.cmd](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
