"""Command-line entry point for the thin-film profile toolkit."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable

import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .config import RunConfig, describe_errors, load_config
from .errors import ConfigInvalid, ToolkitError
from .experiments import (
    SweepKind,
    default_values,
    reproduce_all,
    run_sweep,
    write_json,
    write_rows_csv,
    write_sidecar,
    write_sweep,
    write_trajectory_csv,
)
from .similarity import (
    AttractorKind,
    CubicForm,
    ExpansionParams,
    admissible_window,
    b0,
    backshoot_oscillatory,
    backshoot_positive,
    classify_attractor,
    cube_logfit_n3,
    default_mu_bracket,
    eval_expansion,
    find_mu,
    find_nh,
    interface_conditions,
    logfit_n3,
    nonexistence_scan_n4,
    residual_order,
    run_osc,
    scan_D,
    scan_s0,
    shoot,
    similarity_constant,
    solve_l,
)

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Route all logging through a rich handler on stderr."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _out_path(config: RunConfig, out: str | None, default: str | None = None) -> Path | None:
    name = out or default
    if name is None:
        return None
    path = Path(name)
    return path if path.is_absolute() else config.output.directory / path


def _table(title: str, rows: list[tuple[str, object]]) -> Table:
    table = Table(title=title)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key, value in rows:
        table.add_row(key, f"{value!r}" if isinstance(value, float) else str(value))
    return table


def cmd_shoot(args: argparse.Namespace, config: RunConfig) -> int:
    cfg = config.integrator.to_integrator_config()
    result = shoot(config.profile.to_problem(args.n), args.mu, cfg)
    console.print(_table(f"shot n={args.n} mu={args.mu!r}", [
        ("outcome", result.outcome.value),
        ("terminal", result.terminal_reason),
        ("zeros", ", ".join(f"{z:.10g}" for z in result.zeros) or "none"),
        ("closest y", result.closest_approach.y),
        ("closest |f|", result.closest_approach.abs_f),
        ("steps", result.n_steps),
    ]))
    path = _out_path(config, args.out)
    if path:
        write_trajectory_csv(path, result.traj, config.output.resample)
        write_sidecar(path, config, {"n": args.n, "mu": args.mu, "outcome": result.outcome.value,
                                     "terminal_reason": result.terminal_reason,
                                     "zeros": list(result.zeros), "steps": result.n_steps})
    return EXIT_OK


def cmd_findmu(args: argparse.Namespace, config: RunConfig) -> int:
    lo, hi = args.lo, args.hi
    if lo is None or hi is None:
        d_lo, d_hi = config.profile.mu_bracket or default_mu_bracket(args.n)
        lo = d_lo if lo is None else lo
        hi = d_hi if hi is None else hi
    tol = args.tol or config.profile.mu_tol
    critical = find_mu(config.profile.to_problem(args.n), lo, hi, tol,
                       config.integrator.to_integrator_config(), config.profile.interface_window)
    conditions = interface_conditions(critical.best, args.n, config.profile.eps)
    console.print(_table(f"critical shot n={args.n}", [
        ("mu*", critical.mu_star),
        ("bracket width", critical.bracket_width),
        ("y0", critical.y0),
        ("sign changes near y0", len(critical.zeros_near_interface)),
        ("height", conditions.height),
        ("slope", conditions.slope),
        ("flux", conditions.flux),
    ]))
    path = _out_path(config, args.out)
    if path:
        write_trajectory_csv(path, critical.best.traj, config.output.resample)
        write_sidecar(path, config, {
            "n": args.n, "mu_star": critical.mu_star, "bracket_width": critical.bracket_width,
            "y0": critical.y0, "zeros_near_interface": list(critical.zeros_near_interface),
            "height": conditions.height, "slope": conditions.slope, "flux": conditions.flux,
        })
    return EXIT_OK


def cmd_osc(args: argparse.Namespace, config: RunConfig) -> int:
    problem = config.oscillation.to_problem(args.n)
    cfg = config.oscillation_integrator.to_integrator_config()
    report = classify_attractor(problem, cfg)
    console.print(_table(f"oscillatory component n={args.n}", [
        ("kind", report.kind.value),
        ("period", report.period),
        ("amplitude", report.amplitude),
        ("sign changing", report.sign_changing),
        ("equilibrium", report.equilibrium_value),
        ("residual", report.residual),
    ]))
    path = _out_path(config, args.out)
    if path:
        write_trajectory_csv(path, run_osc(problem, None, cfg), config.output.resample,
                             columns=("s", "phi", "phi1", "phi2", "event"))
        write_sidecar(path, config, {"n": args.n, "kind": report.kind.value,
                                     "period": report.period, "amplitude": report.amplitude})
    return EXIT_OK


def cmd_nh(args: argparse.Namespace, config: RunConfig) -> int:
    lo, hi = config.oscillation.bracket
    lo = args.lo if args.lo is not None else lo
    hi = args.hi if args.hi is not None else hi
    tol = args.tol or config.oscillation.n_tol
    n_h = find_nh(lo, hi, tol, config.oscillation.to_problem(lo),
                  config.oscillation_integrator.to_integrator_config(), config.oscillation.max_retries)
    console.print(f"n_h ~ {n_h!r}  (bracket [{lo}, {hi}], tol {tol:g})")
    return EXIT_OK


def cmd_cubic(args: argparse.Namespace, config: RunConfig) -> int:
    form = CubicForm(args.form)
    l, admissible = solve_l(args.n, form)
    w_lo, w_hi = admissible_window(args.n)
    console.print(_table(f"characteristic cubic n={args.n} ({form.value})", [
        ("l", l),
        ("window", f"({w_lo:.6g}, {w_hi:.6g})"),
        ("admissible", admissible),
        ("B0", b0(args.n)),
    ]))
    return EXIT_OK


def cmd_expand(args: argparse.Namespace, config: RunConfig) -> int:
    params = ExpansionParams.for_exponent(args.n, args.D)
    fit = residual_order(params)
    console.print(_table(f"interface expansion n={args.n} D={args.D:g}", [
        ("B0", params.B0),
        ("l", params.l),
        ("residual slope", fit.slope),
        ("predicted", fit.predicted),
        ("gate passes", fit.passes),
    ]))
    path = _out_path(config, args.out)
    if path:
        zs = np.logspace(-6, -1, 101)
        write_rows_csv(path, ("z", "f", "f1", "f2", "f3"),
                       [[float(z), *map(float, eval_expansion(params, float(z)))] for z in zs])
        write_sidecar(path, config, {"n": args.n, "D": args.D, "l": params.l, "B0": params.B0,
                                     "residual_slope": fit.slope})
    return EXIT_OK


def cmd_backshoot(args: argparse.Namespace, config: RunConfig) -> int:
    cfg = config.integrator.to_integrator_config()
    delta = args.delta or config.expansion.delta
    eps = config.expansion.eps
    if args.s0 is not None:
        report = classify_attractor(config.oscillation.to_problem(args.n),
                                    config.oscillation_integrator.to_integrator_config())
        state = backshoot_oscillatory(args.n, args.s0, delta, report.orbit, cfg, eps)
        label = f"s0={args.s0:g}"
    else:
        state = backshoot_positive(args.n, args.D, delta, cfg, eps)
        label = f"D={args.D:g}"
    console.print(_table(f"backward shot n={args.n} {label}", [
        ("delta", state.delta),
        ("f(0)", state.f_origin),
        ("f'(0)", state.slope_origin),
        ("f''(0)", float(state.origin[2])),
    ]))
    path = _out_path(config, args.out)
    if path:
        write_trajectory_csv(path, state.traj, config.output.resample,
                             columns=("z", "F", "F1", "F2", "event"))
        write_sidecar(path, config, {"n": args.n, "D": state.D, "s0": state.s0, "delta": state.delta,
                                     "origin": state.origin})
    return EXIT_OK


def cmd_scan_d(args: argparse.Namespace, config: RunConfig) -> int:
    cfg = config.integrator.to_integrator_config()
    grid = default_values(SweepKind.D, config)
    scan = scan_D(args.n, grid, config.expansion.delta, cfg, config.expansion.eps,
                  config.output.workers)
    table = Table(title=f"D scan n={args.n}")
    for column in ("D", "delta", "f(0)", "f'(0)", "status"):
        table.add_column(column, justify="right")
    for row in scan.rows:
        table.add_row(f"{row.D:.4g}", f"{row.delta:.3e}", f"{row.f0:.8g}", f"{row.slope0:.3e}", row.status)
    console.print(table)
    console.print(f"sign-change brackets: {list(scan.brackets)}; D* = {list(scan.roots)}")
    if scan.failed:
        logger.warning(f"{len(scan.failed)} of {len(scan.rows)} D points failed")
    path = _out_path(config, args.out, f"scan_D_n{args.n:g}.csv")
    write_rows_csv(path, ("D", "delta", "f0", "slope0", "status"),
                   [[r.D, r.delta, r.f0, r.slope0, r.status] for r in scan.rows])
    write_sidecar(path, config, {"n": args.n, "brackets": scan.brackets, "roots": scan.roots,
                                 "min_abs_slope": scan.min_abs_slope})
    return EXIT_OK


def cmd_scan_s0(args: argparse.Namespace, config: RunConfig) -> int:
    report = classify_attractor(config.oscillation.to_problem(args.n),
                                config.oscillation_integrator.to_integrator_config())
    if report.kind is not AttractorKind.PERIODIC:
        logger.error(f"n={args.n}: attractor is {report.kind.value}, no orbit to seed from")
        return EXIT_FAILURE
    scan = scan_s0(args.n, report.orbit, config.expansion.delta, config.expansion.s0_count,
                   config.integrator.to_integrator_config(), config.expansion.eps)
    console.print(f"n={args.n}: period {report.period!r}, min |f'(0)| = {scan.min_abs_slope:.3e} "
                  f"at s0 = {scan.s0_star!r}")
    path = _out_path(config, args.out, f"scan_s0_n{args.n:g}.csv")
    write_rows_csv(path, ("s0", "f0", "slope0"), scan.rows)
    write_sidecar(path, config, {"n": args.n, "period": report.period, "s0_star": scan.s0_star,
                                 "min_abs_slope": scan.min_abs_slope})
    return EXIT_OK


def cmd_log3(args: argparse.Namespace, config: RunConfig) -> int:
    cfg = config.integrator.to_integrator_config()
    lo, hi = config.profile.mu_bracket or default_mu_bracket(3.0)
    critical = find_mu(config.profile.to_problem(3.0), lo, hi, args.tol or config.profile.mu_tol, cfg)
    window = tuple(args.window) if args.window else config.special.log_window
    fit = logfit_n3(critical.best.traj, critical.y0, window)
    cube = cube_logfit_n3(critical.best.traj, critical.y0, config.special.cube_window)
    console.print(_table("n=3 log-linear asymptotics", [
        ("mu*", critical.mu_star),
        ("y0", critical.y0),
        ("C", fit.C),
        ("p", fit.p),
        ("rms", fit.rms),
        ("b", cube.b),
        ("A / (alpha y0)", cube.A / (similarity_constant(3.0) * critical.y0)),
    ]))
    path = _out_path(config, args.out)
    if path:
        write_json(path, {"mu_star": critical.mu_star, "y0": critical.y0, "C": fit.C, "p": fit.p,
                          "rms": fit.rms, "window": fit.window,
                          "cube": {"b": cube.b, "A": cube.A, "rms": cube.rms, "window": cube.window}})
    return EXIT_OK


def cmd_noexist4(args: argparse.Namespace, config: RunConfig) -> int:
    mus = args.mus or config.special.n4_mus
    rows = nonexistence_scan_n4(mus, config.integrator.to_integrator_config(),
                                config.profile.to_problem(4.0))
    table = Table(title="n=4 shots")
    for column in ("mu", "min f", "terminal"):
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(f"{row.mu:g}", f"{row.min_f:.6e}", row.terminal_reason)
    console.print(table)
    path = _out_path(config, args.out, "nonexistence_n4.csv")
    write_rows_csv(path, ("mu", "min_f", "terminal_reason", "outcome"),
                   [[r.mu, r.min_f, r.terminal_reason, r.outcome.value] for r in rows])
    write_sidecar(path, config, {"all_positive": all(r.min_f > 0 for r in rows)})
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    kind = SweepKind(args.kind)
    values = args.values if args.values else default_values(kind, config, args.n)
    rows = run_sweep(kind, values, config, args.n)
    suffix = f"_n{args.n:g}" if args.n is not None else ""
    path = _out_path(config, args.out, f"sweep_{kind.value}{suffix}.csv")
    write_sweep(path, kind, rows, config, args.n)
    failed = sum("error" in row.summary for row in rows)
    console.print(f"{len(rows)} points written to {path} ({failed} failed)")
    return EXIT_OK


def cmd_repro_figs(args: argparse.Namespace, config: RunConfig) -> int:
    paths = reproduce_all(config, config.output.directory, args.mu_tol)
    console.print(f"{len(paths)} datasets written to {config.output.directory}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "shoot": cmd_shoot,
    "findmu": cmd_findmu,
    "osc": cmd_osc,
    "nh": cmd_nh,
    "cubic": cmd_cubic,
    "expand": cmd_expand,
    "backshoot": cmd_backshoot,
    "scan-d": cmd_scan_d,
    "scan-s0": cmd_scan_s0,
    "log3": cmd_log3,
    "noexist4": cmd_noexist4,
    "sweep": cmd_sweep,
    "repro-figs": cmd_repro_figs,
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file (default ./config.yaml)")
    common.add_argument("--out-dir", type=Path, help="output directory")
    common.add_argument("--workers", type=int, help="worker processes for sweeps")
    common.add_argument("--rtol", type=float, help="integrator relative tolerance")
    common.add_argument("--atol", type=float, help="integrator absolute tolerance")
    common.add_argument("--eps", type=float, help="regularisation epsilon")
    common.add_argument("--resample", type=int, help="uniform output points for trajectories")
    common.add_argument("--out", help="output file (relative paths go under the output directory)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    parser = argparse.ArgumentParser(
        prog="tfe-profiles",
        description="Similarity profiles of the fourth-order thin-film equation",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("shoot", parents=[common], help="single forward shot")
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)

    p = sub.add_parser("findmu", parents=[common], help="bisect for the critical mu")
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("osc", parents=[common], help="classify the oscillatory component")
    p.add_argument("--n", type=float, required=True)

    p = sub.add_parser("nh", parents=[common], help="bisect for the heteroclinic exponent")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("cubic", parents=[common], help="root of the characteristic cubic")
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--form", choices=[f.value for f in CubicForm], default=CubicForm.SCALED.value)

    p = sub.add_parser("expand", parents=[common], help="interface expansion and residual order")
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--D", type=float, default=0.0)

    p = sub.add_parser("backshoot", parents=[common], help="shoot from the interface to the origin")
    p.add_argument("--n", type=float, required=True)
    seed = p.add_mutually_exclusive_group()
    seed.add_argument("--D", type=float, default=0.0, help="positive bundle member")
    seed.add_argument("--s0", type=float, help="oscillatory bundle phase")
    p.add_argument("--delta", type=float)

    p = sub.add_parser("scan-d", parents=[common], help="backward shots over the D grid")
    p.add_argument("--n", type=float, required=True)

    p = sub.add_parser("scan-s0", parents=[common], help="backward shots over one orbit period")
    p.add_argument("--n", type=float, required=True)

    p = sub.add_parser("log3", parents=[common], help="n=3 log-linear fit")
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--tol", type=float)

    p = sub.add_parser("noexist4", parents=[common], help="n=4 positivity scan")
    p.add_argument("--mus", type=float, nargs="+")

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    p.add_argument("--kind", choices=[k.value for k in SweepKind], required=True)
    p.add_argument("--n", type=float)
    p.add_argument("--values", type=float, nargs="+")

    p = sub.add_parser("repro-figs", parents=[common], help="write every plot dataset")
    p.add_argument("--mu-tol", type=float)

    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Command-line flags take precedence over the config file."""
    data = config.model_dump()
    if args.rtol is not None:
        data["integrator"]["rtol"] = args.rtol
    if args.atol is not None:
        data["integrator"]["atol"] = args.atol
    if args.eps is not None:
        for section in ("profile", "oscillation", "expansion"):
            data[section]["eps"] = args.eps
    if args.out_dir is not None:
        data["output"]["directory"] = args.out_dir
    if args.workers is not None:
        data["output"]["workers"] = args.workers
    if args.resample is not None:
        data["output"]["resample"] = args.resample
    return RunConfig.model_validate(data)


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the application.

    Returns:
        Exit code (0 success, 1 computation error, 2 usage error, 130 interrupted)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    setup_logging(args.verbose, args.quiet)
    try:
        config = apply_overrides(load_config(args.config), args)
    except (ConfigInvalid, FileNotFoundError) as e:
        logger.error(f"invalid configuration: {e}")
        return EXIT_USAGE
    except ValidationError as e:
        logger.error(f"invalid configuration: {describe_errors(e)}")
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args, config)
    except KeyboardInterrupt:
        logger.warning("interrupted")
        return EXIT_INTERRUPTED
    except (ToolkitError, ValueError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
