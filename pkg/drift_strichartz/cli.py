"""
Command-line front end: load or select a problem, run the analysis, the
volume table, the verification suites or the propagator, and emit JSON on
stdout and CSV/field files on disk.

Exit codes: 0 success, 1 usage/parse/domain errors, 2 (H) or consistency
failures, 3 inconclusive regime, 4 geometry/resolution guard, 5 a suite
ran and failed.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from drift_strichartz.config import GRAMIAN_METHODS, PROPAGATION_METHODS, get_settings, load_settings, set_settings
from drift_strichartz.core.gramian import OperatorSpec, gramian_series
from drift_strichartz.core.regimes import PairSpec, admissible_pair, classify, pairs_for
from drift_strichartz.core.structure import analyze_structure
from drift_strichartz.errors import DriftStrichartzError, InconclusiveRegimeError, ProblemFileError, SuiteFailure
from drift_strichartz.gallery import Fixture, export_fixture, fixture, list_fixtures
from drift_strichartz.problem import ProblemFile, load_problem
from drift_strichartz.propagation.grid import (
    GridSpec,
    gaussian_probe,
    lebesgue_norm,
    read_field,
    write_field,
    write_field_csv,
)
from drift_strichartz.propagation.propagator import propagate, weighted_field
from drift_strichartz.suites.base import dumps, json_ready
from drift_strichartz.suites.runner import SUITES, run_all_suites, run_suite
from drift_strichartz.workflow import AnalysisWorkflow, run_analysis

logger = logging.getLogger(__name__)

VOLUME_COLUMNS = ["t", "V", "t^D*exp(t*trB)", "min(t^D,t^D_inf)"]


def _parse_params(items: Optional[Sequence[str]]) -> Dict[str, Any]:
    params: Dict[str, Any] = {}
    for item in items or []:
        if "=" not in item:
            raise ProblemFileError(f"expected key=value, got {item!r}", field="--param")
        key, raw = item.split("=", 1)
        try:
            value = float(raw)
        except ValueError:
            raise ProblemFileError(f"value of '{key}' must be a number, got {raw!r}", field="--param")
        params[key.strip()] = int(value) if value.is_integer() else value
    return params


def _floats(raw: str, name: str) -> List[float]:
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ProblemFileError(f"expected comma-separated numbers, got {raw!r}", field=name)


def _fixture_from_expected(problem: ProblemFile, spec: OperatorSpec) -> Optional[Fixture]:
    block = problem.expected
    if not block:
        return None
    Q_infty = block.get("Q_infty")
    return Fixture(
        name=problem.label,
        spec=spec,
        ranks=block.get("ranks"),
        D=block.get("D"),
        case_tag=block.get("case_tag"),
        D_infty=block.get("D_infty"),
        Q_infty=None if Q_infty is None else np.asarray(Q_infty, dtype=float).reshape(spec.n, spec.n),
    )


def _load_input(args: argparse.Namespace) -> Tuple[OperatorSpec, Optional[Fixture], Optional[ProblemFile]]:
    """The operator named by --fixture or read from --input."""
    if args.fixture:
        fx = fixture(args.fixture, **_parse_params(args.param))
        return fx.spec, fx, None
    problem = load_problem(args.input)
    spec = problem.to_spec()
    return spec, _fixture_from_expected(problem, spec), problem


def _grid(args: argparse.Namespace, n: int, problem: Optional[ProblemFile]) -> GridSpec:
    """Grid flags win over the problem file's grid block, which wins over settings."""
    settings = get_settings()
    base = problem.to_grid() if problem is not None else None
    N = args.grid_n or (base.N if base else settings.grid_n)
    L = args.grid_L or (base.L if base else settings.grid_L)
    margin = args.margin or (base.margin if base else settings.margin)
    return GridSpec(n=n, L=L, N=N, margin=margin)


def _analysis(spec: OperatorSpec, pair_r: Optional[float]) -> Dict[str, Any]:
    if os.getenv("DRIFT_USE_GRAPH") == "1":
        return AnalysisWorkflow().run(spec.Q, spec.B, spec.label, pair_r)
    return run_analysis(spec.Q, spec.B, spec.label, pair_r)


def cmd_analyze(args: argparse.Namespace) -> int:
    """Print the AnalysisResult of one operator."""
    spec, fx, _ = _load_input(args)
    result = _analysis(spec, args.pair_r)
    if fx is not None:
        result["expected"] = fx.expected()
    print(dumps(result))
    return 0


def cmd_volume(args: argparse.Namespace) -> int:
    """Tabulate V(t) against the hypothesis (A) and (B) comparison functions."""
    spec, _, _ = _load_input(args)
    structure = analyze_structure(spec)
    regime = classify(spec, structure)
    D = structure.D
    D_infty = regime.D_infty if regime.D_infty is not None else float(D)

    ts = np.geomspace(args.t0, args.t1, args.samples)
    log_v = np.array([s.logdet for s in gramian_series(spec, ts)])
    log_t = np.log(ts)
    table = np.column_stack([
        ts,
        np.exp(log_v),
        np.exp(D * log_t + ts * spec.trB),
        np.exp(np.minimum(D * log_t, D_infty * log_t)),
    ])
    header = ",".join(VOLUME_COLUMNS)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.12g")
        logger.info(f"Wrote volume table for '{spec.label}' to {path}")
    else:
        np.savetxt(sys.stdout, table, delimiter=",", header=header, comments="", fmt="%.12g")
    return 0


def _pair(spec: OperatorSpec, pair_r: Optional[float]) -> PairSpec:
    regime = classify(spec, analyze_structure(spec))
    if pair_r is None:
        return PairSpec(**pairs_for(regime))
    D_infty = regime.D_infty if regime.hypothesis == "B" else None
    return admissible_pair(regime.D, pair_r, D_infty)


def _suite_options(args: argparse.Namespace) -> Dict[str, Any]:
    options: Dict[str, Any] = {}
    if args.suite in ("group", "dispersive") and args.sigma:
        options["sigma"] = args.sigma
    if args.suite == "dispersive":
        if args.t0 and args.t1:
            options["t_window"] = (args.t0, args.t1)
        if args.samples:
            options["samples"] = args.samples
    if args.suite == "strichartz":
        if args.t1:
            options["T"] = args.t1
        if args.samples:
            options["samples"] = args.samples
        if args.refine:
            options["refine"] = True
    return options


def cmd_verify(args: argparse.Namespace) -> int:
    """Run one suite (or all of them); exit 0 iff every check passed."""
    spec, fx, problem = _load_input(args)
    grid = _grid(args, spec.n, problem)
    method = args.method
    if args.suite == "all":
        reports = run_all_suites(spec, grid, fx, args.out, method)
    else:
        pair = _pair(spec, args.pair_r) if args.suite == "strichartz" else None
        report = run_suite(args.suite, spec, grid, pair, fx, method, **_suite_options(args))
        if args.out:
            report.write_outputs(args.out)
        reports = {args.suite: report}
    print(dumps({name: r.to_dict() for name, r in reports.items()}))
    failed = [name for name, r in reports.items() if not r.passed]
    if failed:
        raise SuiteFailure(f"suite(s) {', '.join(failed)} failed for '{spec.label}'")
    return 0


def cmd_propagate(args: argparse.Namespace) -> int:
    """Propagate a field or a Gaussian probe to each requested time."""
    spec, _, problem = _load_input(args)
    if args.field:
        phi = read_field(args.field)
        if phi.grid.n != spec.n:
            raise ProblemFileError(f"field is {phi.grid.n}-D but the operator is {spec.n}-D", field="--field")
    else:
        grid = _grid(args, spec.n, problem)
        sigma = args.sigma or 0.25 * min(grid.L) * (1.0 - 2.0 * grid.margin)
        center = _floats(args.center, "--center") if args.center else None
        omega = _floats(args.omega, "--omega") if args.omega else None
        phi = gaussian_probe(grid, sigma, center=center, omega=omega)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phi_l2 = lebesgue_norm(phi, 2)
    rows = []
    for t in _floats(args.times, "--times"):
        # Step 1: propagate; guard violations abort with their exit code
        u = propagate(spec, phi, t, args.method)

        # Step 2: write the field and its norms
        stem = f"{spec.label}.t{t:+.6g}"
        write_field(u, out / f"{stem}.c16")
        if args.csv:
            write_field_csv(u, out / f"{stem}.csv")
        rows.append([t, lebesgue_norm(u, 2), lebesgue_norm(weighted_field(spec, u), 2) / phi_l2,
                     lebesgue_norm(u, float("inf"))])
    norms = out / f"{spec.label}.norms.csv"
    np.savetxt(norms, np.array(rows, dtype=float).reshape(-1, 4), delimiter=",",
               header="t,l2,weighted_l2_ratio,linf", comments="", fmt="%.12g")
    print(dumps({"label": spec.label, "norms": str(norms), "rows": rows}))
    return 0


def cmd_fixtures(args: argparse.Namespace) -> int:
    """List the gallery or export one fixture as a problem file."""
    if args.action == "list":
        print(dumps(list_fixtures()))
        return 0
    if not args.name:
        raise ProblemFileError("fixtures export needs a fixture name", field="name")
    document = dumps(export_fixture(args.name, **_parse_params(args.param)))
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(document + "\n")
        logger.info(f"Exported fixture '{args.name}' to {path}")
    else:
        print(document)
    return 0


def _add_input(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--fixture", help="Gallery fixture name (see `fixtures list`)")
    source.add_argument("--input", help="Problem file (JSON)")
    parser.add_argument("--param", action="append", metavar="KEY=VALUE", help="Fixture parameter, repeatable")


def _add_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid-n", type=int, help="Points per axis, a power of two (default 128)")
    parser.add_argument("--grid-L", type=float, help="Box half-width L (default 16)")
    parser.add_argument("--margin", type=float, help="Guard-band fraction of the box (default 0.25)")
    parser.add_argument("--sigma", type=float, help="Gaussian probe width")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="drift-strichartz",
        description="Structure, regimes, propagation and estimate checks for i tr(Q D^2) + <Bx, D>",
    )
    parser.add_argument("--workers", type=int, help="Worker pool size (default: logical cores)")
    parser.add_argument("--method", choices=PROPAGATION_METHODS, help="Propagation method (default sheared-spectral)")
    parser.add_argument("--gramian-method", choices=GRAMIAN_METHODS,
                        help="Gramian method (default augmented-exponential)")
    parser.add_argument("--rank-tol", type=float, help="Relative rank threshold (default 1e-9)")
    parser.add_argument("--cluster-tol", type=float, help="Eigenvalue clustering tolerance (default 1e-7)")
    parser.add_argument("--imag-axis-tol", type=float, help="Imaginary-axis tolerance (default 1e-8)")
    parser.add_argument("--zero-block-tol", type=float, help="Zero-block tolerance for B_bar (default 1e-10)")
    parser.add_argument("--fit-t-lo", type=float, help="Growth fit window start (default 50)")
    parser.add_argument("--fit-t-hi", type=float, help="Growth fit window end (default 500)")
    parser.add_argument("--fit-samples", type=int, help="Growth fit samples (default 64)")
    parser.add_argument("--test-mode", action="store_true", default=None,
                        help="Cross-check both Gramian methods on every evaluation")
    parser.add_argument("--log-level", help="Logging level (default INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="(H), ranks, D, regime and Strichartz pair as JSON")
    _add_input(analyze)
    analyze.add_argument("--pair-r", type=float, help="Space exponent of the reported pair")
    analyze.set_defaults(handler=cmd_analyze)

    volume = sub.add_parser("volume", help=f"CSV table with columns {', '.join(VOLUME_COLUMNS)}")
    _add_input(volume)
    volume.add_argument("--t0", type=float, default=1e-2, help="First time (default 1e-2)")
    volume.add_argument("--t1", type=float, default=1e2, help="Last time (default 1e2)")
    volume.add_argument("--samples", type=int, default=64, help="Log-spaced samples (default 64)")
    volume.add_argument("--out", help="CSV path (default: stdout)")
    volume.set_defaults(handler=cmd_volume)

    verify = sub.add_parser("verify", help="Run a verification suite")
    _add_input(verify)
    _add_grid(verify)
    verify.add_argument("--suite", choices=SUITES + ("all",), required=True)
    verify.add_argument("--pair-r", type=float, help="Space exponent for the Strichartz suite")
    verify.add_argument("--t0", type=float, help="Dispersive window start")
    verify.add_argument("--t1", type=float, help="Dispersive window end / Strichartz window T")
    verify.add_argument("--samples", type=int, help="Time samples per sign")
    verify.add_argument("--refine", action="store_true", help="Strichartz: compare against 2N points per axis")
    verify.add_argument("--out", help="Directory for {label}.{suite}.csv/json")
    verify.set_defaults(handler=cmd_verify)

    prop = sub.add_parser("propagate", help="Write U(t) phi for each time plus a norm table")
    _add_input(prop)
    _add_grid(prop)
    prop.add_argument("--field", help="Initial field file (default: a Gaussian probe)")
    prop.add_argument("--center", help="Probe center, comma-separated")
    prop.add_argument("--omega", help="Probe modulation frequency, comma-separated")
    prop.add_argument("--times", required=True, help="Comma-separated times")
    prop.add_argument("--csv", action="store_true", help="Also write index,re,im CSV per time")
    prop.add_argument("--out", required=True, help="Output directory")
    prop.set_defaults(handler=cmd_propagate)

    fixtures = sub.add_parser("fixtures", help="List or export gallery fixtures")
    fixtures.add_argument("action", choices=("list", "export"))
    fixtures.add_argument("name", nargs="?", help="Fixture to export")
    fixtures.add_argument("--param", action="append", metavar="KEY=VALUE", help="Fixture parameter, repeatable")
    fixtures.add_argument("--out", help="Problem file path (default: stdout)")
    fixtures.set_defaults(handler=cmd_fixtures)
    return parser


def _configure(args: argparse.Namespace) -> None:
    overrides = {
        "workers": args.workers,
        "method": args.method,
        "gramian_method": args.gramian_method,
        "rank_tol": args.rank_tol,
        "cluster_tol": args.cluster_tol,
        "imag_axis_tol": args.imag_axis_tol,
        "zero_block_tol": args.zero_block_tol,
        "fit_t_lo": args.fit_t_lo,
        "fit_t_hi": args.fit_t_hi,
        "fit_samples": args.fit_samples,
        "test_mode": args.test_mode,
        "log_level": args.log_level,
    }
    settings = load_settings(**overrides)
    set_settings(settings)
    logging.getLogger().setLevel(settings.log_level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run one command.

    Args:
        argv: Arguments without the program name (sys.argv[1:] by default)

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    try:
        _configure(args)
        return args.handler(args)
    except InconclusiveRegimeError as e:
        logger.error(f"Inconclusive regime: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        print(dumps({"diagnostics": json_ready(e.diagnostics)}), file=sys.stderr)
        return e.exit_code
    except DriftStrichartzError as e:
        logger.error(f"Error in {args.command}: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"Invalid value in {args.command}: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return 1
