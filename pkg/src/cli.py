"""oscint command line.

Usage:
    python oscint.py construct --n 3
    python oscint.py pvint --monomial 3
    python oscint.py pvint --extremal 4 --tol 1e-8
    python oscint.py discrepancy --n 8 --bounds
    python oscint.py sublevel --poly p.json --alpha 0.01
    python oscint.py vdc --k 2 --lambda 1e4 --poly phi.json --a 0 --b 1
    python oscint.py upperbound-trace --poly p.json --alpha auto
    python oscint.py sweep --n-min 2 --n-max 8 --out results/
    python oscint.py selftest --quick
    python oscint.py history --limit 20

Structured output (JSON or CSV, numbers as 17-digit decimal strings) goes to
stdout or ``--out``; logs and tables go to stderr. Exit codes: 0 success,
1 computation error, 2 usage error.

Environment:
    OSCINT_TOL, OSCINT_PRECISION, OSCINT_SEED - defaults for the global flags
    OSCINT_DB_PATH                            - run ledger location
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sqlite3
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from pydantic import ValidationError
from rich import box
from rich.console import Console
from rich.table import Table

from src.config import OutputFormat, apply_overrides, get_settings
from src.discrepancy import discrepancy_integral, region_bounds
from src.errors import OscIntError
from src.experiments import COLUMNS, growth_sweep, persist_sweep
from src.extremal import construct_extremal, implied_constant
from src.phase import Phase, extremal_phase
from src.poly import Poly, load_poly
from src.pvint import pv_integral, pv_integral_truncated, tail_part, unit_interval_integral
from src.selftest import CHECKS, run_selftest
from src.storage import get_storage
from src.sublevel import sublevel_measure
from src.upperbound import kd_trace, vdc_check, vdc_suite

logger = logging.getLogger(__name__)

console = Console(stderr=True)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"


class UsageError(Exception):
    """Arguments parse but do not make sense together."""


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def decimal_strings(obj: Any) -> Any:
    """Floats become 17-significant-digit strings, fractions ``"p/q"``."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return format(obj, ".17g")
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, complex):
        return [format(obj.real, ".17g"), format(obj.imag, ".17g")]
    if isinstance(obj, dict):
        return {str(k): decimal_strings(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [decimal_strings(v) for v in obj]
    if hasattr(obj, "item"):
        return decimal_strings(obj.item())
    return str(obj)


def _render(payload: Any, fmt: OutputFormat) -> str:
    data = decimal_strings(payload)
    if fmt is OutputFormat.JSON:
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    rows = data if isinstance(data, list) else [data]
    buf = io.StringIO()
    keys = sorted({k for row in rows for k in row})
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(keys)
    for row in rows:
        writer.writerow(
            [json.dumps(row.get(k)) if isinstance(row.get(k), (dict, list)) else row.get(k, "") for k in keys]
        )
    return buf.getvalue()


def _emit(payload: Any, args: argparse.Namespace) -> None:
    text = _render(payload, get_settings().output_format)
    out = getattr(args, "out", None)
    if out and args.command != "sweep":
        Path(out).write_text(text, encoding="utf-8")
        console.print(f"[dim]wrote {out}[/]")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _load_poly_arg(args: argparse.Namespace) -> Poly:
    if getattr(args, "monomial", None) is not None:
        return Poly.monomial(args.monomial)
    if getattr(args, "extremal", None) is not None:
        return construct_extremal(args.extremal, args.k).coeff_form
    if getattr(args, "poly", None) is None:
        raise UsageError("a polynomial is required (--poly FILE)")
    return load_poly(args.poly)


def cmd_construct(args: argparse.Namespace) -> dict[str, Any]:
    ep = construct_extremal(args.n, args.k)
    desc = ep.to_descriptor()
    desc["implied_constant"] = implied_constant(args.n, args.k)
    return desc


def cmd_pvint(args: argparse.Namespace) -> dict[str, Any]:
    phase: Poly | Phase
    if args.extremal is not None:
        phase = extremal_phase(args.extremal, args.k)
    else:
        phase = _load_poly_arg(args)
    tol = get_settings().tol
    if args.truncate is not None:
        eps, radius = args.truncate
        value = pv_integral_truncated(phase, eps, radius, tol)
        return {"re": value.real, "im": value.imag, "modulus": abs(value), "eps": eps, "R": radius}
    if args.unit:
        value = unit_interval_integral(phase, tol)
        return {"value": value, "modulus": abs(value)}
    if args.tail is not None:
        return tail_part(phase, args.tail, tol).to_dict()
    return pv_integral(phase, tol).to_dict()


def cmd_discrepancy(args: argparse.Namespace) -> dict[str, Any]:
    report = discrepancy_integral(args.n, get_settings().tol).to_dict()
    if args.bounds:
        report["region_bounds"] = region_bounds(args.n)
    return report


def cmd_sublevel(args: argparse.Namespace) -> dict[str, Any]:
    return sublevel_measure(_load_poly_arg(args), args.alpha, args.lo, args.hi).to_dict()


def cmd_vdc(args: argparse.Namespace) -> dict[str, Any]:
    tol = get_settings().tol
    if args.suite is not None:
        lambdas = tuple(args.lambdas) if args.lambdas else (1e2, 1e4, 1e6)
        return vdc_suite(get_settings().seed, args.suite, lambdas, args.k_max, tol).to_dict()
    if args.k is None or args.lam is None or args.a is None or args.b is None:
        raise UsageError("vdc needs --k, --lambda, --a and --b (or --suite COUNT)")
    return vdc_check(_load_poly_arg(args), args.k, args.lam, args.a, args.b, tol).to_dict()


def cmd_upperbound_trace(args: argparse.Namespace) -> dict[str, Any]:
    alpha: str | float = args.alpha
    if alpha != "auto":
        try:
            alpha = float(alpha)
        except ValueError as exc:
            raise UsageError(f"--alpha must be a number or 'auto', got {args.alpha!r}") from exc
    trace = kd_trace(_load_poly_arg(args), alpha, get_settings().tol)
    out = trace.to_dict()
    out["depth"] = trace.depth
    return out


def _sweep_table(records: Sequence[Any]) -> Table:
    table = Table(title="Growth sweep", box=box.ROUNDED, border_style="cyan")
    table.add_column("n", justify="right", style="bold white")
    table.add_column("d", justify="right")
    table.add_column("I(P_n)", justify="right", style="green")
    table.add_column("I(f_n)", justify="right")
    table.add_column("D_n", justify="right")
    table.add_column("I/log d", justify="right", style="yellow")
    table.add_column("chain", justify="center")
    table.add_column("status", style="dim")
    for r in records:
        table.add_row(
            str(r.n), str(r.d), f"{r.I_Pn:.10f}", f"{r.I_fn:.10f}", f"{r.D_n:.6f}",
            f"{r.ratio_logd:.4f}", "[green]ok[/]" if r.chain_holds else "[red]no[/]", r.status,
        )
    return table


def cmd_sweep(args: argparse.Namespace) -> Any:
    records = growth_sweep(
        args.n_min, args.n_max, get_settings().tol,
        workers=args.workers, allow_large=args.allow_large,
    )
    console.print(_sweep_table(records))
    args._sweep_records = records
    if args.out:
        csv_path, json_path = persist_sweep(records, args.out)
        return {"csv": str(csv_path), "json": str(json_path), "rows": len(records)}
    return [{c: getattr(r, c) for c in COLUMNS} for r in records]


def cmd_selftest(args: argparse.Namespace) -> dict[str, Any]:
    results = run_selftest(quick=args.quick, only=args.only)
    table = Table(title="Self-test", box=box.ROUNDED, border_style="cyan", show_lines=True)
    table.add_column("Check", style="bold white")
    table.add_column("Result", justify="center")
    table.add_column("ms", justify="right", style="dim")
    table.add_column("Detail", style="dim")
    for r in results:
        table.add_row(r.name, "[green]PASS[/]" if r.passed else "[red]FAIL[/]", f"{r.runtime_ms:.0f}", r.detail)
    console.print(table)
    args._failed = not all(r.passed for r in results)
    return {"passed": not args._failed, "checks": [r.to_dict() for r in results]}


def cmd_history(args: argparse.Namespace) -> list[dict[str, Any]]:
    runs = get_storage().list_runs(command=args.filter_command, limit=args.limit)
    table = Table(title="Recorded runs", box=box.ROUNDED, border_style="cyan")
    table.add_column("id", justify="right")
    table.add_column("command", style="bold white")
    table.add_column("status")
    table.add_column("exit", justify="right")
    table.add_column("ms", justify="right", style="dim")
    for run in runs:
        table.add_row(
            str(run["run_id"]), run["command"], run["status"], str(run["exit_code"]), f"{run['runtime_ms']:.0f}"
        )
    console.print(table)
    return [{k: v for k, v in run.items() if k != "result"} for run in runs]


COMMANDS: dict[str, Callable[[argparse.Namespace], Any]] = {
    "construct": cmd_construct,
    "pvint": cmd_pvint,
    "discrepancy": cmd_discrepancy,
    "sublevel": cmd_sublevel,
    "vdc": cmd_vdc,
    "upperbound-trace": cmd_upperbound_trace,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
    "history": cmd_history,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--tol", type=float, default=default, help="Absolute tolerance (default: 1e-9)")
    parser.add_argument("--precision", type=int, default=default, help="Extended-precision bits (default: 256)")
    parser.add_argument("--seed", type=int, default=default, help="Seed for randomized checks (default: 0)")
    parser.add_argument(
        "--format", dest="output_format", choices=[f.value for f in OutputFormat], default=default,
        help="Output format (default: json)",
    )
    parser.add_argument("--out", default=default, help="Output file (sweep: output directory)")
    parser.add_argument("--verbose", "-v", action="store_true", default=default or False, help="Debug logging")
    parser.add_argument("--no-record", action="store_true", default=default or False, help="Skip the run ledger")


def _add_poly_source(parser: argparse.ArgumentParser, extremal: bool = True) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--poly", help="Polynomial JSON descriptor")
    group.add_argument("--monomial", type=int, help="Use t**D")
    if extremal:
        group.add_argument("--extremal", type=int, metavar="N", help="Use the extremal polynomial for n = N")
        parser.add_argument("--k", type=int, default=None, help="Kernel parameter (default: n)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscint",
        description="Principal-value oscillatory integrals of polynomial phases",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _add_global_flags(p, suppress=True)
        return p

    p = command("construct", "Build the extremal polynomial P_k for profile parameter n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=None)

    p = command("pvint", "Principal-value integral |p.v. int exp(i p(t)) dt/t|")
    _add_poly_source(p)
    p.add_argument("--truncate", type=float, nargs=2, metavar=("EPS", "R"), help="Integrate eps <= |t| <= R")
    p.add_argument("--unit", action="store_true", help="Signed integral of sin(p(t))/t over [0, 1]")
    p.add_argument("--tail", type=float, metavar="T0", help="Integral of sin(p(t))/t over [T0, inf)")

    p = command("discrepancy", "Discrepancy integral D_n with its region breakdown")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bounds", action="store_true", help="Include the closed-form region bounds")

    p = command("sublevel", "Exact measure of {t in [lo, hi] : |h(t)| <= alpha}")
    _add_poly_source(p, extremal=False)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lo", type=float, default=1.0)
    p.add_argument("--hi", type=float, default=2.0)

    p = command("vdc", "Van der Corput ratio check")
    _add_poly_source(p, extremal=False)
    p.add_argument("--k", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--suite", type=int, metavar="COUNT", help="Run COUNT seeded admissible phases instead")
    p.add_argument("--lambdas", type=float, nargs="+", help="Suite frequencies (default: 1e2 1e4 1e6)")
    p.add_argument("--k-max", type=int, default=6)

    p = command("upperbound-trace", "Trace the halving recursion of the upper bound")
    _add_poly_source(p, extremal=False)
    p.add_argument("--alpha", default="auto", help="Sublevel height, or 'auto'")

    p = command("sweep", "Growth sweep over n")
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--allow-large", action="store_true", help="Permit n above the desk-scale cap")

    p = command("selftest", "Run the acceptance checks")
    p.add_argument("--quick", action="store_true", help="Small instance counts")
    p.add_argument("--only", nargs="+", choices=[name for name, _ in CHECKS], metavar="CHECK")

    p = command("history", "List recorded runs")
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--command", dest="filter_command", default=None)
    return parser


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=_LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def _record(args: argparse.Namespace, result: Any, status: str, code: int, runtime_ms: float) -> None:
    if args.no_record or not get_settings().record_runs or args.command == "history":
        return
    params = {k: v for k, v in vars(args).items() if not k.startswith("_")}
    try:
        storage = get_storage()
        run_id = storage.save_run(args.command, params, decimal_strings(result), status, code, runtime_ms)
        records = getattr(args, "_sweep_records", None)
        if records:
            storage.save_sweep_records(records, run_id)
    except sqlite3.Error as exc:
        logger.warning("could not record run: %s", exc)


def dispatch(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    _configure_logging(bool(args.verbose))
    overrides = {
        "tol": args.tol,
        "precision": args.precision,
        "seed": args.seed,
        "output_format": args.output_format,
    }
    try:
        apply_overrides(overrides)
    except ValidationError as exc:
        console.print(f"[red]invalid option:[/] {exc.errors()[0]['loc'][0]}: {exc.errors()[0]['msg']}")
        return EXIT_USAGE

    started = time.perf_counter()
    result: Any = None
    try:
        result = COMMANDS[args.command](args)
        _emit(result, args)
        code = EXIT_FAILURE if getattr(args, "_failed", False) else EXIT_OK
        status = "ok" if code == EXIT_OK else "failed"
    except UsageError as exc:
        console.print(f"[red]usage:[/] {exc}")
        parser.print_usage(sys.stderr)
        code, status = EXIT_USAGE, "usage"
    except (OscIntError, OSError) as exc:
        console.print(f"[red]error:[/] {exc}")
        code, status = EXIT_FAILURE, "error"
    except ValueError as exc:
        console.print(f"[red]usage:[/] {exc}")
        code, status = EXIT_USAGE, "usage"
    _record(args, result, status, code, (time.perf_counter() - started) * 1000.0)
    return code


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
