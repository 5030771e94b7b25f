"""
PHFRACTAL Command Line
======================
Batch front-end over the run orchestrator.

Subcommands:
- exact    symbolic σ_i, β_i^phf and χ_a^phf
- numeric  cubical persistence of a pre-fractal
- compare  numeric vs symbolic bar matching
- lw       Llorente-Winter average Euler number comparison

Exit codes: 0 ok, 2 arguments, 3 convergence, 4 resources, 5 mismatch, 6 inapplicable.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

if sys.version_info < (3, 11):
    from exceptiongroup import BaseExceptionGroup

import anyio
from pydantic import ValidationError

from .config import (
    CURVE_POINTS,
    DEFAULT_OUTPUT_DIR,
    FLOOR_FACTOR,
    LOG_FORMAT,
    LOG_LEVEL,
    SEQUENCE_J_MAX,
    SEQUENCE_TOL,
    TABLE_DIGITS,
)
from .errors import ArgumentError, ConvergenceError, PhFractalError
from .orchestrator import orchestrator
from .structs import InvariantReport, RunConfig

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phfractal",
        description="Average ph-fractal Betti and Euler numbers of self-similar fractals.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("fractal", help="cantor | sierpinski_carpet | cantor_dust | menger, or a spec JSON file")
        p.add_argument("--out", type=Path, default=DEFAULT_OUTPUT_DIR, help="Output directory")
        p.add_argument("--json", action="store_true", help="Print the JSON result instead of a table")
        p.add_argument("--no-meta", action="store_true", help="Omit timestamps and runtime stats")

    def numeric(p: argparse.ArgumentParser) -> None:
        p.add_argument("--depth", type=int, required=True, help="Pre-fractal depth k")
        p.add_argument("--res", type=int, required=True, help="Cells per unit length")
        p.add_argument("--workers", type=int, default=1, help="Processes for the distance transform")
        p.add_argument("--memory-budget", type=float, default=None, help="Bytes; overrides PHFRACTAL_MEMORY_BUDGET")
        p.add_argument("--floor-factor", type=float, default=FLOOR_FACTOR, help="Drop bars shorter than this many cells")

    p_exact = sub.add_parser("exact", help="Symbolic invariants")
    common(p_exact)
    p_exact.add_argument("--j-max", type=int, default=SEQUENCE_J_MAX)
    p_exact.add_argument("--seq-tol", type=float, default=SEQUENCE_TOL)
    p_exact.add_argument("--delta", type=float, default=None, help="Also report the Llorente-Winter estimate at δ")

    p_numeric = sub.add_parser("numeric", help="Numerical persistence of a pre-fractal")
    common(p_numeric)
    numeric(p_numeric)
    p_numeric.add_argument("--curve-eps", type=float, nargs="+", default=[], help="Report Betti numbers at these ε")
    p_numeric.add_argument("--curve-points", type=int, default=CURVE_POINTS)
    p_numeric.add_argument("--plot", action="store_true", help="Save a Betti-curve PNG")

    p_compare = sub.add_parser("compare", help="Match numeric bars against the symbolic families")
    common(p_compare)
    numeric(p_compare)
    p_compare.add_argument("--tol", type=float, default=None, help="Matching tolerance (default 2h)")

    p_lw = sub.add_parser("lw", help="Llorente-Winter comparison")
    common(p_lw)
    p_lw.add_argument("--delta", type=float, default=None, help="δ_min (default 1e-6)")
    return parser


def parse_config(argv: Optional[List[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    fields = {
        "subcommand": args.subcommand,
        "fractal": args.fractal,
        "output_dir": args.out,
        "json_output": args.json,
        "no_meta": args.no_meta,
    }
    for name in ("depth", "workers", "memory_budget", "floor_factor", "delta", "tol",
                 "curve_eps", "curve_points", "plot", "j_max", "seq_tol"):
        if getattr(args, name, None) is not None:
            fields[name] = getattr(args, name)
    if getattr(args, "res", None) is not None:
        fields["resolution"] = args.res
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        raise ArgumentError(f"invalid arguments: {e}") from e


def _round(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.{TABLE_DIGITS}g}"


def format_report(report: InvariantReport) -> str:
    lines = [f"{report.fractal} (d∞ = {_round(report.diameter)})", "  i  sigma_i     beta_closed  beta_sequence"]
    for d in report.degrees:
        lines.append(f"  {d.i}  {_round(d.sigma):<10}  {_round(d.beta_closed):<11}  {_round(d.beta_sequence)}")
    lines.append(f"  chi_a^phf = {_round(report.euler_phf)}")
    if report.lw_comparison is not None:
        lw = report.lw_comparison
        lines.append(f"  chi_f^a(δ={lw.delta_min:g}) = {_round(lw.chi_estimate)}")
    return "\n".join(lines)


async def dispatch(config: RunConfig) -> str:
    """Run one subcommand and return what to print."""
    if config.subcommand == "exact":
        report = await orchestrator.run_exact(config)
        return report.model_dump_json(indent=2) if config.json_output else format_report(report)

    if config.subcommand == "numeric":
        summary = await orchestrator.run_numeric(config)
        if config.json_output:
            return summary.model_dump_json(indent=2)
        lines = [f"{summary.fractal}: grid {summary.grid_shape}, h = {_round(summary.spacing)}"]
        lines += [f"  H{i}: {n} bars" for i, n in sorted(summary.bars_per_degree.items())]
        lines += [
            f"  ε = {_round(eps)}: " + " ".join(f"b{i}={b}" for i, b in enumerate(betti))
            for eps, betti in zip(summary.curve_eps, summary.curve_betti)
        ]
        return "\n".join(lines)

    if config.subcommand == "compare":
        report = await orchestrator.run_compare(config)
        if config.json_output:
            return report.model_dump_json(indent=2)
        return "\n".join(
            f"  H{d.degree}: matched {d.matched}, unmatched symbolic {d.unmatched_symbolic}, "
            f"unmatched numeric {d.unmatched_numeric}, max displacement {_round(d.max_displacement)}"
            for d in report.per_degree
        )

    comparison = await orchestrator.run_lw(config)
    if config.json_output:
        return comparison.model_dump_json(indent=2)
    return (
        f"  chi_f^a(δ={comparison.delta_min:g}) = {_round(comparison.chi_estimate)}\n"
        f"  per-scale estimate = {_round(comparison.chi_increment)}\n"
        f"  |chi_f^a - chi_a^phf| = {_round(comparison.discrepancy)}"
    )


def _first_error(group: BaseExceptionGroup) -> Optional[PhFractalError]:
    """Depth-first search of a task-group failure for the first PhFractalError."""
    for exc in group.exceptions:
        if isinstance(exc, PhFractalError):
            return exc
        if isinstance(exc, BaseExceptionGroup):
            found = _first_error(exc)
            if found is not None:
                return found
    return None


def _exit_with(error: PhFractalError) -> int:
    if isinstance(error, ConvergenceError):
        logger.error(f"{error} (report written with diagnostics)")
    else:
        logger.error(str(error))
    return error.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
    try:
        config = parse_config(argv)
        print(anyio.run(dispatch, config))
        return 0
    except PhFractalError as e:
        return _exit_with(e)
    except ValidationError as e:
        logger.error(f"invalid input: {e}")
        return ArgumentError.exit_code
    except BaseExceptionGroup as group:
        error = _first_error(group)
        if error is None:
            raise
        return _exit_with(error)


if __name__ == "__main__":
    sys.exit(main())
