"""
Main entry point for the reduction constants tool.
"""
import argparse
import logging
from math import gcd
from pathlib import Path
from typing import Optional

import pandas as pd

# Add parent directory to path for imports
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.runtime import RuntimeConfig
from config.settings import OUTPUT_FORMATS
from src.cm import cm_koblitz_ap, load_cm_image, supersingular_vanishing_classes
from src.empirics import CurveModel, compare, moment_average, moment_experiment, records, tally
from src.errors import DomainError, ResourceError
from src.eulerprod import ap_constant, average_table
from src.fixtures import load_curve_list
from src.glmatrix import Kind
from src.nonserre import constant_from_image, load_image
from src.report_generator import create_excel_report, format_frame, write_records_csv
from src.serre import build_serre_data, serre_constant, serre_constants_for_n

logger = logging.getLogger(__name__)

KINDS = [k.value for k in Kind]


def setup_logging(verbose: bool = False):
    """Configure logging."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )


def _add_progression(parser, kind: bool = True):
    parser.add_argument("--n", type=int, default=1, help="Modulus of the progression")
    parser.add_argument("--k", type=int, default=1, help="Residue class coprime to n")
    if kind:
        parser.add_argument("--kind", choices=KINDS, default=Kind.KOBLITZ.value, help="Constant to compute")


def build_parser() -> argparse.ArgumentParser:
    """Command line parser with one subcommand per computation."""
    parser = argparse.ArgumentParser(
        prog="constants",
        description="Cyclicity and Koblitz constants of elliptic curves in arithmetic progressions",
    )
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default="table", help="Output format")
    parser.add_argument("--cutoff", type=int, default=None, help="Euler product truncation prime")
    parser.add_argument("--threads", type=int, default=None, help="Worker processes for tallies")
    parser.add_argument("--output", type=Path, default=None, help="Directory for written reports")
    parser.add_argument("--xlsx", type=Path, default=None, help="Also write an Excel report to this path")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")

    sub = parser.add_subparsers(dest="command", required=True)

    avg = sub.add_parser("avg", help="Average constant for primes p = k (mod n)")
    _add_progression(avg)

    table = sub.add_parser("table", help="Average constants for every n up to n-max")
    table.add_argument("--n-max", type=int, default=6, help="Largest modulus")
    table.add_argument("--kind", choices=KINDS + ["both"], default="both", help="Constants to tabulate")

    serre = sub.add_parser("serre", help="Constant of a Serre curve Y^2 = X^3 + aX + b")
    serre.add_argument("--a", type=int, required=True)
    serre.add_argument("--b", type=int, required=True)
    _add_progression(serre)

    image = sub.add_parser("image", help="Constant from an explicit adelic image")
    image.add_argument("--file", type=Path, required=True, help="Generator file (.gens)")
    _add_progression(image)

    cm = sub.add_parser("cm", help="Koblitz constant of a CM curve")
    cm.add_argument("--file", type=Path, required=True, help="CM image file (.cm)")
    _add_progression(cm, kind=False)

    verify = sub.add_parser("verify", help="Count cyclic and Koblitz primes up to x")
    verify.add_argument("--a", type=int, required=True)
    verify.add_argument("--b", type=int, required=True)
    verify.add_argument("--x", type=int, default=100_000, help="Bound on the primes")
    verify.add_argument("--n", type=int, default=1, help="Modulus for the classes")
    source = verify.add_mutually_exclusive_group()
    source.add_argument("--image", type=Path, default=None, help="Predict from this generator file")
    source.add_argument("--cm", type=Path, default=None, help="Predict Koblitz counts from this CM file")
    verify.add_argument("--records", type=Path, default=None, help="Write the per-prime records here")

    moments = sub.add_parser("moments", help="Average Serre-curve constants over a box of curves")
    moments.add_argument("--A", type=int, default=10, help="Bound on |a|")
    moments.add_argument("--B", type=int, default=10, help="Bound on |b|")
    moments.add_argument("--curves", type=Path, default=None, help="Curve list (CSV or Excel) instead of the box")
    _add_progression(moments)

    return parser


def _constant_row(c) -> dict:
    return {"value": c.value, "exact_factor": c.exact_factor, "cutoff": c.cutoff_prime, "tail_bound": c.tail_bound}


def cmd_avg(args) -> dict:
    kind = Kind(args.kind)
    c = ap_constant(kind, args.n, args.k)
    row = {"kind": kind.value, "n": args.n, "k": args.k, **_constant_row(c)}
    return {"average": pd.DataFrame([row])}


def cmd_table(args) -> dict:
    kinds = list(Kind) if args.kind == "both" else [Kind(args.kind)]
    return {kind.value: average_table(kind, args.n_max).reset_index() for kind in kinds}


def cmd_serre(args) -> dict:
    kind = Kind(args.kind)
    curve = build_serre_data(args.a, args.b)
    result = serre_constant(curve, args.n, args.k, kind)
    row = {
        "a": curve.a,
        "b": curve.b,
        "delta_prime": curve.delta_prime,
        "m_E": curve.m_E,
        "kind": kind.value,
        "n": args.n,
        "k": args.k,
        "L": result.L,
        "correction": result.correction,
        "value": result.constant.value,
        "reference": result.reference.value,
        "tail_bound": result.constant.tail_bound,
    }
    return {"serre": pd.DataFrame([row])}


def cmd_image(args) -> dict:
    kind = Kind(args.kind)
    image = load_image(args.file)
    result = constant_from_image(image, args.n, args.k, kind)
    row = {
        "image": image.label,
        "level": image.level,
        "kind": kind.value,
        "n": args.n,
        "k": args.k,
        "L": result.split.L,
        "delta": result.delta,
        "leading": result.leading,
        "value": result.constant.value,
        "reference": ap_constant(kind, args.n, args.k).value,
        "tail_bound": result.constant.tail_bound,
    }
    return {"image": pd.DataFrame([row])}


def cmd_cm(args) -> dict:
    image = load_cm_image(args.file)
    result = cm_koblitz_ap(image, args.n, args.k)
    vanishing = supersingular_vanishing_classes(image, args.n)
    if vanishing:
        logger.info(f"Classes mod {args.n} with only supersingular primes: {vanishing}")
    row = {
        "image": image.label,
        "d_K": image.order.d_K,
        "n": args.n,
        "k": args.k,
        "L": result.L,
        "count": result.count,
        "group_order": result.group_order,
        "leading": result.leading,
        "value": result.constant.value,
        "reference": ap_constant(Kind.KOBLITZ, args.n, args.k).value,
        "tail_bound": result.constant.tail_bound,
    }
    return {"cm": pd.DataFrame([row])}


def _verify_constants(args, kind: Kind) -> Optional[dict]:
    classes = [k for k in range(1, args.n + 1) if gcd(args.n, k) == 1] if args.n > 1 else [1]
    if args.cm is not None:
        if kind == Kind.CYCLIC:
            return None
        image = load_cm_image(args.cm)
        return {k: cm_koblitz_ap(image, args.n, k).constant for k in classes}
    if args.image is not None:
        image = load_image(args.image)
        return {k: constant_from_image(image, args.n, k, kind).constant for k in classes}
    curve = build_serre_data(args.a, args.b)
    return {k: c.constant for k, c in serre_constants_for_n(curve, args.n, kind).items()}


def cmd_verify(args) -> dict:
    curve = CurveModel(args.a, args.b)
    result = tally(curve, args.x, args.n)
    frames = {"tally": result.counts.reset_index()}
    for kind in Kind:
        constants = _verify_constants(args, kind)
        if constants is not None:
            frames[f"compare_{kind.value}"] = compare(result, constants, kind)
    if args.records is not None:
        write_records_csv(records(curve, args.x, args.n), args.records)
    return frames


def cmd_moments(args) -> dict:
    kind = Kind(args.kind)
    if args.curves is not None:
        result = moment_average(load_curve_list(args.curves), args.n, args.k, kind)
    else:
        result = moment_experiment(args.A, args.B, args.n, args.k, kind)
    row = {
        "kind": kind.value,
        "n": args.n,
        "k": args.k,
        "curves": result.curves,
        "average": result.average,
        "reference": result.reference.value,
        "deviation": result.deviation,
        "mean_correction": result.mean_correction,
    }
    return {"moments": pd.DataFrame([row])}


COMMANDS = {
    "avg": cmd_avg,
    "table": cmd_table,
    "serre": cmd_serre,
    "image": cmd_image,
    "cm": cmd_cm,
    "verify": cmd_verify,
    "moments": cmd_moments,
}


def run(args) -> dict:
    """Apply overrides, validate the configuration and run the selected command."""
    RuntimeConfig.override(threads=args.threads, cutoff=args.cutoff, output_dir=args.output)
    valid, message = RuntimeConfig.validate_config()
    if not valid:
        raise DomainError(message)
    return COMMANDS[args.command](args)


def main(argv: Optional[list[str]] = None) -> int:
    """Main execution function; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    logger.info("=" * 50)
    logger.info(f"Reduction constants: {args.command}")
    logger.info("=" * 50)

    try:
        frames = run(args)
    except ResourceError as e:
        logger.error(f"Resource limit: {e}")
        return 3
    except (DomainError, FileNotFoundError, ValueError) as e:
        logger.error(str(e))
        return 2

    for i, (name, df) in enumerate(frames.items()):
        if i:
            print()
        title = name.replace("_", " ").upper() if args.format != "csv" else None
        print(format_frame(df, args.format, title), end="")

    if args.xlsx is not None:
        summary = {"command": args.command, "cutoff": RuntimeConfig.CUTOFF, "threads": RuntimeConfig.THREADS}
        create_excel_report(frames, summary, args.xlsx)

    logger.info("Done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
