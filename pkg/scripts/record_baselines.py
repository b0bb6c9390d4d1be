"""
Helper script to record regression baselines for the fast verification runs.
"""
import sys
from pathlib import Path
import argparse
import logging

import pandas as pd

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.settings import DATA_DIR
from src.empirics import CurveModel, moment_experiment, tally
from src.errors import DomainError, ResourceError
from src.glmatrix import Kind

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

TALLY_CURVES = [(5, -10, 8), (6, -2, 6), (0, -4, 6)]
MOMENT_PROGRESSIONS = [(1, 1), (3, 1), (3, 2)]
MOMENT_BOXES = [10, 40]


def tally_baselines(x: int, threads: int = None) -> pd.DataFrame:
    """
    Cyclic and Koblitz counts by class for each baseline curve.

    Args:
        x: Bound on the primes
        threads: Worker processes

    Returns:
        DataFrame with one row per (curve, class)
    """
    rows = []
    for a, b, n in TALLY_CURVES:
        logger.info(f"Tallying ({a}, {b}) up to {x} by class mod {n}...")
        result = tally(CurveModel(a, b), x, n, threads)
        for k, counts in result.counts.iterrows():
            rows.append({
                "kind": "tally",
                "a": a,
                "b": b,
                "x": x,
                "n": n,
                "k": k,
                "primes": int(counts["primes"]),
                "cyclic": int(counts["cyclic"]),
                "koblitz": int(counts["koblitz"]),
            })
    return pd.DataFrame(rows)


def moment_baselines(cutoff: int) -> pd.DataFrame:
    """
    Deviation of box averages from the average constants.

    Args:
        cutoff: Euler product truncation prime

    Returns:
        DataFrame with one row per (constant, box, progression)
    """
    rows = []
    for kind in Kind:
        for n, k in MOMENT_PROGRESSIONS:
            for box in MOMENT_BOXES:
                logger.info(f"Moments for {kind.value} (n, k) = ({n}, {k}) over the box {box}...")
                result = moment_experiment(box, box, n, k, kind, cutoff)
                rows.append({
                    "kind": f"moment_{kind.value}",
                    "n": n,
                    "k": k,
                    "box": box,
                    "curves": result.curves,
                    "deviation": result.deviation,
                })
    return pd.DataFrame(rows)


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(description='Record regression baselines for the fast verification runs')
    parser.add_argument('--x', type=int, default=100_000, help='Bound for the tallies')
    parser.add_argument('--cutoff', type=int, default=1_000_000, help='Truncation prime for the moments')
    parser.add_argument('--threads', type=int, default=None, help='Worker processes')
    parser.add_argument('--skip-moments', action='store_true', help='Only record tallies')
    parser.add_argument('-o', '--output', type=Path, default=DATA_DIR / 'baselines.csv', help='Output CSV')
    args = parser.parse_args()

    try:
        frames = [tally_baselines(args.x, args.threads)]
        if not args.skip_moments:
            frames.append(moment_baselines(args.cutoff))
    except (DomainError, ResourceError) as e:
        logger.error(f"Baseline run failed: {e}")
        sys.exit(1)

    df = pd.concat(frames, ignore_index=True)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(args.output, index=False)
    logger.info(f"Saved {len(df)} baseline rows to: {args.output}")


if __name__ == '__main__':
    main()
