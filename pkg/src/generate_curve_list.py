"""
Generate the box of curves used by the moment experiment.
"""
import argparse
from pathlib import Path
import pandas as pd

# Add parent directory to path for imports
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.settings import DATA_DIR
from src.empirics import curve_box
from src.serre import build_serre_data


def generate_curves(A: int = 10, B: int = 10) -> pd.DataFrame:
    """
    Nonsingular curves Y^2 = X^3 + aX + b with |a| <= A, |b| <= B and their Serre invariants.

    Args:
        A: Bound on |a|
        B: Bound on |b|

    Returns:
        DataFrame with columns a, b, discriminant, delta_prime, m_E
    """
    box = curve_box(A, B)
    rows = []
    for a, b in box.itertuples(index=False):
        data = build_serre_data(int(a), int(b))
        rows.append({
            "a": data.a,
            "b": data.b,
            "discriminant": data.discriminant,
            "delta_prime": data.delta_prime,
            "m_E": data.m_E,
        })
    return pd.DataFrame(rows)


def main():
    """Generate and save a curve list."""
    parser = argparse.ArgumentParser(description="Write the (a, b) curve box for the moment experiment")
    parser.add_argument("-A", type=int, default=10, help="Bound on |a|")
    parser.add_argument("-B", type=int, default=10, help="Bound on |b|")
    parser.add_argument("-o", "--output", type=Path, default=None, help="Output CSV")
    args = parser.parse_args()

    print("Generating curve list...")
    DATA_DIR.mkdir(parents=True, exist_ok=True)

    df = generate_curves(args.A, args.B)
    output_path = args.output or DATA_DIR / f"moment_curves_{args.A}.csv"
    df.to_csv(output_path, index=False)

    print(f"Generated {len(df)} curves")
    print(f"Saved to: {output_path}")
    print(f"\nSample data:")
    print(df.head(10).to_string())

    print(f"\nSquarefree parts:")
    print(df["delta_prime"].value_counts().head(10))


if __name__ == "__main__":
    main()
