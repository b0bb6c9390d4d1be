"""
Loading of image fixtures and curve lists.

Generator files (.gens) hold a level and matrix rows "a b c d", optionally
prefixed by their modulus as "m: a b c d". CM files (.cm) hold d_K, the
conductor f, the level and rows "x y" for x + y w. Blank lines and text after
'#' are ignored in both.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import pandas as pd

# Add parent directory to path for imports
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.settings import DATA_DIR
from src.errors import DomainError, FixtureParseError

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["a", "b"]


@dataclass(frozen=True)
class GeneratorFile:
    """Parsed contents of a .gens file."""

    level: int
    rows: tuple
    label: str = ""


@dataclass(frozen=True)
class CMFile:
    """Parsed contents of a .cm file."""

    d_K: int
    f: int
    level: int
    rows: tuple
    full_image: bool = False
    label: str = ""


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _ints(tokens: list[str], path: Optional[Path], number: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise FixtureParseError(f"expected integers, got {' '.join(tokens)!r}", path, number)


def _read(path) -> tuple[Path, str]:
    path = Path(path)
    if not path.is_absolute() and not path.exists():
        candidate = DATA_DIR / path
        if candidate.exists():
            path = candidate
    if not path.exists():
        raise FileNotFoundError(f"Fixture file not found: {path}")
    logger.info(f"Loading fixture from: {path}")
    return path, path.read_text()


def parse_generator_file(text: str, path: Optional[Path] = None) -> GeneratorFile:
    """
    Parse generator rows of an adelic image.

    Args:
        text: File contents
        path: Source path, used in error messages

    Returns:
        GeneratorFile with the level and (a, b, c, d) rows
    """
    level, label, rows = None, "", []
    for number, line in _lines(text):
        key, sep, rest = line.partition(":")
        key = key.strip().lower()
        if sep and key == "label":
            label = rest.strip()
        elif sep and key == "level":
            (value,) = _ints([rest.strip()], path, number)
            if level is not None and level != value:
                raise FixtureParseError(f"level {value} conflicts with {level}", path, number)
            level = value
        elif sep:
            (modulus,) = _ints([key], path, number)
            if level is None:
                level = modulus
            elif modulus != level:
                raise FixtureParseError(f"row modulus {modulus} differs from level {level}", path, number)
            rows.append((number, _ints(rest.split(), path, number)))
        else:
            rows.append((number, _ints(line.split(), path, number)))

    if level is None:
        raise FixtureParseError("no level given", path)
    if level < 2:
        raise FixtureParseError(f"level must be at least 2, got {level}", path)
    for number, row in rows:
        if len(row) != 4:
            raise FixtureParseError(f"expected 4 entries per matrix, got {len(row)}", path, number)
    if not rows:
        raise FixtureParseError("no generators given", path)
    return GeneratorFile(level=level, rows=tuple(tuple(r) for _, r in rows), label=label)


def parse_cm_file(text: str, path: Optional[Path] = None) -> CMFile:
    """
    Parse a CM image fixture.

    Args:
        text: File contents
        path: Source path, used in error messages

    Returns:
        CMFile with the order data, level and (x, y) rows
    """
    header = {}
    label, full_image, rows = "", False, []
    for number, line in _lines(text):
        key, sep, rest = line.partition(":")
        key = key.strip().lower()
        if sep and key == "label":
            label = rest.strip()
        elif sep and key == "full":
            full_image = rest.strip().lower() in ("yes", "true", "1")
        elif sep and key in ("d_k", "f", "level"):
            (header[key],) = _ints([rest.strip()], path, number)
        elif sep:
            raise FixtureParseError(f"unknown key {key!r}", path, number)
        else:
            row = _ints(line.split(), path, number)
            if len(row) != 2:
                raise FixtureParseError(f"expected 2 entries per element, got {len(row)}", path, number)
            rows.append(tuple(row))

    for key in ("d_k", "level"):
        if key not in header:
            raise FixtureParseError(f"missing {key}", path)
    if not rows and not full_image:
        raise FixtureParseError("no generators given and full is not set", path)
    return CMFile(
        d_K=header["d_k"],
        f=header.get("f", 1),
        level=header["level"],
        rows=tuple(rows),
        full_image=full_image,
        label=label,
    )


def load_generator_file(path) -> GeneratorFile:
    path, text = _read(path)
    return parse_generator_file(text, path)


def load_cm_file(path) -> CMFile:
    path, text = _read(path)
    return parse_cm_file(text, path)


def load_curve_list(filepath) -> pd.DataFrame:
    """
    Load curve coefficients (a, b) from CSV or Excel.

    Args:
        filepath: Path to a file with columns a and b (optional label)

    Returns:
        DataFrame with integer columns a, b, without duplicates or singular models
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"Curve list not found: {filepath}")

    logger.info(f"Loading curves from: {filepath}")
    if filepath.suffix.lower() == ".csv":
        df = pd.read_csv(filepath, comment="#")
    elif filepath.suffix.lower() in [".xlsx", ".xls"]:
        df = pd.read_excel(filepath)
    else:
        raise ValueError(f"Unsupported file format: {filepath.suffix}")

    missing = [c for c in CURVE_COLUMNS if c not in df.columns]
    if missing:
        raise FixtureParseError(f"missing columns {missing}", filepath)

    df = df.dropna(subset=CURVE_COLUMNS)
    try:
        df = df.astype({c: "int64" for c in CURVE_COLUMNS})
    except (ValueError, TypeError) as exc:
        raise FixtureParseError(f"non-integer coefficients: {exc}", filepath)

    singular = 4 * df["a"] ** 3 + 27 * df["b"] ** 2 == 0
    if singular.any():
        logger.warning(f"Dropping {int(singular.sum())} singular models")
        df = df[~singular]

    before = len(df)
    df = df.drop_duplicates(subset=CURVE_COLUMNS).reset_index(drop=True)
    if len(df) < before:
        logger.info(f"Removed {before - len(df)} duplicate curves")
    if df.empty:
        raise DomainError(f"no usable curves in {filepath}")

    logger.info(f"Loaded {len(df)} curves")
    return df
