"""
Report generation - console tables, CSV, key-value trees and Excel workbooks.
"""
import logging
from datetime import datetime
from fractions import Fraction
from pathlib import Path
from typing import Optional

import pandas as pd
from openpyxl import Workbook
from openpyxl.chart import BarChart, Reference
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils.dataframe import dataframe_to_rows

# Add parent directory to path for imports
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.runtime import RuntimeConfig
from config.settings import FLOAT_DIGITS, OUTPUT_FORMATS, REPORT_TITLE
from src.errors import DomainError

logger = logging.getLogger(__name__)

RECORD_HEADER = ["p", "N", "a_p", "cyclic", "koblitz", "class"]


def _plain(df: pd.DataFrame) -> pd.DataFrame:
    """Booleans as 0/1 and exact rationals as strings."""
    df = df.copy()
    for col in df.columns:
        if df[col].dtype == bool:
            df[col] = df[col].astype(int)
        elif df[col].dtype == object:
            df[col] = df[col].map(lambda v: str(v) if isinstance(v, Fraction) else v)
    return df


def _format_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.{FLOAT_DIGITS}f}"
    return str(value)


def format_frame(df: pd.DataFrame, fmt: str = "table", title: Optional[str] = None) -> str:
    """
    Render a DataFrame as a console table, CSV or an indented key-value tree.

    Args:
        df: Frame to render
        fmt: One of table, csv, kv
        title: Optional heading for table and kv output

    Returns:
        Rendered text
    """
    if fmt not in OUTPUT_FORMATS:
        raise DomainError(f"unknown format {fmt!r}; expected one of {OUTPUT_FORMATS}")
    df = _plain(df)

    if fmt == "csv":
        return df.to_csv(index=False, float_format=f"%.{FLOAT_DIGITS}f", lineterminator="\n")

    if fmt == "table":
        body = df.to_string(index=False, float_format=lambda v: f"{v:.{FLOAT_DIGITS}f}", na_rep="-")
        if title:
            return f"{title}\n{'-' * 50}\n{body}\n"
        return body + "\n"

    lines = [f"{title}:"] if title else []
    indent = "  " if title else ""
    key = df.columns[0]
    for _, row in df.iterrows():
        lines.append(f"{indent}{key} {_format_value(row[key])}:")
        for col in df.columns[1:]:
            if pd.isna(row[col]):
                continue
            lines.append(f"{indent}  {col}: {_format_value(row[col])}")
    return "\n".join(lines) + "\n"


def write_records_csv(records: pd.DataFrame, path: Path) -> Path:
    """
    Write a per-prime record dump with header p,N,a_p,cyclic,koblitz,class.

    Args:
        records: Frame with the record columns
        path: Destination file

    Returns:
        Path written
    """
    missing = [c for c in RECORD_HEADER if c not in records.columns]
    if missing:
        raise DomainError(f"record frame lacks columns {missing}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _plain(records[RECORD_HEADER]).to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(records)} records to: {path}")
    return path


def create_excel_report(
    frames: dict,
    summary: Optional[dict] = None,
    output_path: Optional[Path] = None,
) -> Path:
    """
    Create a formatted Excel report with a summary sheet and one sheet per frame.

    Sheets whose frame has observed and predicted columns get a bar chart.

    Args:
        frames: Sheet name -> DataFrame
        summary: Key-value pairs for the summary sheet
        output_path: Where to save the report

    Returns:
        Path to the generated report
    """
    if output_path is None:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        output_path = RuntimeConfig.OUTPUT_DIR / f"constants_report_{timestamp}.xlsx"
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    wb = Workbook()

    # Style definitions
    header_font = Font(bold=True, color="FFFFFF")
    header_fill = PatternFill(start_color="4472C4", end_color="4472C4", fill_type="solid")
    header_alignment = Alignment(horizontal="center", vertical="center")
    thin_border = Border(
        left=Side(style="thin"),
        right=Side(style="thin"),
        top=Side(style="thin"),
        bottom=Side(style="thin")
    )

    def write_dataframe(ws, df, start_row=1):
        """Write DataFrame to worksheet with formatting."""
        for r_idx, row in enumerate(dataframe_to_rows(df, index=False, header=True), start_row):
            for c_idx, value in enumerate(row, 1):
                cell = ws.cell(row=r_idx, column=c_idx, value=value)
                cell.border = thin_border
                if r_idx == start_row:
                    cell.font = header_font
                    cell.fill = header_fill
                    cell.alignment = header_alignment

    # === Summary Sheet ===
    ws_summary = wb.active
    ws_summary.title = "Summary"
    ws_summary["A1"] = REPORT_TITLE
    ws_summary["A1"].font = Font(bold=True, size=16)
    ws_summary["A2"] = f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}"

    row = 4
    for key, value in (summary or {}).items():
        ws_summary.cell(row=row, column=1, value=key.replace("_", " ").title())
        ws_summary.cell(row=row, column=2, value=_format_value(value))
        row += 1
    ws_summary.column_dimensions["A"].width = 25
    ws_summary.column_dimensions["B"].width = 30

    # === One sheet per frame ===
    for name, df in frames.items():
        ws = wb.create_sheet(str(name)[:31])
        df = _plain(df.reset_index() if df.index.name else df)
        write_dataframe(ws, df)
        for idx in range(len(df.columns)):
            ws.column_dimensions[chr(ord("A") + idx % 26)].width = 18

        if {"observed", "predicted_integral"} <= set(df.columns):
            chart = BarChart()
            chart.title = f"{name}: observed vs predicted"
            chart.x_axis.title = "Class"
            chart.y_axis.title = "Primes"
            observed_col = list(df.columns).index("observed") + 1
            predicted_col = list(df.columns).index("predicted_integral") + 1
            for col in (observed_col, predicted_col):
                data = Reference(ws, min_col=col, min_row=1, max_row=len(df) + 1)
                chart.add_data(data, titles_from_data=True)
            cats = Reference(ws, min_col=1, min_row=2, max_row=len(df) + 1)
            chart.set_categories(cats)
            ws.add_chart(chart, f"{chr(ord('A') + len(df.columns) + 1)}2")

    wb.save(output_path)
    logger.info(f"Report saved to: {output_path}")
    return output_path
