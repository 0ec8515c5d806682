"""
Report writers for verification runs.

Every command emits:
1. A JSON report (sorted keys, stable float formatting)
2. Optionally a CSV of its sweep rows
3. Optionally an Excel workbook with a summary sheet, one sheet per sweep
   table and the tolerance block in force
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side

from config import APP_NAME, APP_VERSION, PASS, get_config

logger = logging.getLogger(__name__)

# Style definitions
HEADER_FONT = Font(bold=True, color="FFFFFF")
HEADER_FILL = PatternFill(start_color="4472C4", end_color="4472C4", fill_type="solid")
SKIPPED_FILL = PatternFill(start_color="FFEB9C", end_color="FFEB9C", fill_type="solid")
MISMATCH_FILL = PatternFill(start_color="FFC7CE", end_color="FFC7CE", fill_type="solid")  # Failed checks
SUCCESS_FILL = PatternFill(start_color="C6EFCE", end_color="C6EFCE", fill_type="solid")
ALT_ROW_FILL = PatternFill(start_color="F2F2F2", end_color="F2F2F2", fill_type="solid")
THIN_BORDER = Border(
    left=Side(style='thin'),
    right=Side(style='thin'),
    top=Side(style='thin'),
    bottom=Side(style='thin')
)
SCIENTIFIC_FORMAT = '0.000E+00'
SLOPE_FORMAT = '0.0000'

PathLike = Union[str, Path]


def _json_default(value: Any) -> Any:
    """numpy scalars and arrays, paths and anything with to_dict."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    return str(value)


def to_json(data: Mapping[str, Any]) -> str:
    """Deterministic JSON text of a report."""
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default)


def write_json(data: Mapping[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(data) + "\n", encoding='utf-8')
    logger.info("Wrote JSON report to %s", path)
    return path


def write_csv(rows: Sequence[Mapping[str, Any]], path: PathLike) -> Path:
    """Sweep rows as CSV; columns in first-seen order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows)).to_csv(path, index=False)
    logger.info("Wrote %d rows to %s", len(rows), path)
    return path


def stage_statuses(report: Mapping[str, Any]) -> List[Dict[str, str]]:
    """Top-level sections carrying a status, in key order."""
    out = []
    for key in sorted(report):
        value = report[key]
        if isinstance(value, Mapping) and 'status' in value:
            out.append({'section': key, 'status': str(value['status'])})
    if 'status' in report:
        out.append({'section': 'overall', 'status': str(report['status'])})
    return out


def generate_report_workbook(
    report: Mapping[str, Any],
    output_path: PathLike,
    tables: Optional[Mapping[str, Sequence[Mapping[str, Any]]]] = None,
    title: str = "",
) -> Path:
    """
    Generate an Excel workbook for one run.

    Args:
        report: The JSON-ready report
        output_path: Path to save the workbook
        tables: Sheet name -> sweep rows
        title: Heading of the summary sheet

    Returns:
        Path to the generated file
    """
    wb = Workbook()

    # Remove default sheet
    if 'Sheet' in wb.sheetnames:
        del wb['Sheet']

    _create_summary_sheet(wb, report, title)
    for name, rows in (tables or {}).items():
        if rows:
            _create_table_sheet(wb, name, rows)
    _create_tolerance_sheet(wb)

    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(path)
    logger.info("Wrote workbook to %s", path)
    return path


def _write_header(ws, headers: Sequence[str], row: int = 1) -> None:
    for col, header in enumerate(headers, 1):
        cell = ws.cell(row=row, column=col, value=header)
        cell.font = HEADER_FONT
        cell.fill = HEADER_FILL
        cell.alignment = Alignment(horizontal='center')
        cell.border = THIN_BORDER


def _status_fill(status: Any) -> PatternFill:
    if status == PASS or status is True:
        return SUCCESS_FILL
    if status in (None, "skipped"):
        return SKIPPED_FILL
    return MISMATCH_FILL


def _create_summary_sheet(wb: Workbook, report: Mapping[str, Any], title: str) -> None:
    """Run heading and the status of every section."""
    ws = wb.create_sheet("Summary")
    ws.cell(row=1, column=1, value=title or APP_NAME).font = Font(bold=True, size=14)
    ws.cell(row=2, column=1, value=f"{APP_NAME} {APP_VERSION}")

    _write_header(ws, ["Section", "Status"], row=4)
    for row_idx, entry in enumerate(stage_statuses(report), 5):
        ws.cell(row=row_idx, column=1, value=entry['section'])
        cell = ws.cell(row=row_idx, column=2, value=entry['status'])
        cell.fill = _status_fill(entry['status'])
        if entry['section'] == 'overall':
            ws.cell(row=row_idx, column=1).font = Font(bold=True)
            cell.font = Font(bold=True)

    ws.column_dimensions['A'].width = 30
    ws.column_dimensions['B'].width = 28
    ws.freeze_panes = "A5"


def _create_table_sheet(wb: Workbook, name: str, rows: Sequence[Mapping[str, Any]]) -> None:
    """One sweep table; failing rows in red, others banded."""
    ws = wb.create_sheet(name[:31])
    frame = pd.DataFrame(list(rows))
    headers = [str(c) for c in frame.columns]
    _write_header(ws, headers)

    status_col = headers.index('status') + 1 if 'status' in headers else None
    for row_idx, record in enumerate(frame.itertuples(index=False), 2):
        for col, value in enumerate(record, 1):
            if isinstance(value, (np.generic,)):
                value = value.item()
            if isinstance(value, (list, tuple, dict)):
                value = json.dumps(value, default=_json_default)
            cell = ws.cell(row=row_idx, column=col, value=value)
            if isinstance(value, float):
                header = headers[col - 1]
                cell.number_format = SLOPE_FORMAT if 'slope' in header else SCIENTIFIC_FORMAT

        failed = status_col is not None and ws.cell(row=row_idx, column=status_col).value != PASS
        if failed:
            for col in range(1, len(headers) + 1):
                ws.cell(row=row_idx, column=col).fill = MISMATCH_FILL
        elif row_idx % 2 == 0:
            for col in range(1, len(headers) + 1):
                ws.cell(row=row_idx, column=col).fill = ALT_ROW_FILL

    for col, header in enumerate(headers, 1):
        ws.column_dimensions[_get_column_letter(col)].width = max(12, min(40, len(header) + 4))

    # Add autofilter
    ws.auto_filter.ref = f"A1:{_get_column_letter(len(headers))}{len(frame) + 1}"
    ws.freeze_panes = "A2"


def _create_tolerance_sheet(wb: Workbook) -> None:
    """The tolerance block every check was run against."""
    ws = wb.create_sheet("Tolerances")
    _write_header(ws, ["Tolerance", "Value"])
    for row_idx, (name, value) in enumerate(sorted(get_config().tolerances.items()), 2):
        ws.cell(row=row_idx, column=1, value=name)
        cell = ws.cell(row=row_idx, column=2, value=value)
        cell.number_format = SCIENTIFIC_FORMAT
    ws.column_dimensions['A'].width = 25
    ws.column_dimensions['B'].width = 15


def _get_column_letter(col_num: int) -> str:
    """Convert column number to letter (1 = A, 27 = AA, etc.)."""
    result = ""
    while col_num > 0:
        col_num, remainder = divmod(col_num - 1, 26)
        result = chr(65 + remainder) + result
    return result
