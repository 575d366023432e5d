"""
Result export: CSV tables, JSON documents, field snapshots and an Excel summary
"""
import hashlib
import json
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

try:
    from openpyxl import Workbook
    from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
    from openpyxl.utils import get_column_letter
    OPENPYXL_AVAILABLE = True
except ImportError:
    OPENPYXL_AVAILABLE = False

from ..models.fields import Grid
from .field_io import write_snapshot
from .logging_utils import setup_logger

# full round-trip decimal representation of float64
FLOAT_FORMAT = '%.17g'


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


class ResultExporter:
    """
    Writes every output file of a run and keeps the inventory

    Files written through the exporter are listed with their sha256 in the
    run manifest. Workbooks carry zip timestamps, so they are reported as
    presentation files and left out of replay comparisons.
    """

    def __init__(self, output_dir: str = "output"):
        """
        Initialize result exporter

        Args:
            output_dir: Directory to save result files
        """
        self.output_dir = output_dir
        self.logger = setup_logger("ResultExporter")
        self.written: List[str] = []
        self.presentation: List[str] = []

        # Create output directory if it doesn't exist
        os.makedirs(output_dir, exist_ok=True)

        if not OPENPYXL_AVAILABLE:
            self.logger.warning("openpyxl not available. Workbook summaries will be skipped.")

    def get_file_path(self, filename: str) -> str:
        return os.path.join(self.output_dir, filename)

    def _register(self, filename: str) -> str:
        if filename not in self.written:
            self.written.append(filename)
        path = self.get_file_path(filename)
        self.logger.info(f"Exported {path}")
        return path

    def export_csv(self, filename: str, rows: Any, columns: Optional[Sequence[str]] = None) -> str:
        """Table from a DataFrame or a list of row dicts"""
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
        frame.to_csv(self.get_file_path(filename), index=False, float_format=FLOAT_FORMAT)
        return self._register(filename)

    def export_json(self, filename: str, data: Dict[str, Any]) -> str:
        with open(self.get_file_path(filename), 'w', encoding='utf-8') as handle:
            json.dump(_jsonable(data), handle, indent=2, sort_keys=True, allow_nan=False)
        return self._register(filename)

    def export_snapshot(self, filename: str, grid: Grid, components: np.ndarray) -> str:
        write_snapshot(self.get_file_path(filename), grid, components)
        return self._register(filename)

    def export_summary_workbook(self, filename: str, summary: Dict[str, Any],
                                tables: Dict[str, pd.DataFrame]) -> Optional[str]:
        """
        Workbook with a key/value summary sheet plus one sheet per table

        Returns:
            Path to the workbook, None when openpyxl is missing
        """
        if not OPENPYXL_AVAILABLE:
            return None
        wb = Workbook()
        ws = wb.active
        ws.title = "Summary"
        for i, (label, value) in enumerate(summary.items(), 1):
            ws[f"A{i}"] = label
            ws[f"B{i}"] = value if isinstance(value, (int, float, str)) or value is None else json.dumps(value)
        self._style_summary_sheet(ws)

        for name, frame in tables.items():
            sheet = wb.create_sheet(name[:31])
            for col, header in enumerate(frame.columns, 1):
                sheet.cell(row=1, column=col, value=str(header))
            for row, values in enumerate(frame.itertuples(index=False), 2):
                for col, value in enumerate(values, 1):
                    sheet.cell(row=row, column=col, value=_cell_value(value))
            self._style_data_sheet(sheet, len(frame.columns))

        path = self.get_file_path(filename)
        wb.save(path)
        if filename not in self.presentation:
            self.presentation.append(filename)
        return self._register(filename)

    def _style_summary_sheet(self, ws):
        """Apply styles to summary sheet"""
        label_font = Font(bold=True, size=12)
        for row in ws.iter_rows():
            for cell in row:
                if cell.column == 1 and cell.value:
                    cell.font = label_font
                if cell.value is not None:
                    column_letter = get_column_letter(cell.column)
                    current_width = ws.column_dimensions[column_letter].width or 10
                    ws.column_dimensions[column_letter].width = min(max(current_width, len(str(cell.value)) + 2), 60)

    def _style_data_sheet(self, ws, num_columns: int):
        """Apply styles to data sheets"""
        header_font = Font(bold=True, color="FFFFFF")
        header_fill = PatternFill(start_color="4472C4", end_color="4472C4", fill_type="solid")
        thin = Side(style='thin')
        thin_border = Border(left=thin, right=thin, top=thin, bottom=thin)

        for col in range(1, num_columns + 1):
            cell = ws.cell(row=1, column=col)
            cell.font = header_font
            cell.fill = header_fill
            cell.alignment = Alignment(horizontal="center", vertical="center")
            cell.border = thin_border
            ws.column_dimensions[get_column_letter(col)].width = max(len(str(cell.value or '')) + 4, 14)

        # Freeze header row
        ws.freeze_panes = "A2"

    def inventory(self) -> Dict[str, str]:
        """sha256 of every written file, keyed by file name"""
        return {name: sha256_file(self.get_file_path(name)) for name in self.written}


def _cell_value(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def _jsonable(value: Any) -> Any:
    """Replace numpy scalars and non-finite floats (as null) for strict JSON"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value
