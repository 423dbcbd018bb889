"""Report formatter - aligned text tables, CSV and JSON records"""

from pathlib import Path
from typing import Any, Iterable, List, Sequence
import csv
import io
import logging
import math

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)


def fmt(value: Any) -> str:
    """Shortest round-trip text for floats; everything else via str."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return f"{fmt(value.real)}{'+' if value.imag >= 0 or math.isnan(value.imag) else '-'}{fmt(abs(value.imag))}j"
    return str(value)


class ReportFormatter:
    def __init__(self, out_dir: str = None):
        self.out_dir = Path(out_dir) if out_dir else None
        self.written: List[str] = []

    def table(self, headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        cells = [[fmt(v) for v in row] for row in rows]
        widths = [len(h) for h in headers]
        for row in cells:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
        lines.append("  ".join("-" * w for w in widths))
        for row in cells:
            lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip())
        return "\n".join(lines)

    def key_values(self, pairs: Sequence[Sequence[Any]]) -> str:
        width = max((len(str(k)) for k, _ in pairs), default=0)
        return "\n".join(f"{str(k).ljust(width)} : {fmt(v)}" for k, v in pairs)

    def csv_text(self, headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def write_csv(self, name: str, headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        text = self.csv_text(headers, rows)
        return self._write(name, text)

    def write_record(self, name: str, record: BaseModel) -> str:
        return self._write(name, record.model_dump_json(indent=2) + "\n")

    def _write(self, name: str, text: str) -> str:
        if self.out_dir is None:
            return ""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8")
        self.written.append(str(path))
        logger.info("wrote %s", path)
        return str(path)
