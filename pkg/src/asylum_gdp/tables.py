"""Plain row/column tables and their CSV form."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def add(self, row: dict | list) -> None:
        if isinstance(row, dict):
            row = [row.get(c) for c in self.columns]
        if len(row) != len(self.columns):
            raise ValueError(f"{self.name}: row has {len(row)} cells, expected {len(self.columns)}")
        self.rows.append(list(row))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def row_for(self, key, column: str | None = None) -> dict:
        col = column or self.columns[0]
        i = self.columns.index(col)
        for r in self.rows:
            if r[i] == key:
                return dict(zip(self.columns, r))
        raise KeyError(key)

    def to_dict(self) -> dict:
        return {"name": self.name, "columns": self.columns, "rows": self.rows}


def format_cell(v) -> str:
    if v is None:
        return "N/A"
    if isinstance(v, bool):
        return "Y" if v else "N"
    if isinstance(v, float):
        if math.isnan(v):
            return "N/A"
        return f"{v:.6g}"
    return str(v)


def to_csv(table: Table, digest: str | None = None) -> str:
    buf = io.StringIO()
    if digest:
        buf.write(f"# config_digest: {digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([format_cell(v) for v in r])
    return buf.getvalue()


def _parse(cell: str):
    if cell == "N/A":
        return None
    if cell in ("Y", "N"):
        return cell == "Y"
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


def read_csv_table(path: str | Path, name: str | None = None) -> tuple[Table, str | None]:
    """Parse a table written by :func:`to_csv`; returns the table and its digest."""
    path = Path(path)
    digest = None
    lines = path.read_text(encoding="utf-8").splitlines()
    body = []
    for line in lines:
        if line.startswith("# config_digest:"):
            digest = line.split(":", 1)[1].strip()
        elif not line.startswith("#"):
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    t = Table(name or path.stem, columns)
    for row in reader:
        t.add([_parse(c) for c in row])
    return t, digest
