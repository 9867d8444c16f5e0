"""Result rows and their CSV/JSON serialization.

Floats are written with ``repr`` (shortest round-trip form), so identical
results give identical bytes.  ``wall_time_ms`` is left empty unless timing
was requested, because wall-clock times would break byte-for-byte reruns.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

SCHEMA_VERSION = 1
COLUMNS = ("schema_version", "experiment", "sigma", "quantity", "value", "stderr", "method",
           "seed", "wall_time_ms")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    sigma: float | None
    quantity: str
    value: object
    stderr: float | None
    method: str
    seed: int
    wall_time_ms: float | None = None

    def cells(self) -> list[str]:
        return [str(SCHEMA_VERSION), self.experiment, fmt(self.sigma), self.quantity,
                fmt(self.value), fmt(self.stderr), self.method, str(self.seed),
                fmt(self.wall_time_ms)]

    def to_dict(self) -> dict:
        return dict(zip(COLUMNS, self.cells()))


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "__float__"):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(v)


class RowWriter:
    """Streams rows to CSV (flushed after every batch) or collects them for JSON."""

    def __init__(self, path, fmt_name: str = "csv"):
        self.path = path
        self.format = fmt_name
        self.rows: list[ResultRow] = []
        self._fh = None
        if fmt_name == "csv":
            self._fh = open(path, "w", newline="")
            self._csv = csv.writer(self._fh, lineterminator="\n")
            self._csv.writerow(COLUMNS)
            self._fh.flush()

    def write(self, rows) -> None:
        rows = list(rows)
        self.rows.extend(rows)
        if self._fh is not None:
            for r in rows:
                self._csv.writerow(r.cells())
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
        elif self.format == "json":
            doc = {"schema_version": SCHEMA_VERSION, "columns": list(COLUMNS),
                   "rows": [r.to_dict() for r in self.rows]}
            with open(self.path, "w") as fh:
                fh.write(json.dumps(doc, indent=2) + "\n")

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_rows(path) -> list[dict]:
    """Rows of a CSV or JSON results file as dictionaries of strings."""
    with open(path) as fh:
        text = fh.read()
    if not text.strip():
        return []
    if text.lstrip().startswith("{"):
        return json.loads(text)["rows"]
    return list(csv.DictReader(text.splitlines()))
