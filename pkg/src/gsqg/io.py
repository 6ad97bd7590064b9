"""Series files (CSV with a JSON metadata line) and summary JSON."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

FLUX_HEADER = ["time", "scale", "p", "gamma", "alpha", "term_I", "term_II", "term_III", "total", "bound"]
METADATA_PREFIX = "# "


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    if hasattr(v, "item"):
        return _fmt(v.item())
    return str(v)


def _parse(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


@dataclass
class DiagnosticSeries:
    """Time-ordered diagnostic rows plus the metadata needed to rerun them."""

    metadata: dict
    columns: list
    rows: list = field(default_factory=list)

    def append(self, row) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} entries, expected {len(self.columns)}")
        self.rows.append(list(row))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def body_text(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.columns)
        for r in self.rows:
            wr.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def to_text(self) -> str:
        return METADATA_PREFIX + json.dumps(self.metadata, sort_keys=True) + "\n" + self.body_text()

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text(), encoding="utf-8")
        return path

    @classmethod
    def from_text(cls, text: str) -> DiagnosticSeries:
        meta = read_series_metadata(text)
        body = text.split("\n", 1)[1]
        rows = list(csv.reader(io.StringIO(body)))
        cols = rows[0]
        return cls(meta, cols, [[_parse(v) for v in r] for r in rows[1:]])

    @classmethod
    def read(cls, path) -> DiagnosticSeries:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def read_series_metadata(text: str) -> dict:
    first = text.split("\n", 1)[0]
    if not first.startswith(METADATA_PREFIX):
        raise ValueError("series file lacks a metadata line")
    return json.loads(first[len(METADATA_PREFIX):])


def csv_body(path) -> str:
    """Everything after the metadata line; the part covered by determinism checks."""
    text = Path(path).read_text(encoding="utf-8")
    return text.split("\n", 1)[1] if text.startswith("#") else text


def build_metadata(config, partition_hash: str | None = None, **extra) -> dict:
    from . import __version__

    meta = {
        "config": config.to_dict(),
        "code_version": __version__,
        "partition_profile_hash": partition_hash,
        "filter": bool(config.filter),
        "lenient": bool(config.lenient),
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    meta.update(extra)
    return meta


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
