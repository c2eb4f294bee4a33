"""Experiment configs, reports with target checks, and table / plot-data writers."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .errors import UsageError

COMMANDS = ("gap", "xmatrix", "dispersion", "checking", "kwise", "classical", "haar-stats")
RELATIONS = ("eq", "le", "ge")


@dataclass
class ExperimentConfig:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"command: unknown command {self.command!r}")

    def require(self, *keys: str) -> None:
        for key in keys:
            if self.params.get(key) is None:
                raise UsageError(f"{key}: required for command {self.command!r}")

    def to_dict(self) -> dict:
        return {"command": self.command, "params": _plain(self.params), "seed": self.seed}


@dataclass
class Measurement:
    """One measured quantity, optionally with a target.

    ``relation`` ``eq`` passes when ``|value - target| <= tolerance``; ``le`` when
    ``value <= target + tolerance``; ``ge`` when ``value >= target - tolerance``.
    """

    name: str
    value: float
    stderr: float | None = None
    target: float | None = None
    tolerance: float | None = None
    relation: str = "eq"

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}")

    @property
    def passed(self) -> bool | None:
        if self.target is None:
            return None
        tol = self.tolerance or 0.0
        if self.relation == "eq":
            return abs(self.value - self.target) <= tol
        if self.relation == "le":
            return self.value <= self.target + tol
        return self.value >= self.target - tol

    def row(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "stderr": self.stderr,
            "target": self.target,
            "tolerance": self.tolerance,
            "relation": self.relation if self.target is not None else None,
            "pass": self.passed,
        }


TABLE_FIELDS = ("name", "value", "stderr", "target", "tolerance", "relation", "pass")


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    results: list[Measurement] = field(default_factory=list)
    records: dict[str, Any] = field(default_factory=dict)
    timestamp: str | None = None

    def add(self, *args, **kwargs) -> Measurement:
        m = Measurement(*args, **kwargs)
        self.results.append(m)
        return m

    @property
    def passed(self) -> bool:
        return all(m.passed is not False for m in self.results)

    @property
    def failures(self) -> list[Measurement]:
        return [m for m in self.results if m.passed is False]

    def provenance(self) -> dict:
        prov = {"code_version": __version__, "seed": self.config.seed}
        if self.timestamp is not None:
            prov["timestamp"] = self.timestamp
        return prov

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "provenance": self.provenance(),
            "results": [m.row() for m in self.results],
            "records": _plain(self.records),
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to JSON-ready values."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _header_lines(report: ExperimentReport) -> list[str]:
    return [
        "# config: " + json.dumps(report.config.to_dict(), sort_keys=True),
        "# provenance: " + json.dumps(report.provenance(), sort_keys=True),
    ]


def emit_table(report: ExperimentReport, path: str | Path, fmt: str = "csv") -> Path:
    """One row per measurement: name, value, stderr, target, tolerance, relation, pass."""
    path = Path(path)
    rows = [m.row() for m in report.results]
    if fmt == "json":
        payload = {"config": report.config.to_dict(), "provenance": report.provenance(), "rows": _plain(rows)}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        buf = io.StringIO()
        buf.write("\n".join(_header_lines(report)) + "\n")
        w = csv.DictWriter(buf, fieldnames=TABLE_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        path.write_text(buf.getvalue())
    else:
        raise UsageError(f"format: expected csv or json, got {fmt!r}")
    return path


def emit_plotdata(report: ExperimentReport, kind: str, path: str | Path, kmax: int = 20) -> Path:
    """Two-column text for plotting.

    ``decay``: rows ``(k, lambda2**k)`` for ``k = 0..kmax`` from a gap report.
    ``histogram``: rows ``(bin_left, count)`` from a dispersion tail report.
    """
    path = Path(path)
    lines = _header_lines(report)
    if kind == "decay":
        if report.config.command != "gap" or "lambda2" not in report.records:
            raise UsageError("kind: decay data needs a gap report")
        lam = float(report.records["lambda2"])
        lines.append("# k distance")
        lines += [f"{k} {lam**k!r}" for k in range(kmax + 1)]
    elif kind == "histogram":
        hist = report.records.get("histogram")
        if report.config.command != "dispersion" or hist is None:
            raise UsageError("kind: histogram data needs a dispersion tail report")
        lines.append("# bin_left count")
        lines += [f"{float(edge)!r} {int(c)}" for edge, c in zip(hist["edges"], hist["counts"])]
    else:
        raise UsageError(f"kind: expected decay or histogram, got {kind!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_plotdata(path: str | Path) -> list[tuple[float, float]]:
    rows = []
    for line in Path(path).read_text().splitlines():
        if line and not line.startswith("#"):
            a, b = line.split()
            rows.append((float(a), float(b)))
    return rows
