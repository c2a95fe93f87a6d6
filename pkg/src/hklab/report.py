"""Check reports and their CSV/JSON serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

from . import __version__

VACUOUS_LOG_MARGIN = 500.0


@dataclass
class CheckReport:
    """One verified inequality instance.

    ``margin`` is rhs - lhs, or ln(rhs/lhs) when ``log_space`` is set.  A
    report passes iff margin >= -tolerance.  ``status`` is one of ``pass``,
    ``vacuous-pass``, ``fail``, ``skipped`` or ``uncertified``; the last two
    never count as passes.
    """

    statement: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    tolerance: float
    log_space: bool = False
    status: str = ""
    instance: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if not self.status:
            if not self.passed:
                self.status = "fail"
            elif self.log_space and self.margin > VACUOUS_LOG_MARGIN:
                self.status = "vacuous-pass"
            else:
                self.status = "pass"

    @classmethod
    def compare(cls, statement, lhs, rhs, tolerance=0.0, relative=False, instance=None, note=""):
        """lhs <= rhs with an absolute (or rhs-relative) tolerance."""
        lhs, rhs = float(lhs), float(rhs)
        margin = rhs - lhs
        tol = tolerance * max(abs(rhs), abs(lhs), 1e-300) if relative else tolerance
        return cls(statement, lhs, rhs, margin, bool(margin >= -tol), tol,
                   instance=dict(instance or {}), note=note)

    @classmethod
    def compare_log(cls, statement, log_lhs, log_rhs, tolerance=1e-9, instance=None, note=""):
        """lhs <= rhs given both sides as natural logarithms."""
        log_lhs, log_rhs = float(log_lhs), float(log_rhs)
        if log_lhs == -math.inf:
            margin = math.inf
        else:
            margin = log_rhs - log_lhs
        return cls(statement, log_lhs, log_rhs, margin, bool(margin >= -tolerance), tolerance,
                   log_space=True, instance=dict(instance or {}), note=note)

    @classmethod
    def skipped(cls, statement, note, instance=None, status="skipped"):
        return cls(statement, math.nan, math.nan, math.nan, False, 0.0, status=status,
                   instance=dict(instance or {}), note=note)

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "vacuous-pass")

    def row(self) -> dict:
        d = asdict(self)
        d["instance"] = json.dumps(self.instance, sort_keys=True, default=_jsonable)
        return d


def _jsonable(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    return str(o)


def fmt(x) -> str:
    """Deterministic float formatting for CSV bodies."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


CHECK_COLUMNS = ["statement", "status", "lhs", "rhs", "margin", "log_space", "tolerance",
                 "passed", "note", "instance"]


def write_csv(path: str | Path, rows: Iterable[dict], columns: list[str]) -> None:
    buf = io.StringIO()
    buf.write(f"# hklab {__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    Path(path).write_text(buf.getvalue())


def read_csv(path: str | Path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_checks(path: str | Path, reports: Iterable[CheckReport]) -> None:
    write_csv(path, (r.row() for r in reports), CHECK_COLUMNS)


def summarize(reports: Iterable[CheckReport]) -> dict:
    reports = list(reports)
    counts: dict[str, int] = {}
    for r in reports:
        counts[r.status] = counts.get(r.status, 0) + 1
    margins = [r.margin for r in reports if r.ok and r.log_space]
    return {
        "total": len(reports),
        "counts": counts,
        "all_passed": all(r.ok for r in reports),
        "min_log_margin": min(margins) if margins else None,
        "failures": [
            {"statement": r.statement, "status": r.status, "margin": r.margin, "note": r.note}
            for r in reports if not r.ok
        ],
    }
