"""Structured results of identity/bound/property verifications.

A ``CheckReport`` records both sides of a check, the residual (identities) or
slack (bounds), the tolerance in force, and the outcome of every hypothesis
gate that ran.  ``ReportBundle`` collects reports plus run metadata and owns
the JSON/CSV/table serializations used by the CLI.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

#: Fixed CSV column order.
CSV_COLUMNS = (
    "instance_id",
    "check",
    "lhs",
    "rhs",
    "residual",
    "slack",
    "tol",
    "pass",
    "evals",
    "seconds",
)


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one verification.

    ``passed`` means: residual <= tol for identities, slack >= -tol for
    bounds, and ordering within tol for three-term chains.  ``skipped`` is
    set when a hypothesis gate failed and the numeric check never ran.
    """

    check: str
    passed: bool
    tol: float
    lhs: float | None = None
    rhs: float | None = None
    middle: float | None = None
    residual: float | None = None
    slack: float | None = None
    margin: float | None = None
    witness: float | None = None
    hypothesis: Mapping[str, bool | None] = field(default_factory=dict)
    skipped: bool = False
    instance: str = ""
    evals: int = 0
    seconds: float = 0.0
    details: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "instance_id": self.instance,
            "check": self.check,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "slack": self.slack,
            "tol": self.tol,
            "pass": self.passed,
            "hypothesis": dict(self.hypothesis),
        }
        if self.middle is not None:
            out["middle"] = self.middle
        if self.skipped:
            out["skipped"] = True
        if self.witness is not None:
            out["witness"] = self.witness
        if self.details:
            out["details"] = {k: self.details[k] for k in sorted(self.details)}
        return out

    def csv_row(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance,
            "check": self.check,
            "lhs": _cell(self.lhs),
            "rhs": _cell(self.rhs),
            "residual": _cell(self.residual),
            "slack": _cell(self.slack),
            "tol": _cell(self.tol),
            "pass": self.passed,
            "evals": self.evals,
            "seconds": f"{self.seconds:.6f}",
        }


def _cell(v: float | None) -> str:
    return "" if v is None else repr(float(v))


@dataclass
class ReportBundle:
    """A list of check reports plus run metadata."""

    reports: list[CheckReport]
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> int:
        return sum(1 for r in self.reports if r.passed)

    @property
    def total(self) -> int:
        return len(self.reports)

    def to_dict(self) -> dict[str, Any]:
        return {"meta": dict(self.meta), "reports": [r.to_dict() for r in self.reports]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
        writer.writeheader()
        for r in self.reports:
            writer.writerow(r.csv_row())
        return buf.getvalue()

    def to_table(self) -> str:
        rows = [list(CSV_COLUMNS)]
        for r in self.reports:
            d = r.csv_row()
            rows.append([_short(d[c]) for c in CSV_COLUMNS])
        widths = [max(len(row[i]) for row in rows) for i in range(len(CSV_COLUMNS))]
        lines = []
        for k, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _short(v: Any) -> str:
    if isinstance(v, str) and v:
        try:
            return f"{float(v):.10g}"
        except ValueError:
            return v
    return str(v)
