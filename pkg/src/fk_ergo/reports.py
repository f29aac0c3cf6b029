"""
Deterministic report writers.  Reals are written with 17 significant digits so
that identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def write_csv(path, header, rows) -> Path:
    """RFC 4180 CSV with a header row, ``\\n`` line ends and '.' decimals."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(list(header))
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row of length {len(row)} under a header of length {len(header)}")
            wr.writerow([fmt(v) for v in row])
    return path


@dataclass(frozen=True)
class Check:
    name: str  # machine-readable identifier
    description: str  # what identity or bound is checked
    value: float
    threshold: float
    passed: bool
    comparison: str = "<="

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.comparison == "holds":
            return f"[{status}] hypothesis {'holds' if self.passed else 'violated'}: {self.description}"
        return f"[{status}] {self.description}: {self.value:.3e} ({self.comparison} {self.threshold:.3e})"


def check(name, description, value, threshold, comparison="<=") -> Check:
    value, threshold = float(value), float(threshold)
    if comparison == "<=":
        ok = value <= threshold
    elif comparison == ">=":
        ok = value >= threshold
    elif comparison == "<":
        ok = value < threshold
    elif comparison == ">":
        ok = value > threshold
    else:
        raise ValueError(f"unknown comparison {comparison!r}")
    return Check(name, description, value, threshold, bool(ok and not math.isnan(value)), comparison)


@dataclass
class StudyResult:
    study: str
    checks: list
    info: list  # (label, value) pairs for the summary
    files: list  # paths written

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [asdict(c) for c in self.checks if not c.passed]

    def summary_text(self, header: str = "") -> str:
        lines = [header] if header else []
        lines.append(f"study: {self.study}")
        for label, value in self.info:
            lines.append(f"{label}: {fmt(value)}")
        lines.extend(c.line() for c in self.checks)
        lines.append("result: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


def _json_safe(d: dict) -> dict:
    # strict JSON has no NaN or infinity
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def write_failures(path, result: StudyResult) -> Path:
    path = Path(path)
    payload = {"study": result.study, "passed": result.passed,
               "failures": [_json_safe(f) for f in result.failures()]}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path
