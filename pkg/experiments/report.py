"""Check records and experiment reports."""

import math
from dataclasses import dataclass, field, asdict
import pandas as pd

PASS = "pass"
FAIL = "fail"
MONITOR = "monitor"
SKIPPED = "skipped"
STATUSES = (PASS, FAIL, MONITOR, SKIPPED)

CHECK_COLUMNS = ["category", "check", "value", "threshold", "status", "provenance", "detail"]


@dataclass
class CheckRecord:
    category: str
    check: str
    value: float
    threshold: str
    status: str
    provenance: str
    detail: str = ""


@dataclass
class ExperimentReport:
    """Everything one experiment produces: parameters, check records and result tables"""
    experiment: str
    parameters: dict
    records: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    runtime: float = 0.0

    def record(self, category, check, value, threshold, status, provenance, detail=""):
        if status not in STATUSES:
            raise ValueError(f"Unknown check status {status!r}")
        value = float(value) if value is not None else math.nan
        entry = CheckRecord(category, check, value, str(threshold), status, provenance, detail)
        self.records.append(entry)
        return entry

    def assert_at_most(self, category, check, value, limit, provenance, detail=""):
        status = PASS if value <= limit else FAIL
        return self.record(category, check, value, f"<= {limit:g}", status, provenance, detail)

    def assert_at_least(self, category, check, value, limit, provenance, detail=""):
        status = PASS if value >= limit else FAIL
        return self.record(category, check, value, f">= {limit:g}", status, provenance, detail)

    def assert_between(self, category, check, value, low, high, provenance, detail=""):
        status = PASS if low <= value <= high else FAIL
        return self.record(category, check, value, f"[{low:g}, {high:g}]", status, provenance, detail)

    def assert_true(self, category, check, condition, provenance, detail="", value=None):
        value = float(bool(condition)) if value is None else value
        return self.record(category, check, value, "true", PASS if condition else FAIL, provenance, detail)

    def monitor(self, category, check, value, provenance, detail="", threshold=""):
        return self.record(category, check, value, threshold, MONITOR, provenance, detail)

    def skip(self, category, check, provenance, detail=""):
        return self.record(category, check, None, "", SKIPPED, provenance, detail)

    def add_table(self, name, rows, columns):
        self.tables[name] = pd.DataFrame(rows, columns=columns)

    def add_frame(self, name, frame):
        self.tables[name] = frame

    @property
    def passed(self):
        return all(record.status != FAIL for record in self.records)

    def counts(self):
        counts = {status: 0 for status in STATUSES}
        for record in self.records:
            counts[record.status] += 1
        return counts

    def failures(self):
        return [record for record in self.records if record.status == FAIL]

    def to_frame(self):
        return pd.DataFrame([asdict(record) for record in self.records], columns=CHECK_COLUMNS)


def relative_mismatch(a, b):
    """|a - b| / max(|a|, |b|), zero when both vanish"""
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


def pairing_mismatch(left_terms, right_terms):
    """|sum(left) - sum(right)| relative to the sum of absolute values of all terms"""
    scale = sum(abs(term) for term in left_terms) + sum(abs(term) for term in right_terms)
    if scale == 0.0:
        return 0.0
    return abs(sum(left_terms) - sum(right_terms)) / scale
