"""Transparency reports: deterministic aggregation over the request corpus.

A report is a pure function of (request corpus, period). Counts are stored
raw — percentages are for the consumer to derive. The report id is the
SHA-256 of the canonical report body, and each report can reference the
previous period's report id, forming a lineage.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import canonical
from .costs import Invoice
from .domain import INSTRUMENT_KINDS, OBJECTIVES
from .errors import IntegrityViolation, InvalidPeriod, UnsupportedFormat


@dataclass
class TransparencyReport:
    period: dict  # {"start": ts, "end": ts} — half-open [start, end)
    received: int
    by_objective: dict
    by_instrument_kind: dict
    by_country: dict
    domestic_vs_foreign: dict
    by_regime: dict
    outcomes: dict  # latest decision per request: approved/rejected/challenged
    disclosure_data_class: dict  # {content, non_content} over approved disclosures
    impacted_accounts: int
    generated_at: str
    previous_period_ref: Optional[str] = None
    report_id: str = ""

    def body(self) -> dict:
        return {
            "period": self.period,
            "received": self.received,
            "by_objective": self.by_objective,
            "by_instrument_kind": self.by_instrument_kind,
            "by_country": self.by_country,
            "domestic_vs_foreign": self.domestic_vs_foreign,
            "by_regime": self.by_regime,
            "outcomes": self.outcomes,
            "disclosure_data_class": self.disclosure_data_class,
            "impacted_accounts": self.impacted_accounts,
            "generated_at": self.generated_at,
            "previous_period_ref": self.previous_period_ref,
        }

    def sealed(self) -> "TransparencyReport":
        self.report_id = canonical.digest_of(self.body())
        return self

    def to_json(self) -> dict:
        doc = self.body()
        doc["report_id"] = self.report_id
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "TransparencyReport":
        report = cls(
            period=dict(doc["period"]),
            received=doc["received"],
            by_objective=dict(doc["by_objective"]),
            by_instrument_kind=dict(doc["by_instrument_kind"]),
            by_country=dict(doc["by_country"]),
            domestic_vs_foreign=dict(doc["domestic_vs_foreign"]),
            by_regime=dict(doc["by_regime"]),
            outcomes=dict(doc["outcomes"]),
            disclosure_data_class=dict(doc["disclosure_data_class"]),
            impacted_accounts=doc["impacted_accounts"],
            generated_at=doc["generated_at"],
            previous_period_ref=doc.get("previous_period_ref"),
            report_id=doc.get("report_id", ""),
        )
        return report


def generate_transparency_report(
    entries: Iterable[dict],
    period_start: str,
    period_end: str,
    generated_at: str,
    previous_period_ref: Optional[str] = None,
) -> TransparencyReport:
    """Aggregate over request entries.

    Each entry is ``{"request": <request json>, "decisions": [<decision json>]}``.
    A request is in the period when ``period_start <= submitted_at < period_end``.
    Outcomes count the latest decision; disclosure_data_class covers approved
    disclosure requests only; impacted accounts are the distinct target
    identifiers across approved requests.
    """
    if not canonical.is_ts(period_start) or not canonical.is_ts(period_end):
        raise InvalidPeriod("period bounds must be UTC millisecond timestamps")
    if period_start >= period_end:
        raise InvalidPeriod("period start must be before end")

    received = 0
    by_objective = {k: 0 for k in OBJECTIVES}
    by_instrument_kind = {k: 0 for k in INSTRUMENT_KINDS}
    by_country: dict = {}
    domestic_vs_foreign = {"domestic": 0, "foreign": 0}
    by_regime = {"emergency": 0, "routine": 0}
    outcomes = {"approved": 0, "rejected": 0, "challenged": 0}
    disclosure_data_class = {"content": 0, "non_content": 0}
    impacted: set = set()

    for entry in entries:
        request = entry["request"]
        submitted_at = request["submitted_at"]
        if not (period_start <= submitted_at < period_end):
            continue
        received += 1
        by_objective[request["objective"]] += 1
        by_instrument_kind[request["instruments"][0]["kind"]] += 1
        country = request["requester"]["agency_country"]
        by_country[country] = by_country.get(country, 0) + 1
        domestic_vs_foreign[request["origin"]["kind"]] += 1
        by_regime[request["regime"]] += 1

        decisions = entry.get("decisions", [])
        if decisions:
            latest = decisions[-1]
            key = {"approve": "approved", "reject": "rejected", "challenge": "challenged"}[
                latest["decision"]
            ]
            outcomes[key] += 1
            if key == "approved":
                for identifier in request["target"]["identifiers"]:
                    impacted.add((identifier["kind"], identifier["value"]))
                if request["objective"] == "disclosure":
                    disclosure_data_class[latest["response_data_class"]] += 1

    report = TransparencyReport(
        period={"start": period_start, "end": period_end},
        received=received,
        by_objective=by_objective,
        by_instrument_kind=by_instrument_kind,
        by_country=by_country,
        domestic_vs_foreign=domestic_vs_foreign,
        by_regime=by_regime,
        outcomes=outcomes,
        disclosure_data_class=disclosure_data_class,
        impacted_accounts=len(impacted),
        generated_at=generated_at,
        previous_period_ref=previous_period_ref,
    ).sealed()
    _check_sums(report)
    return report


def _check_sums(report: TransparencyReport) -> None:
    """Aggregation completeness, verified on every generated report."""
    checks = [
        ("by_objective", sum(report.by_objective.values())),
        ("by_instrument_kind", sum(report.by_instrument_kind.values())),
        ("by_country", sum(report.by_country.values())),
        ("domestic_vs_foreign", sum(report.domestic_vs_foreign.values())),
        ("by_regime", sum(report.by_regime.values())),
    ]
    for name, total in checks:
        if total != report.received:
            raise IntegrityViolation(f"{name} sums to {total}, received is {report.received}")
    if sum(report.outcomes.values()) > report.received:
        raise IntegrityViolation("outcomes exceed received")


# ---- export / import ---------------------------------------------------------


def export_report(obj, format: str = "json") -> bytes:
    """Canonical JSON, or CSV with a ``section,key,value`` header."""
    if isinstance(obj, TransparencyReport):
        doc = obj.to_json()
    elif isinstance(obj, Invoice):
        doc = obj.to_json()
    elif isinstance(obj, dict):
        doc = obj
    else:
        raise UnsupportedFormat(f"cannot export {type(obj).__name__}")
    if format == "json":
        return canonical.canonical_bytes(doc)
    if format == "csv":
        return _to_csv(doc)
    raise UnsupportedFormat(f"unknown export format {format!r}")


def _to_csv(doc: dict) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["section", "key", "value"])
    for section in sorted(doc):
        value = doc[section]
        if isinstance(value, dict):
            for key in sorted(value):
                writer.writerow([section, key, _csv_scalar(value[key])])
        elif isinstance(value, list):
            for index, item in enumerate(value):
                writer.writerow([section, str(index), _csv_scalar(item)])
        else:
            writer.writerow([section, "", _csv_scalar(value)])
    return buffer.getvalue().encode("utf-8")


def _csv_scalar(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (dict, list)):
        return canonical.canonical_json(value)
    return str(value)


def import_report(data: bytes) -> TransparencyReport:
    doc = json.loads(data.decode("utf-8"))
    report = TransparencyReport.from_json(doc)
    if canonical.digest_of(report.body()) != report.report_id:
        raise IntegrityViolation("report id does not match the report body")
    return report
