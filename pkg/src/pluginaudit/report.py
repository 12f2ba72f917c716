"""Run aggregation, longitudinal diffing, and report rendering.

An assessment run holds one exposure report per plugin. Reports render to
canonical JSON (the lossless interchange form), CSV (flattened category
matrix), and markdown (human-readable tables); runs with matching config
digests can be diffed to track remediation over time.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

from .classify import CATEGORIES
from .consistency import ConsistencyVerdict
from .errors import IncomparableRuns, MalformedDocument
from .legal import LegalDocVerdict

EXPOSURE_KEYS = ("e1", "e2", "e3", "e4", "e5")

# Human-facing names for the five exposure classes, in e1..e5 order.
EXPOSURE_LABELS = {
    "e1": "File leakage",
    "e2": "Inconsistent data",
    "e3": "Single auth",
    "e4": "Multi auth",
    "e5": "Token auth",
}

UNCATEGORIZED = "(none)"


@dataclass(frozen=True)
class ExposureReport:
    """Per-plugin verdicts for all five exposure classes plus evidence."""

    plugin_id: str
    exposures: dict
    fetch_outcome: str
    consistency: Optional[ConsistencyVerdict] = None
    legal: Optional[LegalDocVerdict] = None
    category: Optional[str] = None
    regions: tuple = ()
    email_domain: Optional[str] = None
    evidence: tuple = ()
    probe_summary: Optional[dict] = None

    def __post_init__(self):
        if set(self.exposures) != set(EXPOSURE_KEYS):
            raise ValueError(f"exposures must carry exactly the keys {EXPOSURE_KEYS}")
        bac = sum(bool(self.exposures[k]) for k in ("e3", "e4", "e5"))
        if bac > 1:
            raise ValueError("at most one of e3/e4/e5 may be set")
        checks_with_evidence = {entry[0] for entry in self.evidence}
        for key in EXPOSURE_KEYS:
            if self.exposures[key] and key not in checks_with_evidence:
                raise ValueError(f"exposure {key} is set without evidence")


@dataclass(frozen=True)
class AssessmentRun:
    run_id: str
    timestamp: str
    config_digest: str
    reports: tuple = ()

    def __post_init__(self):
        ids = [r.plugin_id for r in self.reports]
        if len(ids) != len(set(ids)):
            raise ValueError("plugin_ids must be unique within a run")

    def exposure_counts(self) -> dict:
        counts = {key: 0 for key in EXPOSURE_KEYS}
        for report in self.reports:
            for key in EXPOSURE_KEYS:
                if report.exposures[key]:
                    counts[key] += 1
        return counts


def round_half_up(value: float, places: int = 1) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def percent_change(before: int, after: int):
    """Percentage change rounded half-up to one decimal; None when before=0."""
    if before == 0:
        return None
    return round_half_up((after - before) / before * 100.0)


def aggregate_by_category(run: AssessmentRun) -> dict:
    """Category x exposure matrix with counts and percentages.

    Every store category appears (all zero on an empty run); plugins
    without a category land in a "(none)" row. Percentages are count over
    category size, rounded half-up to one decimal.
    """
    labels = list(CATEGORIES)
    if any(r.category is None for r in run.reports):
        labels.append(UNCATEGORIZED)
    matrix: dict = {}
    for label in labels:
        members = [r for r in run.reports if (r.category or UNCATEGORIZED) == label]
        size = len(members)
        cells = {}
        for key in EXPOSURE_KEYS:
            count = sum(1 for r in members if r.exposures[key])
            pct = round_half_up(count / size * 100.0) if size else 0.0
            cells[key] = {"count": count, "percent": pct}
        matrix[label] = {"size": size, "cells": cells}
    return matrix


def fetch_outcome_counts(run: AssessmentRun) -> dict:
    counts: dict = {}
    for report in run.reports:
        counts[report.fetch_outcome] = counts.get(report.fetch_outcome, 0) + 1
    return dict(sorted(counts.items()))


def legal_counts(run: AssessmentRun) -> dict:
    counts = {"Inaccessible": 0}
    for report in run.reports:
        verdict = report.legal
        if verdict is None or not verdict.accessible:
            counts["Inaccessible"] += 1
            continue
        label = verdict.category or "Unrelated"
        counts[label] = counts.get(label, 0) + 1
    return dict(sorted(counts.items()))


def email_domain_histogram(run: AssessmentRun, predicate=None) -> list:
    """Sorted (domain, count) pairs over plugins matching ``predicate``.

    Domains are the lowercased part after "@"; plugins without a contact
    email are counted under "(none)". Sorting is count descending, then
    domain ascending.
    """
    counts: dict = {}
    for report in run.reports:
        if predicate is not None and not predicate(report):
            continue
        domain = report.email_domain.lower() if report.email_domain else "(none)"
        counts[domain] = counts.get(domain, 0) + 1
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def is_bac(report: ExposureReport) -> bool:
    """Broken access control: any of the three API exposures."""
    return any(report.exposures[k] for k in ("e3", "e4", "e5"))


@dataclass(frozen=True)
class RunDiff:
    """Per-exposure before/after counts plus per-plugin churn."""

    earlier_run_id: str
    later_run_id: str
    counts: dict   # key -> {"before": int, "after": int, "change_percent": float|None}
    resolved: dict  # key -> sorted plugin ids flagged before but not after
    introduced: dict

    def rows(self) -> list:
        return [
            (EXPOSURE_LABELS[key], self.counts[key]["before"], self.counts[key]["after"],
             self.counts[key]["change_percent"])
            for key in EXPOSURE_KEYS
        ]


def diff_runs(earlier: AssessmentRun, later: AssessmentRun) -> RunDiff:
    """Compare two runs produced under the same configuration."""
    if earlier.config_digest != later.config_digest:
        raise IncomparableRuns(
            f"config digests differ: {earlier.config_digest} vs {later.config_digest}"
        )
    before = earlier.exposure_counts()
    after = later.exposure_counts()
    counts = {
        key: {
            "before": before[key],
            "after": after[key],
            "change_percent": percent_change(before[key], after[key]),
        }
        for key in EXPOSURE_KEYS
    }
    earlier_flagged = {key: {r.plugin_id for r in earlier.reports if r.exposures[key]}
                       for key in EXPOSURE_KEYS}
    later_flagged = {key: {r.plugin_id for r in later.reports if r.exposures[key]}
                     for key in EXPOSURE_KEYS}
    later_ids = {r.plugin_id for r in later.reports}
    resolved = {
        key: sorted((earlier_flagged[key] - later_flagged[key]) & later_ids)
        for key in EXPOSURE_KEYS
    }
    introduced = {key: sorted(later_flagged[key] - earlier_flagged[key]) for key in EXPOSURE_KEYS}
    return RunDiff(
        earlier_run_id=earlier.run_id,
        later_run_id=later.run_id,
        counts=counts,
        resolved=resolved,
        introduced=introduced,
    )


# --- serialization -----------------------------------------------------------

def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def _report_payload(report: ExposureReport) -> dict:
    consistency = None
    if report.consistency is not None:
        consistency = {
            "name_sim": report.consistency.name_similarity,
            "desc_sim": report.consistency.description_similarity,
            "legal_match": report.consistency.legal_url_match,
            "flags": list(report.consistency.flags),
        }
    legal = None
    if report.legal is not None:
        legal = {
            "accessible": report.legal.accessible,
            "category": report.legal.category,
            "matched_seeds": list(report.legal.matched_seeds),
        }
    return {
        "plugin_id": report.plugin_id,
        "exposures": {key: bool(report.exposures[key]) for key in EXPOSURE_KEYS},
        "fetch_outcome": report.fetch_outcome,
        "consistency": consistency,
        "legal": legal,
        "category": report.category,
        "regions": list(report.regions),
        "email_domain": report.email_domain,
        "evidence": [list(entry) for entry in report.evidence],
        "probe": report.probe_summary,
    }


def run_payload(run: AssessmentRun) -> dict:
    return {
        "run_id": run.run_id,
        "timestamp": run.timestamp,
        "config_digest": run.config_digest,
        "reports": [_report_payload(r) for r in run.reports],
    }


def ingest_run(text: str) -> AssessmentRun:
    """Rebuild an :class:`AssessmentRun` from its JSON rendering."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"run document is not JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("reports"), list):
        raise MalformedDocument("run document lacks a reports list")
    reports = []
    for raw in data["reports"]:
        consistency = None
        if raw.get("consistency") is not None:
            c = raw["consistency"]
            consistency = ConsistencyVerdict(
                plugin_id=raw["plugin_id"],
                name_similarity=c["name_sim"],
                description_similarity=c["desc_sim"],
                legal_url_match=c["legal_match"],
                flags=tuple(c.get("flags", ())),
            )
        legal = None
        if raw.get("legal") is not None:
            l = raw["legal"]
            legal = LegalDocVerdict(
                plugin_id=raw["plugin_id"],
                accessible=l["accessible"],
                category=l.get("category"),
                matched_seeds=tuple(l.get("matched_seeds", ())),
            )
        reports.append(
            ExposureReport(
                plugin_id=raw["plugin_id"],
                exposures={key: bool(raw["exposures"][key]) for key in EXPOSURE_KEYS},
                fetch_outcome=raw["fetch_outcome"],
                consistency=consistency,
                legal=legal,
                category=raw.get("category"),
                regions=tuple(raw.get("regions", ())),
                email_domain=raw.get("email_domain"),
                evidence=tuple(tuple(entry) for entry in raw.get("evidence", ())),
                probe_summary=raw.get("probe"),
            )
        )
    return AssessmentRun(
        run_id=data.get("run_id", ""),
        timestamp=data.get("timestamp", ""),
        config_digest=data.get("config_digest", ""),
        reports=tuple(reports),
    )


# --- rendering ---------------------------------------------------------------

def _format_percent(value) -> str:
    return "n/a" if value is None else f"{value:+.1f}%"


def _render_run_markdown(run: AssessmentRun) -> str:
    lines = [f"# Assessment run {run.run_id}", ""]
    lines.append(f"- plugins: {len(run.reports)}")
    lines.append(f"- timestamp: {run.timestamp}")
    lines.append(f"- config digest: {run.config_digest}")
    lines.append("")

    lines.append("## Manifest accessibility")
    lines.append("")
    outcome_counts = fetch_outcome_counts(run)
    header = list(outcome_counts) or ["(empty)"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    lines.append("| " + " | ".join(str(outcome_counts.get(h, 0)) for h in header) + " |")
    lines.append("")

    lines.append("## Exposures by category")
    lines.append("")
    labels = [EXPOSURE_LABELS[key] for key in EXPOSURE_KEYS]
    lines.append("| Category | Plugins | " + " | ".join(labels) + " |")
    lines.append("|" + "---|" * (len(labels) + 2))
    matrix = aggregate_by_category(run)
    for label, row in matrix.items():
        if row["size"] == 0:
            continue
        cells = [
            f"{row['cells'][key]['count']} ({row['cells'][key]['percent']:.1f}%)"
            for key in EXPOSURE_KEYS
        ]
        lines.append(f"| {label} | {row['size']} | " + " | ".join(cells) + " |")
    lines.append("")

    lines.append("## API probe outcome")
    lines.append("")
    probe_rows = _probe_table(run)
    lines.append("| Responsiveness | none | others | token | Change | Unauthorized | Client errors | Rate limiting |")
    lines.append("|" + "---|" * 8)
    lines.append(
        "| respondable | {none} | {others} | {token} | - | - | - | - |".format(**probe_rows["respondable"])
    )
    lines.append(
        "| non-respondable | {none} | {others} | - | {change} | {unauthorized} | {client} | {rate} |".format(
            **probe_rows["non_respondable"]
        )
    )
    lines.append("")

    lines.append("## Legal documents")
    lines.append("")
    legal = legal_counts(run)
    header = list(legal)
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    lines.append("| " + " | ".join(str(legal[h]) for h in header) + " |")
    lines.append("")
    return "\n".join(lines)


def _probe_table(run: AssessmentRun) -> dict:
    respondable = {"none": 0, "others": 0, "token": 0}
    non_respondable = {"none": 0, "others": 0, "change": 0, "unauthorized": 0,
                       "client": 0, "rate": 0}
    for report in run.reports:
        summary = report.probe_summary
        if not summary:
            continue
        multi = bool(summary.get("multi_auth"))
        if report.exposures["e3"]:
            respondable["none"] += 1
        elif report.exposures["e4"]:
            respondable["others"] += 1
        elif report.exposures["e5"]:
            respondable["token"] += 1
        else:
            non_respondable["others" if multi else "none"] += 1
            classes = summary.get("classes", {})
            if classes.get("Unstable"):
                non_respondable["change"] += 1
            elif classes.get("Unauthorized"):
                non_respondable["unauthorized"] += 1
            elif classes.get("ClientError"):
                non_respondable["client"] += 1
            elif classes.get("RateLimited"):
                non_respondable["rate"] += 1
    return {"respondable": respondable, "non_respondable": non_respondable}


def _render_run_csv(run: AssessmentRun) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    header = ["category", "plugins"]
    for key in EXPOSURE_KEYS:
        header.extend([f"{key}_count", f"{key}_percent"])
    writer.writerow(header)
    for label, row in aggregate_by_category(run).items():
        if row["size"] == 0:
            continue
        record = [label, row["size"]]
        for key in EXPOSURE_KEYS:
            record.extend([row["cells"][key]["count"], row["cells"][key]["percent"]])
        writer.writerow(record)
    return buffer.getvalue()


def _render_diff_markdown(diff: RunDiff) -> str:
    labels = [EXPOSURE_LABELS[key] for key in EXPOSURE_KEYS]
    lines = [
        f"# Exposure change: {diff.earlier_run_id} -> {diff.later_run_id}",
        "",
        "| | " + " | ".join(labels) + " |",
        "|" + "---|" * (len(labels) + 1),
    ]
    befores = [str(diff.counts[key]["before"]) for key in EXPOSURE_KEYS]
    afters = [str(diff.counts[key]["after"]) for key in EXPOSURE_KEYS]
    changes = [_format_percent(diff.counts[key]["change_percent"]) for key in EXPOSURE_KEYS]
    lines.append("| First assessment | " + " | ".join(befores) + " |")
    lines.append("| Revisit | " + " | ".join(afters) + " |")
    lines.append("| Change | " + " | ".join(changes) + " |")
    lines.append("")
    return "\n".join(lines)


def _render_diff_csv(diff: RunDiff) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["exposure", "before", "after", "change_percent"])
    for label, before, after, change in diff.rows():
        writer.writerow([label, before, after, "n/a" if change is None else change])
    return buffer.getvalue()


def diff_payload(diff: RunDiff) -> dict:
    return {
        "earlier_run_id": diff.earlier_run_id,
        "later_run_id": diff.later_run_id,
        "exposures": {
            key: {
                "label": EXPOSURE_LABELS[key],
                "before": diff.counts[key]["before"],
                "after": diff.counts[key]["after"],
                "change_percent": diff.counts[key]["change_percent"],
            }
            for key in EXPOSURE_KEYS
        },
        "resolved": diff.resolved,
        "introduced": diff.introduced,
    }


def render(obj, fmt: str = "json") -> str:
    """Render a run or diff to "json", "csv", or "markdown"."""
    if fmt not in ("json", "csv", "markdown"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(obj, AssessmentRun):
        if fmt == "json":
            return canonical_json(run_payload(obj))
        if fmt == "csv":
            return _render_run_csv(obj)
        return _render_run_markdown(obj)
    if isinstance(obj, RunDiff):
        if fmt == "json":
            return canonical_json(diff_payload(obj))
        if fmt == "csv":
            return _render_diff_csv(obj)
        return _render_diff_markdown(obj)
    raise TypeError(f"cannot render {type(obj).__name__}")
