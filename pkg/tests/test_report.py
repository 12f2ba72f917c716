import json
import random

import pytest

from pluginaudit.errors import IncomparableRuns
from pluginaudit.report import (
    EXPOSURE_KEYS,
    AssessmentRun,
    ExposureReport,
    aggregate_by_category,
    canonical_json,
    diff_runs,
    email_domain_histogram,
    ingest_run,
    is_bac,
    percent_change,
    render,
    round_half_up,
    run_payload,
)


def report(pid="p1", category="Weather", email="dev@x.io", **flags):
    exposures = {key: False for key in EXPOSURE_KEYS}
    exposures.update(flags)
    evidence = tuple((key, "input", "observed") for key, on in exposures.items() if on)
    return ExposureReport(
        plugin_id=pid,
        exposures=exposures,
        fetch_outcome="ServerError",
        category=category,
        email_domain=email.rsplit("@", 1)[1] if email else None,
        evidence=evidence,
    )


def run_of(reports, run_id="r1", digest="cfg1"):
    return AssessmentRun(run_id=run_id, timestamp="2024-01-01T00:00:00+00:00",
                         config_digest=digest, reports=tuple(reports))


def counted_run(counts, total, run_id, digest="cfg"):
    """Run with exactly ``counts[key]`` plugins flagged per exposure key.

    e3/e4/e5 occupy disjoint plugin ranges to respect mutual exclusivity.
    """
    reports = []
    e3, e4, e5 = counts.get("e3", 0), counts.get("e4", 0), counts.get("e5", 0)
    for i in range(total):
        flags = {
            "e1": i < counts.get("e1", 0),
            "e2": i < counts.get("e2", 0),
            "e3": i < e3,
            "e4": e3 <= i < e3 + e4,
            "e5": e3 + e4 <= i < e3 + e4 + e5,
        }
        reports.append(report(pid=f"p{i:04d}", **flags))
    return run_of(reports, run_id=run_id, digest=digest)


class TestInvariants:
    def test_at_most_one_bac_flag(self):
        with pytest.raises(ValueError):
            report(e3=True, e4=True)

    def test_true_flag_requires_evidence(self):
        exposures = {key: False for key in EXPOSURE_KEYS}
        exposures["e1"] = True
        with pytest.raises(ValueError):
            ExposureReport(plugin_id="p1", exposures=exposures, fetch_outcome="ServerError")

    def test_duplicate_plugin_ids_rejected(self):
        with pytest.raises(ValueError):
            run_of([report(pid="p1"), report(pid="p1")])


class TestRounding:
    def test_half_up_at_tie(self):
        assert round_half_up(23.45) == 23.5
        assert round_half_up(-23.45) == -23.5

    def test_table_pairs(self):
        # (before, after) -> published change percentage
        expected = {
            (368, 282): -23.4,
            (69, 61): -11.6,
            (141, 89): -36.9,
            (24, 17): -29.2,
            (8, 5): -37.5,
        }
        for (before, after), want in expected.items():
            assert percent_change(before, after) == pytest.approx(want, abs=0.05)

    def test_zero_before_is_none(self):
        assert percent_change(0, 5) is None


class TestAggregation:
    def test_category_matrix_counts_and_percent(self):
        reports = [report(pid=f"w{i}", category="Weather", e1=(i < 2)) for i in range(5)]
        matrix = aggregate_by_category(run_of(reports))
        cell = matrix["Weather"]["cells"]["e1"]
        assert matrix["Weather"]["size"] == 5
        assert cell == {"count": 2, "percent": 40.0}

    def test_empty_run_all_zero(self):
        matrix = aggregate_by_category(run_of([]))
        assert len(matrix) == 21
        assert all(row["size"] == 0 for row in matrix.values())
        assert all(
            cell == {"count": 0, "percent": 0.0}
            for row in matrix.values()
            for cell in row["cells"].values()
        )

    def test_matrix_column_sums_equal_totals(self):
        rng = random.Random(3)
        reports = []
        for i in range(40):
            flags = {"e1": rng.random() < 0.4, "e2": rng.random() < 0.2}
            reports.append(report(pid=f"p{i}", category=rng.choice(["Weather", "Tools", "Law"]),
                                  **flags))
        run = run_of(reports)
        matrix = aggregate_by_category(run)
        totals = run.exposure_counts()
        for key in EXPOSURE_KEYS:
            assert sum(row["cells"][key]["count"] for row in matrix.values()) == totals[key]

    def test_uncategorized_bucket(self):
        matrix = aggregate_by_category(run_of([report(category=None)]))
        assert matrix["(none)"]["size"] == 1


class TestEmailHistogram:
    def test_bac_domains_counted(self):
        reports = [
            report(pid="a1", email="x@mixerbox.test", e3=True),
            report(pid="a2", email="y@mixerbox.test", e4=True),
            report(pid="a3", email="z@MIXERBOX.test", e5=True),
            report(pid="a4", email="w@other.test", e3=True),
            report(pid="a5", email="v@mixerbox.test"),  # not BAC
        ]
        histogram = email_domain_histogram(run_of(reports), is_bac)
        assert histogram[0] == ("mixerbox.test", 3)
        assert ("other.test", 1) in histogram

    def test_missing_email_bucketed(self):
        histogram = email_domain_histogram(run_of([report(email=None)]))
        assert histogram == [("(none)", 1)]

    def test_sorted_count_desc_then_domain(self):
        reports = [report(pid=f"p{i}", email=f"a@{d}") for i, d in
                   enumerate(["b.io", "a.io", "b.io", "c.io"])]
        histogram = email_domain_histogram(run_of(reports))
        assert histogram == [("b.io", 2), ("a.io", 1), ("c.io", 1)]


PUBLISHED_BEFORE = {"e1": 368, "e2": 69, "e3": 141, "e4": 24, "e5": 8}
PUBLISHED_AFTER = {"e1": 282, "e2": 61, "e3": 89, "e4": 17, "e5": 5}


class TestDiff:
    def test_published_change_percentages(self):
        earlier = counted_run(PUBLISHED_BEFORE, 400, "first")
        later = counted_run(PUBLISHED_AFTER, 400, "revisit")
        diff = diff_runs(earlier, later)
        wanted = {"e1": -23.4, "e2": -11.6, "e3": -36.9, "e4": -29.2, "e5": -37.5}
        for key, want in wanted.items():
            assert diff.counts[key]["change_percent"] == pytest.approx(want, abs=0.05)

    def test_self_diff_is_zero(self):
        run = counted_run(PUBLISHED_BEFORE, 400, "same")
        diff = diff_runs(run, run)
        for key in EXPOSURE_KEYS:
            if diff.counts[key]["before"]:
                assert diff.counts[key]["change_percent"] == 0.0

    def test_zero_before_reported_na(self):
        earlier = counted_run({}, 10, "a")
        later = counted_run({"e1": 5}, 10, "b")
        diff = diff_runs(earlier, later)
        assert diff.counts["e1"]["change_percent"] is None
        rendered = render(diff, "markdown")
        assert "n/a" in rendered

    def test_resolved_plugin_listed(self):
        earlier = run_of([report(pid="p1", e3=True), report(pid="p2", e3=True)], run_id="a")
        later = run_of([report(pid="p1", e3=True), report(pid="p2")], run_id="b")
        diff = diff_runs(earlier, later)
        assert diff.resolved["e3"] == ["p2"]
        assert diff.introduced["e3"] == []

    def test_different_configs_incomparable(self):
        with pytest.raises(IncomparableRuns):
            diff_runs(run_of([], digest="x"), run_of([], digest="y"))

    def test_markdown_reproduces_three_data_rows(self):
        earlier = counted_run(PUBLISHED_BEFORE, 400, "first")
        later = counted_run(PUBLISHED_AFTER, 400, "revisit")
        lines = render(diff_runs(earlier, later), "markdown").splitlines()
        data_rows = [l for l in lines if l.startswith("| First") or l.startswith("| Revisit")
                     or l.startswith("| Change")]
        assert data_rows[0] == "| First assessment | 368 | 69 | 141 | 24 | 8 |"
        assert data_rows[1] == "| Revisit | 282 | 61 | 89 | 17 | 5 |"
        assert data_rows[2] == "| Change | -23.4% | -11.6% | -36.9% | -29.2% | -37.5% |"


from helpers import random_run


class TestRendering:
    def test_json_round_trip_value_equal(self):
        run = random_run(random.Random(11))
        again = ingest_run(render(run, "json"))
        assert again == run

    def test_json_round_trip_byte_identical_over_random_runs(self):
        for seed in range(20):
            run = random_run(random.Random(seed))
            once = render(run, "json")
            assert render(ingest_run(once), "json") == once

    def test_csv_of_empty_run_is_header_only(self):
        lines = render(run_of([]), "csv").strip().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("category,plugins,e1_count")

    def test_csv_has_rows_for_populated_categories(self):
        run = run_of([report(category="Weather", e1=True)])
        lines = render(run, "csv").strip().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("Weather,1,1,100.0")

    def test_markdown_run_sections(self):
        text = render(run_of([report(category="Weather", e1=True)]), "markdown")
        assert "## Manifest accessibility" in text
        assert "## Exposures by category" in text
        assert "## Legal documents" in text

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            render(run_of([]), "xml")

    def test_canonical_json_sorted_keys(self):
        payload = json.loads(canonical_json(run_payload(run_of([report()]))))
        assert list(payload) == sorted(payload)
