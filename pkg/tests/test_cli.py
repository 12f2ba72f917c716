import json
from pathlib import Path

import pytest

from pluginaudit.cli import EXIT_EXPOSURES, EXIT_FAILURE, EXIT_OK, main
from pluginaudit.config import AuditConfig
from pluginaudit.errors import DuplicateId, MalformedSnapshot
from pluginaudit.snapshot import load_snapshot, load_store


def write_snapshot(path: Path, records) -> Path:
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


GOOD_RECORD = {
    "plugin_id": "p1",
    "name": "Swift Helper",
    "description": "Fetch real-time weather forecasts for any city.",
    "legal_url": "http://p1.plugins.test/legal",
    "contact_email": "dev@x.io",
}


class TestIngest:
    def test_fixture_snapshot_ingests(self, small_store, tmp_path, capsys):
        store_dir, plan = small_store
        out = tmp_path / "store.json"
        code = main(["ingest", str(store_dir / "snapshot.jsonl"), "--out", str(out)])
        assert code == EXIT_OK
        assert f"ingested {len(plan.listings)}" in capsys.readouterr().out
        assert len(load_store(out)) == len(plan.listings)

    def test_duplicate_id_names_offender(self, tmp_path):
        snap = write_snapshot(tmp_path / "s.jsonl", [GOOD_RECORD, GOOD_RECORD])
        with pytest.raises(DuplicateId, match="p1"):
            load_snapshot(snap)
        code = main(["ingest", str(snap), "--out", str(tmp_path / "o.json")])
        assert code == EXIT_FAILURE

    def test_empty_file_is_malformed(self, tmp_path):
        snap = tmp_path / "empty.jsonl"
        snap.write_text("", encoding="utf-8")
        with pytest.raises(MalformedSnapshot):
            load_snapshot(snap)
        assert main(["ingest", str(snap), "--out", str(tmp_path / "o.json")]) == EXIT_FAILURE

    def test_bad_legal_url_rejected(self, tmp_path):
        record = dict(GOOD_RECORD, legal_url="ftp://x/legal")
        snap = write_snapshot(tmp_path / "s.jsonl", [record])
        with pytest.raises(MalformedSnapshot):
            load_snapshot(snap)


@pytest.fixture(scope="module")
def cli_store(small_server, small_store, tmp_path_factory):
    server, plan = small_server
    store_dir, _ = small_store
    tmp = tmp_path_factory.mktemp("cli")
    store_path = tmp / "store.json"
    assert main(["ingest", str(store_dir / "snapshot.jsonl"), "--out", str(store_path)]) == EXIT_OK
    config = AuditConfig(
        timeout=0.3, attempts=3, per_host_interval=0.02, backoff_initial=0.02,
        workers=8, resolve=server.resolve_map(),
    )
    config_path = tmp / "config.json"
    config.save(config_path)
    return tmp, store_path, config_path


def audit_args(store_path, config_path, runs_dir, timestamp="2024-01-01T00:00:00+00:00"):
    return [
        "audit", "--store", str(store_path), "--config", str(config_path),
        "--runs-dir", str(runs_dir), "--timestamp", timestamp,
    ]


class TestAudit:
    def test_exit_code_signals_exposures(self, cli_store, capsys):
        tmp, store_path, config_path = cli_store
        code = main(audit_args(store_path, config_path, tmp / "runs"))
        out = capsys.readouterr().out
        assert code == EXIT_EXPOSURES
        assert "plugins audited" in out
        run_files = list((tmp / "runs").glob("run-*.json"))
        assert len(run_files) == 1

    def test_rerun_is_byte_identical(self, cli_store):
        tmp, store_path, config_path = cli_store
        runs_a, runs_b = tmp / "runs-a", tmp / "runs-b"
        assert main(audit_args(store_path, config_path, runs_a)) == EXIT_EXPOSURES
        assert main(audit_args(store_path, config_path, runs_b)) == EXIT_EXPOSURES
        (file_a,) = runs_a.glob("*.json")
        (file_b,) = runs_b.glob("*.json")
        assert file_a.read_bytes() == file_b.read_bytes()

    def test_clean_store_exits_zero(self, tmp_path, capsys):
        listing = {
            "plugin_id": "clean1", "name": "Quiet Tool",
            "description": "Convert units and run quick utility calculators.",
            "legal_url": None, "contact_email": None,
        }
        snap = write_snapshot(tmp_path / "s.jsonl", [listing])
        store = tmp_path / "store.json"
        main(["ingest", str(snap), "--out", str(store)])
        config = AuditConfig(timeout=0.1, attempts=1, per_host_interval=0.0,
                             backoff_initial=0.0, workers=1)
        config_path = tmp_path / "c.json"
        config.save(config_path)
        code = main(audit_args(store, config_path, tmp_path / "runs"))
        assert code == EXIT_OK
        (run_file,) = (tmp_path / "runs").glob("*.json")
        payload = json.loads(run_file.read_text())
        assert payload["reports"][0]["fetch_outcome"] == "NoLegalUrl"
        assert not any(payload["reports"][0]["exposures"].values())


class TestReportAndDiff:
    @pytest.fixture()
    def run_file(self, cli_store):
        tmp, store_path, config_path = cli_store
        runs = tmp / "runs-report"
        if not runs.exists():
            main(audit_args(store_path, config_path, runs))
        (path,) = runs.glob("*.json")
        return path

    def test_markdown_report(self, run_file, capsys):
        assert main(["report", "--run", str(run_file), "--format", "markdown"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "## Exposures by category" in out

    def test_csv_report(self, run_file, tmp_path):
        out_path = tmp_path / "matrix.csv"
        assert main(["report", "--run", str(run_file), "--format", "csv",
                     "--out", str(out_path)]) == EXIT_OK
        assert out_path.read_text().startswith("category,plugins")

    def test_email_histogram_view(self, run_file, capsys):
        assert main(["report", "--run", str(run_file), "--view", "emails",
                     "--bac-only"]) == EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        assert all(len(row) == 2 for row in rows)
        assert sum(count for _, count in rows) > 0

    def test_diff_lists_resolved_plugin(self, run_file, tmp_path, capsys):
        before = json.loads(run_file.read_text())
        after = json.loads(run_file.read_text())
        fixed = next(r for r in after["reports"] if r["exposures"]["e3"])
        fixed["exposures"] = dict(fixed["exposures"], e3=False)
        fixed["evidence"] = [e for e in fixed["evidence"] if e[0] != "e3"]
        after["run_id"] = "revisit"
        before_path = tmp_path / "before.json"
        after_path = tmp_path / "after.json"
        before_path.write_text(json.dumps(before))
        after_path.write_text(json.dumps(after))

        assert main(["diff", str(before_path), str(after_path),
                     "--format", "json"]) == EXIT_OK
        diff = json.loads(capsys.readouterr().out)
        assert diff["resolved"]["e3"] == [fixed["plugin_id"]]
        assert diff["exposures"]["e3"]["before"] == diff["exposures"]["e3"]["after"] + 1

    def test_diff_rejects_mismatched_configs(self, run_file, tmp_path, capsys):
        other = json.loads(run_file.read_text())
        other["config_digest"] = "different"
        other_path = tmp_path / "other.json"
        other_path.write_text(json.dumps(other))
        assert main(["diff", str(run_file), str(other_path)]) == EXIT_FAILURE


class TestFixtureCommands:
    def test_gen_twice_byte_identical(self, tmp_path, capsys):
        spec = {
            "seed": 42, "plugin_count": 6, "e1": 2, "e2_name": 1, "e2_desc": 0,
            "e2_legal": 0, "e3": 1, "e4": 0, "e5": 0, "share_platform_count": 1,
            "timeout_count": 0, "unrelated_page_count": 1, "legal_tos": 3,
            "legal_privacy": 1, "legal_other": 1, "legal_unrelated": 1,
            "legal_inaccessible": 0, "unstable_endpoint_count": 0,
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["fixture", "gen", "--spec", str(spec_path), "--out", str(out_a)]) == EXIT_OK
        assert main(["fixture", "gen", "--spec", str(spec_path), "--out", str(out_b)]) == EXIT_OK
        files_a = {p.name: p.read_bytes() for p in out_a.iterdir()}
        files_b = {p.name: p.read_bytes() for p in out_b.iterdir()}
        assert files_a == files_b

    def test_gen_unsatisfiable_spec_fails(self, tmp_path):
        spec = {"seed": 1, "plugin_count": 1, "e1": 0, "e3": 1, "legal_tos": 1,
                "legal_privacy": 0, "legal_other": 0, "legal_unrelated": 0,
                "legal_inaccessible": 0}
        spec_path = tmp_path / "bad.json"
        spec_path.write_text(json.dumps(spec))
        assert main(["fixture", "gen", "--spec", str(spec_path),
                     "--out", str(tmp_path / "x")]) == EXIT_FAILURE


class TestLayerCommands:
    def test_probe_command(self, cli_store, capsys):
        tmp, store_path, config_path = cli_store
        code = main(["probe", "--store", str(store_path), "--config", str(config_path)])
        rows = json.loads(capsys.readouterr().out)
        assert code == EXIT_EXPOSURES
        flagged = [r for r in rows if any(r["exposures"].values())]
        assert flagged

    def test_legal_command(self, cli_store, capsys):
        tmp, store_path, config_path = cli_store
        assert main(["legal", "--store", str(store_path),
                     "--config", str(config_path)]) == EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        assert any(r["category"] == "PrivacyPolicy" for r in rows)

    def test_classify_command_no_network(self, cli_store, capsys):
        tmp, store_path, _ = cli_store
        assert main(["classify", "--store", str(store_path)]) == EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        assert all(row["category"] for row in rows)


class TestConfig:
    def test_flags_override_config_file(self, tmp_path):
        config_path = tmp_path / "c.json"
        AuditConfig(theta1=0.5).save(config_path)
        from pluginaudit.cli import build_parser, _config_from_args

        args = build_parser().parse_args([
            "audit", "--store", "s", "--config", str(config_path), "--theta1", "0.9",
        ])
        config = _config_from_args(args)
        assert config.theta1 == 0.9

    def test_digest_tracks_values(self):
        assert AuditConfig().digest() != AuditConfig(theta1=0.5).digest()
        assert AuditConfig().digest() == AuditConfig().digest()

    def test_round_trip_file(self, tmp_path):
        path = tmp_path / "c.json"
        config = AuditConfig(theta2=0.42, resolve={"*": "127.0.0.1:1"})
        config.save(path)
        assert AuditConfig.load(path) == config

    def test_proxy_env_override(self, monkeypatch):
        monkeypatch.setenv("PLUGINAUDIT_PROXIES", "http://a:1, http://b:2")
        config = AuditConfig(proxies=("http://c:3",))
        assert config.effective_proxies() == ("http://a:1", "http://b:2")
