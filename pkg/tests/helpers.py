"""Test doubles and random-data builders shared across the suite."""

from __future__ import annotations

import random
from dataclasses import dataclass

from pluginaudit.consistency import ConsistencyVerdict
from pluginaudit.errors import TransportError
from pluginaudit.legal import LegalDocVerdict
from pluginaudit.report import EXPOSURE_KEYS, AssessmentRun, ExposureReport
from pluginaudit.transport import TransportReply


def reply(status: int, body: str = "", **headers) -> TransportReply:
    return TransportReply(status=status, body=body.encode("utf-8"), headers=headers)


TIMEOUT = ("timeout",)
CONNECTION_ERROR = ("connection",)


@dataclass
class SentRequest:
    method: str
    url: str
    headers: dict
    body: object
    vantage: int


class ScriptedTransport:
    """Transport double replaying canned replies per URL.

    ``routes`` maps a URL to a reply, a ("timeout",)/("connection",) marker,
    a callable(request) -> reply, or a list of those consumed one per call
    (the last entry repeats). Unrouted URLs raise a connection error.
    """

    def __init__(self, routes=None):
        self.routes = dict(routes or {})
        self.sent: list = []

    def request(self, method, url, *, headers=None, body=None, timeout=15.0, vantage=0):
        record = SentRequest(method=method, url=url, headers=dict(headers or {}),
                             body=body, vantage=vantage)
        self.sent.append(record)
        script = self.routes.get(url)
        if script is None:
            raise TransportError("connection", f"no route for {url}")
        if isinstance(script, list):
            calls = sum(1 for r in self.sent if r.url == url)
            script = script[min(calls - 1, len(script) - 1)]
        if callable(script):
            script = script(record)
        if isinstance(script, tuple):
            raise TransportError(script[0], url)
        return script

    def count(self, url) -> int:
        return sum(1 for r in self.sent if r.url == url)


def random_run(rng: random.Random) -> AssessmentRun:
    """Structurally valid assessment run with randomized content."""
    reports = []
    for i in range(rng.randint(0, 12)):
        bac = rng.choice([None, "e3", "e4", "e5"])
        flags = {
            "e1": rng.random() < 0.5,
            "e2": rng.random() < 0.3,
            "e3": bac == "e3",
            "e4": bac == "e4",
            "e5": bac == "e5",
        }
        exposures = {key: flags[key] for key in EXPOSURE_KEYS}
        evidence = tuple((key, f"in{i}", "seen") for key, on in exposures.items() if on)
        consistency = None
        if rng.random() < 0.6:
            consistency = ConsistencyVerdict(
                plugin_id=f"p{i:03d}",
                name_similarity=rng.random(),
                description_similarity=rng.random(),
                legal_url_match=rng.random() < 0.5,
                flags=("NameMismatch",) if rng.random() < 0.4 else (),
            )
        legal = None
        if rng.random() < 0.7:
            accessible = rng.random() < 0.7
            category = None
            seeds = ()
            if accessible:
                category = rng.choice(["TermsOfService", "PrivacyPolicy", "OtherLegal", "Unrelated"])
                if category != "Unrelated":
                    seeds = ("Privacy",)
            legal = LegalDocVerdict(plugin_id=f"p{i:03d}", accessible=accessible,
                                    category=category, matched_seeds=seeds)
        reports.append(ExposureReport(
            plugin_id=f"p{i:03d}",
            exposures=exposures,
            fetch_outcome=rng.choice(["AccessibleRelevant", "ServerError", "Timeout"]),
            consistency=consistency,
            legal=legal,
            category=rng.choice(["Weather", "Tools", None]),
            regions=tuple(sorted(rng.sample(["Japan", "UK", "USA"], rng.randint(0, 2)))),
            email_domain=rng.choice(["x.io", None]),
            evidence=evidence,
            probe_summary={"multi_auth": True, "classes": {"Valid": 1}} if rng.random() < 0.4 else None,
        ))
    return AssessmentRun(
        run_id=f"run-{rng.randint(0, 999)}",
        timestamp="2024-04-09T00:00:00+00:00",
        config_digest="cfg",
        reports=tuple(reports),
    )
