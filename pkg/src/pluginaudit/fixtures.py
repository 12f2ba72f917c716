"""Synthetic plugin store with ground-truth labels.

Generates a deterministic store snapshot plus per-host documents (manifests,
API descriptions, endpoint behaviors, legal pages) that a local server can
replay. Every injected exposure, fetch outcome, and legal category is
recorded in a ground-truth file, which makes the served store a complete
oracle for the audit pipeline.
"""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .classify import CATEGORIES
from .errors import UnsatisfiableSpec

SNAPSHOT_FILE = "snapshot.jsonl"
HOSTS_FILE = "hosts.json"
TRUTH_FILE = "ground_truth.json"

_ADJECTIVES = (
    "Swift", "Bright", "Clever", "Handy", "Prime", "Nova", "Rapid", "Quiet",
    "Solid", "Lively", "Gentle", "Bold", "Crisp", "Eager", "Fable", "Golden",
    "Hidden", "Ivory", "Jolly", "Keen",
)
_NOUNS = (
    "Helper", "Buddy", "Scout", "Genie", "Mate", "Wizard", "Pilot", "Desk",
    "Hub", "Box", "Lab", "Works", "Forge", "Mind", "Sense", "Flow", "Link",
    "Nest", "Dock", "Anchor", "Beacon", "Comet", "Drift", "Ember", "Glade",
    "Harbor", "Inlet", "Jetty", "Knoll", "Lagoon",
)

_EMAIL_DOMAINS = (
    "mixerbox.test", "copilot.test", "gmail.test", "aaroncruz.test",
    "playlist.test", "hubworks.test", "indiedev.test",
)

_SHARE_HOSTS = ("drive.google.com", "github.com", "docs.google.com", "gist.github.com")

_REGIONS = (
    "Japan", "USA", "UK", "Australia", "Korea",
    "Canada", "Germany", "Singapore", "China", "Switzerland",
)

# One description template per store category; each contains several of
# that category's keywords and none of any other category's.
_DESCRIPTIONS = {
    "Audio & Music": "Stream curated music playlists and discover new songs for every mood.",
    "Books": "Find your next novel with curated book picks and reading lists.",
    "Business": "Track invoices, sales pipelines, and company meetings in one place.",
    "Career": "Polish your resume and practice interview questions for your next job.",
    "Diagram": "Turn outlines into flowcharts, mindmaps, and sequence diagrams instantly.",
    "Crypto": "Monitor bitcoin and ethereum movements with on-chain blockchain analytics.",
    "Data & Research": "Query research datasets and run statistical analysis on demand.",
    "Developer & Code": "Generate code snippets, debug stack traces, and explore any repository.",
    "Document": "Summarize PDF documents and extract key passages from long reports.",
    "Education": "Build study plans, flashcards, and quizzes for any course.",
    "Entertainment": "Craft magical bedtime stories and trivia games for family fun.",
    "Finance": "Watch your stock portfolio and plan monthly budgets with market signals.",
    "Health": "Log workouts and get nutrition advice tailored to your fitness goals.",
    "Image & Video": "Edit photos, generate thumbnails, and trim video clips in chat.",
    "Law": "Search case law and draft contract clauses with legal citations.",
    "News": "Get breaking headlines and daily news digests from trusted sources.",
    "Plugin Tips": "Discover helpful plugins and prompt tips for getting more done.",
    "Shopping": "Compare deals and discounts across stores before you buy.",
    "Lifestyle": "Plan trips, find recipes, and reserve restaurant tables effortlessly.",
    "Tools": "Convert units, generate QR codes, and run quick utility calculators.",
    "Weather": "Fetch real-time weather forecasts and temperature alerts for any city.",
}

# Behaviors cycled across manifest plugins that must not expose anything.
_DEAD_END_BEHAVIORS = (
    {"status": 401, "body": "unauthorized"},
    {"status": 200, "body": "Service Unavailable"},
    {"status": 200, "body": "Server error"},
    {"status": 200, "body": "No requested privileges"},
    {"status": 404, "body": "not found"},
    {"status": 429, "body": "rate limited"},
    {"status": 200, "body": ""},
)

LEGAL_TOS = "TermsOfService"
LEGAL_PRIVACY = "PrivacyPolicy"
LEGAL_OTHER = "OtherLegal"
LEGAL_UNRELATED = "Unrelated"
LEGAL_INACCESSIBLE = "Inaccessible"


@dataclass(frozen=True)
class FixtureSpec:
    """Counts of everything the generated store must contain."""

    seed: int = 42
    plugin_count: int = 200
    e1: int = 60
    e2_name: int = 10
    e2_desc: int = 5
    e2_legal: int = 5
    e3: int = 30
    e4: int = 10
    e5: int = 5
    share_platform_count: int = 8
    timeout_count: int = 6
    unrelated_page_count: int = 15
    legal_tos: int = 60
    legal_privacy: int = 30
    legal_other: int = 20
    legal_unrelated: int = 40
    legal_inaccessible: int = 50
    unstable_endpoint_count: int = 4

    def validate(self) -> None:
        counts = dataclasses.asdict(self)
        for name, value in counts.items():
            if name != "seed" and value < 0:
                raise UnsatisfiableSpec(f"{name} must be >= 0")
        if self.e1 + self.share_platform_count + self.timeout_count + self.unrelated_page_count > self.plugin_count:
            raise UnsatisfiableSpec("fetch-outcome roles exceed plugin_count")
        if self.e2_name + self.e2_desc + self.e2_legal > self.e1:
            raise UnsatisfiableSpec("metadata mismatches need that many leaked manifests")
        if self.e3 + self.e4 + self.e5 > self.e1:
            raise UnsatisfiableSpec(
                "API exposures need that many leaked manifests "
                "(token exposures also require multi-auth plugins among them)"
            )
        if self.unstable_endpoint_count > self.e1 - (self.e3 + self.e4 + self.e5):
            raise UnsatisfiableSpec("unstable endpoints need non-exposed manifest plugins")
        legal_total = (self.legal_tos + self.legal_privacy + self.legal_other
                       + self.legal_unrelated + self.legal_inaccessible)
        if legal_total != self.plugin_count:
            raise UnsatisfiableSpec(
                f"legal mix sums to {legal_total}, expected plugin_count {self.plugin_count}"
            )
        if self.timeout_count > self.legal_inaccessible:
            raise UnsatisfiableSpec("timeout hosts are unreachable, so their legal docs "
                                    "must fit within the inaccessible count")

    def to_payload(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_file(cls, path) -> "FixtureSpec":
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


ACCEPTANCE_SPEC = FixtureSpec()


@dataclass
class FixturePlan:
    """In-memory description of the generated store."""

    spec: FixtureSpec
    listings: list
    hosts: dict
    truth: dict


def _pid(index: int, width: int) -> str:
    return f"p{index:0{width}d}"


def _tos_page(name: str) -> str:
    return (
        "<html><head><title>Terms of Service - {n}</title></head><body>"
        '<nav><a href="/">Home</a> <a href="/privacy">Privacy</a></nav>'
        "<h1>Terms of Service</h1>"
        "<p>Each Provision below governs your use of {n}. Our Affiliates may "
        "assist in delivering the service, and any Regulation that applies to "
        "your region is honored.</p>"
        "<footer>Copyright {n}</footer></body></html>"
    ).format(n=name)


def _privacy_page(name: str) -> str:
    return (
        "<html><head><title>Privacy Policy - {n}</title></head><body>"
        '<nav><a href="/">Home</a> <a href="/terms">Terms</a></nav>'
        "<h1>Privacy Policy</h1>"
        "<p>{n} limits the Collection of Personal Information, honors every "
        "Opt-Out request, applies Data Protection safeguards, and keeps data "
        "only for the stated Retention Period with your User Consent.</p>"
        "<footer>Copyright {n}</footer></body></html>"
    ).format(n=name)


def _other_legal_page(name: str) -> str:
    return (
        "<html><head><title>Legal Notice - {n}</title></head><body>"
        '<nav><a href="/">Home</a></nav>'
        "<h1>Legal Notice</h1>"
        "<p>This notice cites each Statute and Regulation relevant to {n}, "
        "acting as Data Controller where required.</p>"
        "<footer>Copyright {n}</footer></body></html>"
    ).format(n=name)


def _company_page(name: str) -> str:
    # Seed words appear only inside the navigation bar, never in the body.
    return (
        "<html><head><title>{n} - Home</title></head><body>"
        '<nav><a href="/">Home</a> <a href="/about">About</a> '
        '<a href="/privacy">Privacy</a></nav>'
        "<h1>Welcome to {n}</h1>"
        "<p>We build fast dashboards for logistics teams around the globe. "
        "Meet the crew and see what we are making next.</p>"
        "<footer>Copyright {n}</footer></body></html>"
    ).format(n=name)


def _unrelated_wellknown_page(name: str) -> str:
    return (
        "<html><head><title>{n}</title></head><body>"
        "<h1>Welcome</h1><p>We ship fresh noodles worldwide. Browse the menu "
        "and order your favorite bowl today.</p></body></html>"
    ).format(n=name)


def _manifest_document(plan_host: str, name: str, description: str, legal_url: str,
                       email: str, multi_auth: bool, token) -> str:
    auth = {"type": "none"}
    if multi_auth:
        auth = {
            "type": "service_http",
            "authorization_type": "bearer",
            "verification_tokens": {"platform": token},
        }
    manifest = {
        "schema_version": "v1",
        "name_for_human": name,
        "name_for_model": name.lower().replace(" ", "_"),
        "description_for_human": description,
        "description_for_model": description,
        "auth": auth,
        "api": {"type": "openapi", "url": f"http://{plan_host}/openapi.json"},
        "logo_url": f"http://{plan_host}/logo.png",
        "contact_email": email,
        "legal_info_url": legal_url,
    }
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def _api_document(plan_host: str, name: str, endpoint_paths: dict) -> str:
    paths = {}
    for path, shape in sorted(endpoint_paths.items()):
        if shape == "lookup":
            paths[path] = {
                "get": {
                    "operationId": "lookup",
                    "parameters": [
                        {"name": "location", "in": "query", "required": True,
                         "schema": {"type": "string"}},
                        {"name": "date", "in": "query", "required": True,
                         "schema": {"type": "string"}},
                        {"name": "units", "in": "query", "required": False,
                         "schema": {"type": "string"}},
                    ],
                    "responses": {"200": {"description": "ok"}},
                }
            }
        elif shape == "secure":
            paths[path] = {
                "get": {
                    "operationId": "secureLookup",
                    "parameters": [
                        {"name": "q", "in": "query", "required": True,
                         "schema": {"type": "string"}},
                    ],
                    "responses": {"200": {"description": "ok"}},
                }
            }
        elif shape == "bare":
            paths[path] = {
                "get": {
                    "operationId": path.strip("/").replace("/", "_"),
                    "responses": {"200": {"description": "ok"}},
                }
            }
        elif shape == "notes":
            paths[path] = {
                "post": {
                    "operationId": "createNote",
                    "requestBody": {
                        "required": True,
                        "content": {
                            "application/json": {
                                "schema": {
                                    "type": "object",
                                    "properties": {"title": {"type": "string"}},
                                    "required": ["title"],
                                }
                            }
                        },
                    },
                    "responses": {"201": {"description": "created"}},
                }
            }
    document = {
        "openapi": "3.0.1",
        "info": {"title": f"{name} API", "version": "1.0"},
        "servers": [{"url": f"http://{plan_host}"}],
        "paths": paths,
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def build_plan(spec: FixtureSpec) -> FixturePlan:
    """Deterministically expand a spec into listings, host pages, and truth."""
    spec.validate()
    rng = random.Random(spec.seed)
    n = spec.plugin_count
    width = max(3, len(str(max(n - 1, 0))))

    name_pairs = [(a, b) for a in _ADJECTIVES for b in _NOUNS]
    rng.shuffle(name_pairs)

    order = list(range(n))
    rng.shuffle(order)

    cursor = 0

    def take(count: int) -> set:
        nonlocal cursor
        taken = set(order[cursor:cursor + count])
        cursor += count
        return taken

    manifest_set = take(spec.e1)
    share_set = take(spec.share_platform_count)
    timeout_set = take(spec.timeout_count)
    unrelated_set = take(spec.unrelated_page_count)

    manifest_order = [i for i in order if i in manifest_set]
    mcursor = 0

    def take_manifest(count: int) -> set:
        nonlocal mcursor
        taken = set(manifest_order[mcursor:mcursor + count])
        mcursor += count
        return taken

    e3_set = take_manifest(spec.e3)
    e4_set = take_manifest(spec.e4)
    e5_set = take_manifest(spec.e5)
    unstable_set = take_manifest(spec.unstable_endpoint_count)

    mismatch_pool = rng.sample(sorted(manifest_set), spec.e2_name + spec.e2_desc + spec.e2_legal)
    e2_name_set = set(mismatch_pool[: spec.e2_name])
    e2_desc_set = set(mismatch_pool[spec.e2_name: spec.e2_name + spec.e2_desc])
    e2_legal_set = set(mismatch_pool[spec.e2_name + spec.e2_desc:])
    legal_note_plugin = min(e2_legal_set) if e2_legal_set else None

    # Legal mix: timeout hosts never answer, so they absorb inaccessible
    # slots first; everything else draws from the shuffled remainder.
    legal_pool = (
        [LEGAL_TOS] * spec.legal_tos
        + [LEGAL_PRIVACY] * spec.legal_privacy
        + [LEGAL_OTHER] * spec.legal_other
        + [LEGAL_UNRELATED] * spec.legal_unrelated
        + [LEGAL_INACCESSIBLE] * (spec.legal_inaccessible - spec.timeout_count)
    )
    rng.shuffle(legal_pool)
    legal_assignment = {}
    pool_iter = iter(legal_pool)
    for i in range(n):
        if i in timeout_set:
            legal_assignment[i] = LEGAL_INACCESSIBLE
        else:
            legal_assignment[i] = next(pool_iter)

    listings = []
    hosts: dict = {}
    truth_plugins: dict = {}
    unstable_endpoints = []
    dead_end_index = 0
    inaccessible_toggle = 0

    for i in range(n):
        pid = _pid(i, width)
        adjective, noun = name_pairs[i % len(name_pairs)]
        name = f"{adjective} {noun}"
        category = CATEGORIES[i % len(CATEGORIES)]
        description = f"{_DESCRIPTIONS[category]} Offering {pid}."
        regions = []
        if i % 10 == 7:
            country = _REGIONS[(i // 10) % len(_REGIONS)]
            description += f" Tailored for {country} users."
            regions = [country]
        email = f"team@{_EMAIL_DOMAINS[i % len(_EMAIL_DOMAINS)]}"
        host = f"{pid}.plugins.test"

        if i in share_set:
            share_host = _SHARE_HOSTS[i % len(_SHARE_HOSTS)]
            legal_url = f"http://{share_host}/{pid}/legal"
            legal_host, legal_path = share_host, f"/{pid}/legal"
        else:
            legal_url = f"http://{host}/legal"
            legal_host, legal_path = host, "/legal"

        listings.append({
            "plugin_id": pid,
            "name": name,
            "description": description,
            "legal_url": legal_url,
            "contact_email": email,
        })

        host_entry = hosts.setdefault(legal_host, {"timeout": False, "pages": {}})

        # Legal page per assigned mix.
        legal_mix = legal_assignment[i]
        if i in timeout_set:
            hosts[host] = {"timeout": True, "pages": {}}
        elif legal_mix == LEGAL_TOS:
            host_entry["pages"][legal_path] = {"status": 200, "body": _tos_page(name),
                                               "content_type": "text/html"}
        elif legal_mix == LEGAL_PRIVACY:
            host_entry["pages"][legal_path] = {"status": 200, "body": _privacy_page(name),
                                               "content_type": "text/html"}
        elif legal_mix == LEGAL_OTHER:
            host_entry["pages"][legal_path] = {"status": 200, "body": _other_legal_page(name),
                                               "content_type": "text/html"}
        elif legal_mix == LEGAL_UNRELATED:
            host_entry["pages"][legal_path] = {"status": 200, "body": _company_page(name),
                                               "content_type": "text/html"}
        else:
            status = 404 if inaccessible_toggle % 2 == 0 else 500
            inaccessible_toggle += 1
            host_entry["pages"][legal_path] = {"status": status, "body": "not available",
                                               "content_type": "text/plain"}

        exposures = {"e1": False, "e2": False, "e3": False, "e4": False, "e5": False}
        consistency_truth = None
        multi_auth = None
        token = None
        api_paths: dict = {}

        if i in manifest_set:
            exposures["e1"] = True
            fetch_outcome = "AccessibleRelevant"

            name_mismatch = i in e2_name_set
            desc_mismatch = i in e2_desc_set
            legal_mismatch = i in e2_legal_set
            exposures["e2"] = name_mismatch or desc_mismatch or legal_mismatch
            consistency_truth = {"name": name_mismatch, "desc": desc_mismatch,
                                 "legal": legal_mismatch}

            manifest_name = name
            if name_mismatch:
                manifest_name = "AAA_" + name.replace(" ", "_")
            manifest_description = description
            if desc_mismatch:
                manifest_description = f"Internal manifest copy for {pid}."
            manifest_legal = legal_url
            if legal_mismatch:
                if i == legal_note_plugin:
                    manifest_legal = f"http://{host}/legal-copy"
                    copy_of = host_entry["pages"].get("/legal")
                    body = copy_of["body"] if copy_of else _company_page(name)
                    host_entry["pages"]["/legal-copy"] = {
                        "status": 200, "body": body, "content_type": "text/html"}
                else:
                    manifest_legal = f"http://{host}/legal-alt"
                    host_entry["pages"]["/legal-alt"] = {
                        "status": 200,
                        "body": f"<html><body><p>Alternate notice for {name}.</p></body></html>",
                        "content_type": "text/html",
                    }

            if i in e3_set:
                multi_auth = False
                api_paths = {"/api/lookup": "lookup", "/api/admin": "bare",
                             "/api/notes": "notes"}
                host_entry["pages"]["/api/lookup"] = {"echo": True}
                host_entry["pages"]["/api/admin"] = {"status": 401, "body": "unauthorized"}
                host_entry["pages"]["/api/notes"] = {"echo": True}
                exposures["e3"] = True
            elif i in e4_set:
                multi_auth = True
                token = f"tok-{pid}"
                api_paths = {"/api/lookup": "lookup"}
                host_entry["pages"]["/api/lookup"] = {"echo": True}
                exposures["e4"] = True
            elif i in e5_set:
                multi_auth = True
                token = f"tok-{pid}"
                api_paths = {"/api/secure": "secure"}
                host_entry["pages"]["/api/secure"] = {"echo": True, "gate_token": token}
                exposures["e5"] = True
            elif i in unstable_set:
                multi_auth = False
                api_paths = {"/api/flaky": "bare"}
                host_entry["pages"]["/api/flaky"] = {
                    "script": [
                        {"status": 404, "body": "not found"},
                        {"status": 200, "body": '{"ok": true, "data": "ready"}'},
                    ]
                }
                unstable_endpoints.append([pid, "/api/flaky"])
            else:
                multi_auth = dead_end_index % 2 == 1
                if multi_auth:
                    token = f"tok-{pid}"
                behavior = _DEAD_END_BEHAVIORS[dead_end_index % len(_DEAD_END_BEHAVIORS)]
                dead_end_index += 1
                api_paths = {"/api/status": "bare"}
                host_entry["pages"]["/api/status"] = dict(behavior)

            host_entry["pages"]["/.well-known/ai-plugin.json"] = {
                "status": 200,
                "body": _manifest_document(host, manifest_name, manifest_description,
                                           manifest_legal, email, bool(multi_auth), token),
                "content_type": "application/json",
            }
            host_entry["pages"]["/openapi.json"] = {
                "status": 200,
                "body": _api_document(host, name, api_paths),
                "content_type": "application/json",
            }
        elif i in share_set:
            fetch_outcome = "SharePlatformHosted"
        elif i in timeout_set:
            fetch_outcome = "Timeout"
        elif i in unrelated_set:
            fetch_outcome = "AccessibleUnrelated"
            host_entry["pages"]["/.well-known/ai-plugin.json"] = {
                "status": 200,
                "body": _unrelated_wellknown_page(name),
                "content_type": "text/html",
            }
        else:
            fetch_outcome = "ServerError"
            if i % 2 == 0:
                for path in ("/.well-known/ai-plugin.json", "/.well-known"):
                    host_entry["pages"][path] = {"status": 500, "body": "internal error",
                                                 "content_type": "text/plain"}

        truth_plugins[pid] = {
            "exposures": exposures,
            "fetch_outcome": fetch_outcome,
            "consistency": consistency_truth,
            "legal_accessible": legal_mix != LEGAL_INACCESSIBLE,
            "legal_category": None if legal_mix == LEGAL_INACCESSIBLE else legal_mix,
            "category": category,
            "regions": regions,
            "email_domain": email.split("@", 1)[1],
            "multi_auth": multi_auth,
            "token": token,
            "api_host": host if i in manifest_set else None,
            "api_paths": sorted(api_paths) if api_paths else [],
        }

    truth = {
        "plugins": truth_plugins,
        "unstable_endpoints": unstable_endpoints,
        "counts": _aggregate_counts(truth_plugins),
    }
    _check_counts(spec, truth["counts"])
    return FixturePlan(spec=spec, listings=listings, hosts=hosts, truth=truth)


def _aggregate_counts(truth_plugins: dict) -> dict:
    counts = {
        "plugins": len(truth_plugins),
        "e1": 0, "e2": 0, "e2_name": 0, "e2_desc": 0, "e2_legal": 0,
        "e3": 0, "e4": 0, "e5": 0,
        "fetch_outcomes": {},
        "legal": {},
    }
    for entry in truth_plugins.values():
        for key in ("e1", "e2", "e3", "e4", "e5"):
            counts[key] += bool(entry["exposures"][key])
        if entry["consistency"]:
            counts["e2_name"] += bool(entry["consistency"]["name"])
            counts["e2_desc"] += bool(entry["consistency"]["desc"])
            counts["e2_legal"] += bool(entry["consistency"]["legal"])
        outcome = entry["fetch_outcome"]
        counts["fetch_outcomes"][outcome] = counts["fetch_outcomes"].get(outcome, 0) + 1
        legal = entry["legal_category"] or LEGAL_INACCESSIBLE
        counts["legal"][legal] = counts["legal"].get(legal, 0) + 1
    counts["fetch_outcomes"] = dict(sorted(counts["fetch_outcomes"].items()))
    counts["legal"] = dict(sorted(counts["legal"].items()))
    return counts


def _check_counts(spec: FixtureSpec, counts: dict) -> None:
    expected = {
        "e1": spec.e1, "e2_name": spec.e2_name, "e2_desc": spec.e2_desc,
        "e2_legal": spec.e2_legal, "e3": spec.e3, "e4": spec.e4, "e5": spec.e5,
    }
    for key, value in expected.items():
        if counts[key] != value:
            raise UnsatisfiableSpec(f"generated {counts[key]} {key} but spec wants {value}")


def generate_store(spec: FixtureSpec, out_dir) -> FixturePlan:
    """Write the plan to ``out_dir``; byte-identical for identical specs."""
    plan = build_plan(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    snapshot_lines = [json.dumps(listing, sort_keys=True) for listing in plan.listings]
    (out / SNAPSHOT_FILE).write_text(
        "\n".join(snapshot_lines) + ("\n" if snapshot_lines else ""), encoding="utf-8"
    )
    (out / HOSTS_FILE).write_text(
        json.dumps(plan.hosts, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    truth_payload = dict(plan.truth)
    truth_payload["spec"] = spec.to_payload()
    (out / TRUTH_FILE).write_text(
        json.dumps(truth_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return plan


def load_truth(store_dir) -> dict:
    with open(Path(store_dir) / TRUTH_FILE, encoding="utf-8") as handle:
        return json.load(handle)


def load_hosts(store_dir) -> dict:
    with open(Path(store_dir) / HOSTS_FILE, encoding="utf-8") as handle:
        return json.load(handle)
