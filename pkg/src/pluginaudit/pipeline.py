"""Full audit pipeline: discovery, consistency, probing, legal, classification.

Each plugin is audited independently inside a bounded worker pool; all
outbound traffic flows through one shared per-host rate limiter. Per-plugin
failures are folded into the report as evidence rather than aborting the
run, and the finished run is sorted by plugin_id so output is deterministic.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Optional

from . import classify as classify_mod
from .config import AuditConfig
from .consistency import LEGAL_URL_MISMATCH, check_consistency
from .discovery import FetchStatus, evaluate_exposure1, fetch_manifest
from .errors import EmptyDescription, MalformedDocument, UnsupportedVersion
from .legal import (
    LegalDocVerdict,
    LegalSeedLibrary,
    classify_legal_doc,
    extract_headings,
    strip_boilerplate,
)
from .models import (
    DEFAULT_FIELD_POLICY,
    PluginRecord,
    StoreListing,
    check_field_policy,
    parse_api_document,
    parse_manifest,
)
from .probe import (
    EndpointProbes,
    ResponseKind,
    aggregate_kind,
    attach_token,
    build_request,
    evaluate_exposures_345,
    probe_endpoint,
    probe_eligible,
)
from .report import EXPOSURE_KEYS, AssessmentRun, ExposureReport
from .transport import HostRateLimiter, RequestsTransport, fetch_with_retries


class AuditContext:
    """Shared, read-only state for one run."""

    def __init__(self, config: AuditConfig, transport=None, limiter=None):
        self.config = config
        self.policy = config.fetch_policy()
        self.thresholds = config.thresholds()
        self.lexicon = config.lexicon()
        self.transport = transport or RequestsTransport(
            user_agent=config.user_agent,
            resolve=config.resolve,
            proxies=list(config.effective_proxies()),
        )
        self.limiter = limiter or HostRateLimiter(config.per_host_interval)
        self.seed_library = (
            LegalSeedLibrary.from_file(config.seed_library_path)
            if config.seed_library_path
            else LegalSeedLibrary()
        )
        self.scorer = classify_mod.LexicalScorer(
            classify_mod.load_keyword_table(config.keyword_table_path)
        )
        self.gazetteer = classify_mod.load_gazetteer(config.gazetteer_path)


def _excerpt(text, limit: int = 120) -> str:
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    text = (text or "").strip().replace("\n", " ")
    return text[:limit]


def audit_plugin(listing: StoreListing, ctx: AuditContext) -> ExposureReport:
    evidence = []
    exposures = {key: False for key in EXPOSURE_KEYS}

    # Layer 1: manifest discovery.
    outcome = fetch_manifest(
        listing,
        ctx.policy,
        ctx.transport,
        limiter=ctx.limiter,
        share_hosts=ctx.config.share_platform_hosts,
        seeds=ctx.config.relevance_seeds,
    )
    manifest = None
    if outcome.status is FetchStatus.ACCESSIBLE_RELEVANT and outcome.body is not None:
        manifest = parse_manifest(outcome.body)
    if outcome.note:
        evidence.append(("discovery", listing.legal_url or "", outcome.note))

    record = PluginRecord(listing=listing, manifest=manifest)
    exposures["e1"] = evaluate_exposure1(record)
    if exposures["e1"]:
        revealed = check_field_policy(manifest, DEFAULT_FIELD_POLICY)
        evidence.append((
            "e1",
            outcome.candidate_urls[-1] if outcome.candidate_urls else "",
            f"manifest retrievable (HTTP {outcome.http_status}); "
            f"reveals: {', '.join(revealed) if revealed else 'no hidden fields'}",
        ))

    # Layer 2: metadata consistency (needs the manifest).
    consistency = None
    if manifest is not None:
        consistency = check_consistency(listing, manifest, ctx.thresholds)
        exposures["e2"] = consistency.exposure2
        if exposures["e2"]:
            evidence.append((
                "e2",
                f"name={manifest.name!r} legal={manifest.legal_url!r}",
                "flags: " + ", ".join(consistency.flags),
            ))
        if LEGAL_URL_MISMATCH in consistency.flags:
            note = _compare_legal_contents(listing, manifest, ctx)
            if note:
                evidence.append(("consistency", f"{listing.legal_url} vs {manifest.legal_url}", note))

    # Layer 3: API surface discovery and probing.
    surface = None
    probe_summary = None
    if manifest is not None and manifest.api_url:
        surface, note = _fetch_surface(manifest.api_url, ctx)
        if note:
            evidence.append(("probe", manifest.api_url, note))
    if surface is not None:
        record = PluginRecord(listing=listing, manifest=manifest, surface=surface)
        probes, skipped = _probe_surface(record, ctx)
        verdicts = evaluate_exposures_345(record, probes)
        exposures["e3"] = verdicts["exposure3"]
        exposures["e4"] = verdicts["exposure4"]
        exposures["e5"] = verdicts["exposure5"]
        probe_summary = _summarize_probes(manifest, probes, skipped)
        for key in ("e3", "e4", "e5"):
            if exposures[key]:
                witness = _valid_witness(probes, with_token=(key == "e5"))
                evidence.append((
                    key,
                    witness.endpoint_key if witness else "",
                    "valid data "
                    + ("with leaked token" if key == "e5" else "without platform auth"),
                ))

    # Legal-document layer (independent of the manifest).
    legal = _audit_legal(listing, ctx)
    if legal is not None and not legal.accessible:
        evidence.append(("legal", listing.legal_url or "", "legal document inaccessible"))

    # Classification layer (pure).
    category = None
    try:
        category, score = classify_mod.classify_category(listing.description, ctx.scorer)
        if score == 0.0:
            evidence.append(("classifier", _excerpt(listing.description),
                             "no keyword hits; category is a tie-break default"))
    except EmptyDescription:
        evidence.append(("classifier", "", "empty description; left unclassified"))
    regions = classify_mod.detect_regions(
        f"{listing.name} {listing.description}", ctx.gazetteer
    )

    email_domain = None
    if listing.contact_email and "@" in listing.contact_email:
        email_domain = listing.contact_email.rsplit("@", 1)[1].lower()

    return ExposureReport(
        plugin_id=listing.plugin_id,
        exposures=exposures,
        fetch_outcome=outcome.status.value,
        consistency=consistency,
        legal=legal,
        category=category,
        regions=tuple(regions),
        email_domain=email_domain,
        evidence=tuple(evidence),
        probe_summary=probe_summary,
    )


def _fetch_surface(api_url: str, ctx: AuditContext):
    reply, failure = fetch_with_retries(ctx.transport, ctx.limiter, ctx.policy, api_url)
    if failure or reply is None or not 200 <= reply.status < 300:
        status = reply.status if reply is not None else failure
        return None, f"API description not retrievable ({status})"
    try:
        return parse_api_document(reply.body, api_url), None
    except (MalformedDocument, UnsupportedVersion) as exc:
        return None, f"API description unusable: {exc}"


def _probe_surface(record: PluginRecord, ctx: AuditContext):
    surface = record.surface
    manifest = record.manifest
    probes = []
    skipped = []
    for endpoint in surface.endpoints:
        if not probe_eligible(endpoint, ctx.config.aggressive_methods):
            skipped.append(endpoint.key)
            continue
        request = build_request(endpoint, surface.base_url or surface.source_url)
        bare = probe_endpoint(request, ctx.policy, ctx.transport,
                              limiter=ctx.limiter, lexicon=ctx.lexicon)
        surface.responses[endpoint.key] = bare
        token_kind = None
        token_responses = ()
        if manifest.verification_token:
            tokened = probe_endpoint(
                attach_token(request, manifest.verification_token),
                ctx.policy, ctx.transport, limiter=ctx.limiter, lexicon=ctx.lexicon,
            )
            token_kind = aggregate_kind(tokened)
            token_responses = tuple(tokened)
        probes.append(EndpointProbes(
            endpoint_key=endpoint.key,
            bare_kind=aggregate_kind(bare),
            bare_responses=tuple(bare),
            token_kind=token_kind,
            token_responses=token_responses,
        ))
    return probes, skipped


def _summarize_probes(manifest, probes, skipped) -> dict:
    classes: dict = {}
    for probe in probes:
        classes[probe.bare_kind.value] = classes.get(probe.bare_kind.value, 0) + 1
    return {
        "multi_auth": manifest.multi_auth,
        "endpoints_probed": len(probes),
        "endpoints_skipped": sorted(skipped),
        "classes": dict(sorted(classes.items())),
        "token_probed": manifest.verification_token is not None,
    }


def _valid_witness(probes, with_token: bool):
    for probe in probes:
        kind = probe.token_kind if with_token else probe.bare_kind
        if kind == ResponseKind.VALID:
            return probe
    return None


def _compare_legal_contents(listing, manifest, ctx) -> Optional[str]:
    """Note when mismatched legal URLs nonetheless serve identical pages."""
    if not listing.legal_url or not manifest.legal_url:
        return None
    bodies = []
    for url in (listing.legal_url, manifest.legal_url):
        reply, failure = fetch_with_retries(ctx.transport, ctx.limiter, ctx.policy, url)
        if failure or reply is None or not 200 <= reply.status < 300:
            return None
        bodies.append(reply.body)
    if bodies[0] == bodies[1]:
        return "urls differ but serve identical content"
    return None


def _audit_legal(listing: StoreListing, ctx: AuditContext) -> LegalDocVerdict:
    pid = listing.plugin_id
    if not listing.legal_url:
        return LegalDocVerdict(plugin_id=pid, accessible=False)
    reply, failure = fetch_with_retries(ctx.transport, ctx.limiter, ctx.policy,
                                        listing.legal_url)
    if failure or reply is None or not 200 <= reply.status < 300:
        return LegalDocVerdict(plugin_id=pid, accessible=False)
    text = strip_boilerplate(reply.body)
    if not text:
        return LegalDocVerdict(plugin_id=pid, accessible=False)
    headings = extract_headings(reply.body)
    category, seeds = classify_legal_doc(text, headings, ctx.seed_library)
    return LegalDocVerdict(plugin_id=pid, accessible=True, category=category,
                           matched_seeds=seeds)


def _store_digest(listings) -> str:
    payload = json.dumps(
        [listing.plugin_id for listing in listings], separators=(",", ":")
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def audit_store(listings, config: AuditConfig, *, transport=None, limiter=None,
                run_id: Optional[str] = None,
                timestamp: Optional[str] = None) -> AssessmentRun:
    """Audit every listing and assemble a run.

    ``run_id`` defaults to a digest of the config and the listing set, and
    ``timestamp`` to the current UTC time; fix both to make rerenders of
    the same inputs byte-identical.
    """
    ctx = AuditContext(config, transport=transport, limiter=limiter)
    listings = list(listings)
    reports = []

    def worker(listing: StoreListing) -> ExposureReport:
        try:
            return audit_plugin(listing, ctx)
        except Exception as exc:  # per-plugin failures must not kill the run
            return ExposureReport(
                plugin_id=listing.plugin_id,
                exposures={key: False for key in EXPOSURE_KEYS},
                fetch_outcome=FetchStatus.NO_LEGAL_URL.value if not listing.legal_url
                else FetchStatus.SERVER_ERROR.value,
                evidence=(("error", listing.plugin_id, f"audit failed: {exc!r}"),),
            )

    if config.workers <= 1 or len(listings) <= 1:
        reports = [worker(listing) for listing in listings]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            reports = list(pool.map(worker, listings))

    reports.sort(key=lambda r: r.plugin_id)
    digest = config.digest()
    if run_id is None:
        run_id = f"run-{hashlib.sha256((digest + _store_digest(listings)).encode()).hexdigest()[:12]}"
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return AssessmentRun(
        run_id=run_id,
        timestamp=timestamp,
        config_digest=digest,
        reports=tuple(reports),
    )
