"""File-leakage detection layer.

Derives well-known manifest URLs from a plugin's legal-document URL,
fetches the candidates politely, decides whether what came back is a
plugin manifest, and evaluates whether the plugin's configuration is
externally retrievable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional
from urllib.parse import urlsplit, urlunsplit

from .errors import InvalidUrl, MalformedDocument, MissingField
from .models import PluginRecord, StoreListing, parse_manifest
from .transport import FetchPolicy, HostRateLimiter, fetch_with_retries

MANIFEST_PATH = "/.well-known/ai-plugin.json"
WELL_KNOWN_PATH = "/.well-known"

# Tokens whose presence marks a response body as manifest-like.
DEFAULT_RELEVANCE_SEEDS = ("auth", "api", "legal_info_url")

# Hosts where developers park legal documents on a sharing platform; the
# manifest can never live under these origins, so candidates are not tried.
DEFAULT_SHARE_PLATFORM_HOSTS = (
    "drive.google.com",
    "docs.google.com",
    "github.com",
    "raw.githubusercontent.com",
    "gist.github.com",
    "github.io",
)

_TAG_RE = re.compile(r"<[^>]*>")
_TOKEN_RE = re.compile(r"[a-z0-9_]+")


class FetchStatus(str, Enum):
    ACCESSIBLE_RELEVANT = "AccessibleRelevant"
    ACCESSIBLE_UNRELATED = "AccessibleUnrelated"
    TIMEOUT = "Timeout"
    SHARE_PLATFORM_HOSTED = "SharePlatformHosted"
    SERVER_ERROR = "ServerError"
    NO_LEGAL_URL = "NoLegalUrl"


@dataclass(frozen=True)
class ManifestFetchOutcome:
    """Terminal result of manifest discovery for one plugin."""

    plugin_id: str
    status: FetchStatus
    candidate_urls: tuple = ()
    body: Optional[bytes] = None
    http_status: Optional[int] = None
    note: Optional[str] = None


def derive_manifest_urls(legal_url: str) -> list:
    """Candidate manifest URLs for a legal-document URL, most specific first.

    The path, query, and fragment are stripped down to the origin, then the
    well-known manifest path and the bare well-known directory are appended.
    """
    parts = urlsplit(legal_url)
    if parts.scheme not in ("http", "https") or not parts.hostname:
        raise InvalidUrl(f"not an absolute http(s) URL: {legal_url!r}")
    origin = urlunsplit((parts.scheme, parts.netloc, "", "", ""))
    return [origin + MANIFEST_PATH, origin + WELL_KNOWN_PATH]


def classify_relevance(body, seeds=DEFAULT_RELEVANCE_SEEDS) -> str:
    """"relevant" when the body contains a manifest seed word as a token.

    Matching is case-insensitive and happens after HTML tags are stripped,
    so seed words inside tag names or attributes do not count. Tokens keep
    underscores, which lets multi-part keys match whole.
    """
    if isinstance(body, bytes):
        body = body.decode("utf-8", errors="replace")
    text = _TAG_RE.sub(" ", body).lower()
    tokens = set(_TOKEN_RE.findall(text))
    wanted = {seed.lower() for seed in seeds}
    return "relevant" if tokens & wanted else "unrelated"


def is_share_platform_host(url: str, share_hosts=DEFAULT_SHARE_PLATFORM_HOSTS) -> bool:
    host = (urlsplit(url).hostname or "").lower()
    for entry in share_hosts:
        entry = entry.lower()
        if host == entry or host.endswith("." + entry):
            return True
    return False


def fetch_manifest(listing: StoreListing, policy: FetchPolicy, transport, *,
                   limiter: Optional[HostRateLimiter] = None,
                   share_hosts=DEFAULT_SHARE_PLATFORM_HOSTS,
                   seeds=DEFAULT_RELEVANCE_SEEDS) -> ManifestFetchOutcome:
    """Try the derived manifest candidates for one listing.

    Candidates are fetched in order; the first accessible body that both
    contains a relevance seed and parses as a manifest wins. All failure
    modes are encoded in the outcome status, never raised.
    """
    pid = listing.plugin_id
    if not listing.legal_url:
        return ManifestFetchOutcome(plugin_id=pid, status=FetchStatus.NO_LEGAL_URL)
    if is_share_platform_host(listing.legal_url, share_hosts):
        return ManifestFetchOutcome(
            plugin_id=pid,
            status=FetchStatus.SHARE_PLATFORM_HOSTED,
            note=f"legal document hosted on {urlsplit(listing.legal_url).hostname}",
        )
    try:
        candidates = derive_manifest_urls(listing.legal_url)
    except InvalidUrl as exc:
        # A legal URL outside the http(s) contract gives us nothing to derive.
        return ManifestFetchOutcome(
            plugin_id=pid, status=FetchStatus.NO_LEGAL_URL, note=str(exc)
        )

    saw_unrelated = False
    saw_timeout = False
    last_status = None
    for url in candidates:
        reply, failure = fetch_with_retries(transport, limiter, policy, url)
        if failure in ("timeout", "connection"):
            saw_timeout = True
            continue
        if reply is None:
            continue
        last_status = reply.status
        if failure == "server_error" or reply.status >= 500:
            continue
        if 200 <= reply.status < 300:
            if classify_relevance(reply.body, seeds) == "relevant":
                try:
                    parse_manifest(reply.body)
                except (MalformedDocument, MissingField):
                    saw_unrelated = True
                    continue
                return ManifestFetchOutcome(
                    plugin_id=pid,
                    status=FetchStatus.ACCESSIBLE_RELEVANT,
                    candidate_urls=tuple(candidates[: candidates.index(url) + 1]),
                    body=reply.body,
                    http_status=reply.status,
                )
            saw_unrelated = True
        # 3xx/4xx are terminal for this candidate; fall through to the next.

    if saw_unrelated:
        status = FetchStatus.ACCESSIBLE_UNRELATED
        note = None
    elif saw_timeout:
        status = FetchStatus.TIMEOUT
        note = "no response within policy; retry recommended"
    else:
        status = FetchStatus.SERVER_ERROR
        note = None
    return ManifestFetchOutcome(
        plugin_id=pid,
        status=status,
        candidate_urls=tuple(candidates),
        http_status=last_status,
        note=note,
    )


def evaluate_exposure1(record: PluginRecord) -> bool:
    """True when the plugin's manifest was externally retrievable."""
    return record.manifest is not None
