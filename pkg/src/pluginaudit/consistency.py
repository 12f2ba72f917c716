"""Data-consistency layer.

Compares user-facing listing metadata against the manifest submitted to
the platform: names and descriptions by term-frequency cosine similarity,
legal-document URLs by normalized equality.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional
from urllib.parse import urlsplit, urlunsplit

from .errors import InvalidUrl
from .models import ManifestData, StoreListing

NAME_MISMATCH = "NameMismatch"
DESCRIPTION_MISMATCH = "DescriptionMismatch"
LEGAL_URL_MISMATCH = "LegalUrlMismatch"

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_DEFAULT_PORTS = {"http": "80", "https": "443"}


@dataclass(frozen=True)
class ConsistencyThresholds:
    """Similarity floors below which a field pair counts as mismatched."""

    theta1: float = 0.85  # name
    theta2: float = 0.8   # description
    theta3: float = 1.0   # legal URL

    def __post_init__(self):
        for value in (self.theta1, self.theta2, self.theta3):
            if not 0.0 <= value <= 1.0:
                raise ValueError("thresholds must lie in [0, 1]")


@dataclass(frozen=True)
class ConsistencyVerdict:
    plugin_id: str
    name_similarity: float
    description_similarity: float
    legal_url_match: bool
    flags: tuple = ()

    @property
    def exposure2(self) -> bool:
        return bool(self.flags)


def text_vector(text: str) -> dict:
    """Lowercased term-frequency map over alphanumeric runs."""
    counts: dict = {}
    for token in _TOKEN_RE.findall(text.lower()):
        counts[token] = counts.get(token, 0) + 1
    return counts


def cosine_similarity(a: dict, b: dict) -> float:
    """Cosine of two term-frequency vectors, clamped to [0, 1].

    Two empty vectors are identical (1.0); empty against non-empty is
    maximally dissimilar (0.0).
    """
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    dot = sum(count * b.get(token, 0) for token, count in a.items())
    # sqrt of the product keeps self-similarity exactly 1 for integer counts
    norm = math.sqrt(sum(c * c for c in a.values()) * sum(c * c for c in b.values()))
    if norm == 0:
        return 0.0
    return min(1.0, max(0.0, dot / norm))


def normalize_url(url: str) -> str:
    parts = urlsplit(url)
    if not parts.scheme or not parts.hostname:
        raise InvalidUrl(f"not a parseable URL: {url!r}")
    scheme = parts.scheme.lower()
    host = parts.hostname.lower()
    netloc = host
    if parts.port is not None and str(parts.port) != _DEFAULT_PORTS.get(scheme):
        netloc = f"{host}:{parts.port}"
    path = parts.path.rstrip("/")
    return urlunsplit((scheme, netloc, path, parts.query, ""))


def urls_match(listing_url: str, manifest_url: str) -> bool:
    """True when both URLs normalize to the same bytes.

    Normalization lowercases scheme and host, strips default ports and the
    trailing slash, and drops the fragment.
    """
    return normalize_url(listing_url) == normalize_url(manifest_url)


def check_consistency(listing: StoreListing, manifest: ManifestData,
                      thresholds: Optional[ConsistencyThresholds] = None) -> ConsistencyVerdict:
    """Compare the three shared fields and flag any that fall below threshold."""
    thresholds = thresholds or ConsistencyThresholds()
    name_sim = cosine_similarity(text_vector(listing.name), text_vector(manifest.name))
    desc_sim = cosine_similarity(
        text_vector(listing.description), text_vector(manifest.description or "")
    )
    legal_match = _legal_urls_match(listing.legal_url, manifest.legal_url)
    legal_sim = 1.0 if legal_match else 0.0

    flags = []
    if name_sim < thresholds.theta1:
        flags.append(NAME_MISMATCH)
    if desc_sim < thresholds.theta2:
        flags.append(DESCRIPTION_MISMATCH)
    if legal_sim < thresholds.theta3:
        flags.append(LEGAL_URL_MISMATCH)

    return ConsistencyVerdict(
        plugin_id=listing.plugin_id,
        name_similarity=name_sim,
        description_similarity=desc_sim,
        legal_url_match=legal_match,
        flags=tuple(flags),
    )


def _legal_urls_match(listing_url: Optional[str], manifest_url: Optional[str]) -> bool:
    if not listing_url and not manifest_url:
        return True
    if not listing_url or not manifest_url:
        return False
    try:
        return urls_match(listing_url, manifest_url)
    except InvalidUrl:
        return False
