"""Legal-document layer.

Strips navigation chrome from a fetched page, filters for legal
attributes with a seed-phrase library, and sorts accessible documents
into terms-of-service, privacy-policy, or other-legal buckets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Optional

DEFAULT_LEGAL_SEEDS = (
    "Privacy",
    "Regulation",
    "Statute",
    "Provision",
    "Affiliates",
    "Collection",
    "Opt-Out",
    "Personal Information",
    "User Consent",
    "Retention Period",
    "Data Protection",
    "Data Subject",
    "Data Controller",
    "Data Processor",
    "Legitimate Interest",
    "Cross-Border Data Transfers",
)

TERMS_OF_SERVICE = "TermsOfService"
PRIVACY_POLICY = "PrivacyPolicy"
OTHER_LEGAL = "OtherLegal"
UNRELATED = "Unrelated"

_BOILERPLATE_TAGS = {"nav", "header", "footer", "script", "style", "noscript"}
_HEADING_TAGS = {"h1", "h2"}
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class LegalSeedLibrary:
    seeds: tuple = DEFAULT_LEGAL_SEEDS

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seed library must not be empty")

    @classmethod
    def from_file(cls, path) -> "LegalSeedLibrary":
        """Load one phrase per line; blank lines and #-comments skipped."""
        seeds = []
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line and not line.startswith("#"):
                    seeds.append(line)
        return cls(seeds=tuple(seeds))


@dataclass(frozen=True)
class LegalDocVerdict:
    plugin_id: str
    accessible: bool
    category: Optional[str] = None
    matched_seeds: tuple = ()

    def __post_init__(self):
        if not self.accessible and self.category is not None:
            raise ValueError("inaccessible documents carry no category")
        if self.category in (TERMS_OF_SERVICE, PRIVACY_POLICY, OTHER_LEGAL) and not self.matched_seeds:
            raise ValueError("legal categories require matched seeds")


class _PageExtractor(HTMLParser):
    """Collects visible body text, the title, and h1/h2 headings.

    Content inside navigation, header, footer, script, and style regions
    is dropped; the document title is captured separately even though it
    sits inside <head>.
    """

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.skip_depth = 0
        self.in_title = False
        self.heading_tag = None
        self.text_parts = []
        self.title_parts = []
        self.headings = []
        self._heading_parts = []

    def handle_starttag(self, tag, attrs):
        if tag in _BOILERPLATE_TAGS:
            self.skip_depth += 1
        elif tag == "title":
            self.in_title = True
        elif tag in _HEADING_TAGS and self.skip_depth == 0:
            self.heading_tag = tag
            self._heading_parts = []

    def handle_endtag(self, tag):
        if tag in _BOILERPLATE_TAGS and self.skip_depth > 0:
            self.skip_depth -= 1
        elif tag == "title":
            self.in_title = False
        elif tag in _HEADING_TAGS and self.heading_tag == tag:
            heading = _WS_RE.sub(" ", "".join(self._heading_parts)).strip()
            if heading:
                self.headings.append(heading)
            self.heading_tag = None

    def handle_data(self, data):
        if self.in_title:
            self.title_parts.append(data)
            return
        if self.skip_depth > 0:
            return
        if self.heading_tag is not None:
            self._heading_parts.append(data)
        self.text_parts.append(data)

    @property
    def title(self) -> str:
        return _WS_RE.sub(" ", "".join(self.title_parts)).strip()

    @property
    def text(self) -> str:
        return _WS_RE.sub(" ", " ".join(self.text_parts)).strip()


def _extract(document) -> _PageExtractor:
    if isinstance(document, bytes):
        document = document.decode("utf-8", errors="replace")
    parser = _PageExtractor()
    try:
        parser.feed(document)
        parser.close()
    except Exception:
        pass  # salvage whatever was collected from a broken page
    return parser


def strip_boilerplate(document) -> str:
    """Visible main text with nav/header/footer/script/style removed."""
    return _extract(document).text


def extract_headings(document) -> list:
    """Document title followed by h1/h2 headings, in document order."""
    parser = _extract(document)
    headings = []
    if parser.title:
        headings.append(parser.title)
    headings.extend(parser.headings)
    return headings


def has_legal_attributes(text: str, library: Optional[LegalSeedLibrary] = None):
    """(matched?, seeds found) for case-insensitive phrase search."""
    library = library or LegalSeedLibrary()
    haystack = _WS_RE.sub(" ", text).lower()
    matched = tuple(seed for seed in library.seeds if seed.lower() in haystack)
    return bool(matched), matched


def classify_legal_doc(text: str, headings, library: Optional[LegalSeedLibrary] = None):
    """Category for an accessible document.

    Documents without any seed phrase are Unrelated. Otherwise the title
    and first two heading levels decide: "terms" means terms of service,
    "privacy" a privacy policy, whichever appears first when both occur,
    and neither means some other legal document.

    Returns (category, matched seeds).
    """
    library = library or LegalSeedLibrary()
    matched, seeds = has_legal_attributes(text, library)
    if not matched:
        return UNRELATED, ()
    joined = " | ".join(headings).lower()
    terms_pos = joined.find("terms")
    privacy_pos = joined.find("privacy")
    if terms_pos < 0 and privacy_pos < 0:
        return OTHER_LEGAL, seeds
    if privacy_pos >= 0 and (terms_pos < 0 or privacy_pos < terms_pos):
        return PRIVACY_POLICY, seeds
    return TERMS_OF_SERVICE, seeds
