"""Store-category assignment and country/region detection.

Every plugin gets exactly one of the 21 store categories. Scoring is
pluggable: the shipped default is a deterministic keyword scorer, and an
HTTP client slot allows delegating to an external zero-shot model service
without changing any pipeline plumbing.
"""

from __future__ import annotations

import json
import re
from importlib import resources
from typing import Optional, Protocol

from .errors import EmptyDescription, ScorerError, TransportError

CATEGORIES = (
    "Audio & Music",
    "Books",
    "Business",
    "Career",
    "Diagram",
    "Crypto",
    "Data & Research",
    "Developer & Code",
    "Document",
    "Education",
    "Entertainment",
    "Finance",
    "Health",
    "Image & Video",
    "Law",
    "News",
    "Plugin Tips",
    "Shopping",
    "Lifestyle",
    "Tools",
    "Weather",
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class CategoryScorer(Protocol):
    def scores(self, description: str) -> dict:
        """Per-label score in [0, 1] for every label in CATEGORIES."""
        ...


def _tokens(text: str) -> list:
    return _TOKEN_RE.findall(text.lower())


def _data_text(filename: str) -> str:
    return resources.files("pluginaudit.data").joinpath(filename).read_text("utf-8")


def _parse_table(text: str) -> list:
    rows = []
    for line in text.splitlines():
        line = line.rstrip()
        if not line or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            continue
        rows.append(parts)
    return rows


class LexicalScorer:
    """Counts weighted keyword-phrase hits per category.

    Scores are each label's share of the total weighted hits, so they lie
    in [0, 1] and the argmax is invariant under uniform scaling.
    """

    def __init__(self, table: Optional[dict] = None):
        self.table = table if table is not None else load_keyword_table()

    def scores(self, description: str) -> dict:
        tokens = _tokens(description)
        raw = {label: 0.0 for label in CATEGORIES}
        for label, entries in self.table.items():
            total = 0.0
            for phrase_tokens, weight in entries:
                total += weight * _count_phrase(tokens, phrase_tokens)
            raw[label] = total
        grand = sum(raw.values())
        if grand <= 0:
            return {label: 0.0 for label in CATEGORIES}
        return {label: value / grand for label, value in raw.items()}


def _count_phrase(tokens, phrase_tokens) -> int:
    n = len(phrase_tokens)
    if n == 0 or n > len(tokens):
        return 0
    return sum(1 for i in range(len(tokens) - n + 1) if tokens[i:i + n] == phrase_tokens)


def load_keyword_table(path=None) -> dict:
    """Keyword table mapping label -> [(phrase tokens, weight), ...]."""
    if path is None:
        text = _data_text("category_keywords.txt")
    else:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    table: dict = {label: [] for label in CATEGORIES}
    for parts in _parse_table(text):
        label = parts[0]
        if label not in table:
            continue
        weight = 1.0
        if len(parts) >= 3:
            try:
                weight = float(parts[2])
            except ValueError:
                weight = 1.0
        table[label].append((_tokens(parts[1]), weight))
    return table


class HttpScorerClient:
    """Client for an external text-in/scores-out scorer service.

    One request per classification: POST {"text": ...} to the service URL,
    expecting {"scores": {label: value}} covering every category.
    """

    def __init__(self, url: str, transport, timeout: float = 30.0):
        self.url = url
        self.transport = transport
        self.timeout = timeout

    def scores(self, description: str) -> dict:
        payload = json.dumps({"text": description})
        try:
            reply = self.transport.request(
                "POST",
                self.url,
                headers={"Content-Type": "application/json"},
                body=payload,
                timeout=self.timeout,
            )
        except TransportError as exc:
            raise ScorerError(f"scorer service unreachable: {exc}") from exc
        if not 200 <= reply.status < 300:
            raise ScorerError(f"scorer service returned HTTP {reply.status}")
        try:
            data = json.loads(reply.body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ScorerError(f"scorer service returned non-JSON body: {exc}") from exc
        raw = data.get("scores")
        if not isinstance(raw, dict):
            raise ScorerError("scorer response missing 'scores' object")
        missing = [label for label in CATEGORIES if label not in raw]
        if missing:
            raise ScorerError(f"scorer response lacks labels: {missing}")
        return {label: float(raw[label]) for label in CATEGORIES}


def classify_category(description: str, scorer: Optional[CategoryScorer] = None):
    """(label, score) with the highest-scoring category.

    Ties break on the alphabetically first label; a description scoring
    zero everywhere lands on the alphabetically lowest label with score 0,
    which callers should surface as unclassified.
    """
    if not description or not description.strip():
        raise EmptyDescription("cannot classify an empty description")
    scorer = scorer or LexicalScorer()
    scores = scorer.scores(description)
    best = max(sorted(scores), key=lambda label: scores[label])
    return best, scores[best]


def load_gazetteer(path=None) -> dict:
    """Gazetteer mapping variant (lowercased) -> canonical region."""
    if path is None:
        text = _data_text("region_gazetteer.txt")
    else:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    gazetteer: dict = {}
    for parts in _parse_table(text):
        canonical, variant = parts[0], parts[1]
        gazetteer[variant.lower()] = canonical
    return gazetteer


def detect_regions(text: str, gazetteer: Optional[dict] = None) -> list:
    """Sorted canonical regions whose variants occur as whole words."""
    if gazetteer is None:
        gazetteer = load_gazetteer()
    found = set()
    lowered = text.lower()
    for variant, canonical in gazetteer.items():
        pattern = r"(?<![a-z0-9])" + re.escape(variant) + r"(?![a-z0-9])"
        if re.search(pattern, lowered):
            found.add(canonical)
    return sorted(found)
