"""Audit configuration: one file, one digest, comparable runs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .consistency import ConsistencyThresholds
from .discovery import DEFAULT_RELEVANCE_SEEDS, DEFAULT_SHARE_PLATFORM_HOSTS
from .errors import MalformedDocument
from .probe import DEFAULT_AUTH_PHRASES, DEFAULT_INVALID_PHRASES, InvalidResponseLexicon
from .transport import DEFAULT_USER_AGENT, FetchPolicy

PROXY_ENV_VAR = "PLUGINAUDIT_PROXIES"


@dataclass(frozen=True)
class AuditConfig:
    """Everything a run needs; hashes to a digest identifying comparable runs."""

    theta1: float = 0.85
    theta2: float = 0.8
    theta3: float = 1.0
    timeout: float = 15.0
    attempts: int = 3
    per_host_interval: float = 1.0
    backoff_initial: float = 1.0
    user_agent: str = DEFAULT_USER_AGENT
    workers: int = 8
    aggressive_methods: bool = False
    output_format: str = "json"
    share_platform_hosts: tuple = DEFAULT_SHARE_PLATFORM_HOSTS
    relevance_seeds: tuple = DEFAULT_RELEVANCE_SEEDS
    lexicon_patterns: tuple = DEFAULT_INVALID_PHRASES
    lexicon_path: Optional[str] = None
    seed_library_path: Optional[str] = None
    keyword_table_path: Optional[str] = None
    gazetteer_path: Optional[str] = None
    proxies: tuple = ()
    resolve: dict = field(default_factory=dict)

    def thresholds(self) -> ConsistencyThresholds:
        return ConsistencyThresholds(theta1=self.theta1, theta2=self.theta2, theta3=self.theta3)

    def fetch_policy(self) -> FetchPolicy:
        return FetchPolicy(
            timeout=self.timeout,
            attempts=self.attempts,
            per_host_interval=self.per_host_interval,
            user_agent=self.user_agent,
            backoff_initial=self.backoff_initial,
        )

    def lexicon(self) -> InvalidResponseLexicon:
        patterns = self.lexicon_patterns
        if self.lexicon_path:
            patterns = _read_lines(self.lexicon_path)
        return InvalidResponseLexicon(patterns=tuple(patterns), auth_patterns=DEFAULT_AUTH_PHRASES)

    def effective_proxies(self) -> tuple:
        env = os.environ.get(PROXY_ENV_VAR, "")
        if env.strip():
            return tuple(p.strip() for p in env.split(",") if p.strip())
        return tuple(self.proxies)

    def to_payload(self) -> dict:
        payload = dataclasses.asdict(self)
        for key, value in payload.items():
            if isinstance(value, tuple):
                payload[key] = list(value)
        return payload

    def digest(self) -> str:
        canonical = json.dumps(self.to_payload(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_payload(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path) -> "AuditConfig":
        with open(path, encoding="utf-8") as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as exc:
                raise MalformedDocument(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise MalformedDocument("config must be a JSON object")
        return cls.from_payload(data)

    @classmethod
    def from_payload(cls, data: dict) -> "AuditConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                continue
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)

    def replace(self, **overrides) -> "AuditConfig":
        return dataclasses.replace(self, **overrides)


def _read_lines(path) -> tuple:
    lines = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line and not line.startswith("#"):
                lines.append(line)
    return tuple(lines)
