"""API-authorized testing layer.

Builds type-conforming requests for every discovered endpoint, sends them
from outside the platform (several time-spaced attempts standing in for
independent vantage points), classifies what comes back, and evaluates
the three broken-access-control exposures.
"""

from __future__ import annotations

import contextlib
import dataclasses
import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional
from urllib.parse import quote, urlencode

from .errors import MissingSurface, TransportError, UnsatisfiableParameter
from .models import ApiEndpoint, PluginRecord
from .transport import FetchPolicy, HostRateLimiter, host_of

BODY_EXCERPT_BYTES = 4096

# Phrases marking a transport-successful response as carrying no data.
# The first three are the canonical examples; the rest are extensions.
DEFAULT_INVALID_PHRASES = (
    "service unavailable",
    "server error",
    "no requested privileges",
    "unauthorized",
    "forbidden",
    "invalid api key",
    "not authenticated",
)

# Subset of lexicon phrases that indicate a rejected credential; consulted
# only for 4xx statuses the code alone does not decide.
DEFAULT_AUTH_PHRASES = (
    "unauthorized",
    "forbidden",
    "invalid api key",
    "not authenticated",
    "no requested privileges",
)


class ResponseKind(str, Enum):
    VALID = "Valid"
    INVALID_MEANINGLESS = "InvalidMeaningless"
    UNAUTHORIZED = "Unauthorized"
    CLIENT_ERROR = "ClientError"
    RATE_LIMITED = "RateLimited"
    NETWORK_ERROR = "NetworkError"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class InvalidResponseLexicon:
    patterns: tuple = DEFAULT_INVALID_PHRASES
    auth_patterns: tuple = DEFAULT_AUTH_PHRASES

    def __post_init__(self):
        if not self.patterns:
            raise ValueError("lexicon requires at least one pattern")


@dataclass(frozen=True)
class ValueSynthesis:
    """Placeholder values substituted for required parameters."""

    string: str = "test"
    integer: int = 1
    number: float = 1.0
    boolean: bool = True

    def placeholder(self, schema_type: str):
        if schema_type == "string":
            return self.string
        if schema_type == "integer":
            return self.integer
        if schema_type == "number":
            return self.number
        if schema_type == "boolean":
            return self.boolean
        if schema_type == "array":
            return [self.string]
        if schema_type == "object":
            return {}
        raise UnsatisfiableParameter(f"no placeholder for schema type {schema_type!r}")


@dataclass(frozen=True)
class ProbeRequest:
    endpoint: ApiEndpoint
    url: str
    method: str
    headers: dict = field(default_factory=dict)
    body: Optional[str] = None
    token_attached: bool = False


@dataclass(frozen=True)
class ProbeResponse:
    http_status: Optional[int]
    body_excerpt: str
    latency: float
    vantage: int
    classification: ResponseKind


@dataclass(frozen=True)
class EndpointProbes:
    """Bare and (optionally) token-bearing probe series for one endpoint."""

    endpoint_key: str
    bare_kind: ResponseKind
    bare_responses: tuple = ()
    token_kind: Optional[ResponseKind] = None
    token_responses: tuple = ()


def _query_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, dict)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def build_request(endpoint: ApiEndpoint, base_url: str,
                  synthesis: Optional[ValueSynthesis] = None) -> ProbeRequest:
    """Substitute placeholders for every required parameter of ``endpoint``.

    Path templates are fully substituted, required query parameters are
    appended in declaration order, header parameters become headers, and
    body parameters form a flat JSON object. Optional parameters are
    omitted.
    """
    synthesis = synthesis or ValueSynthesis()
    path = endpoint.path
    query_parts = []
    headers: dict = {}
    body_fields: dict = {}

    for param in endpoint.parameters:
        if param.location == "path":
            value = synthesis.placeholder(param.schema_type)
            path = path.replace("{%s}" % param.name, quote(_query_value(value), safe=""))
            continue
        if not param.required:
            continue
        value = synthesis.placeholder(param.schema_type)
        if param.location == "query":
            query_parts.append((param.name, _query_value(value)))
        elif param.location == "header":
            headers[param.name] = _query_value(value)
        elif param.location == "body":
            body_fields[param.name] = value
        else:
            raise UnsatisfiableParameter(f"unsupported parameter location {param.location!r}")

    url = base_url.rstrip("/") + path
    if query_parts:
        url += "?" + urlencode(query_parts)
    body = None
    if body_fields:
        body = json.dumps(body_fields, separators=(",", ":"), sort_keys=True)
        headers.setdefault("Content-Type", "application/json")
    return ProbeRequest(
        endpoint=endpoint, url=url, method=endpoint.method, headers=headers, body=body
    )


def attach_token(request: ProbeRequest, token: str) -> ProbeRequest:
    """Copy of ``request`` with a bearer authorization header attached."""
    if not token:
        raise ValueError("token must be non-empty")
    headers = dict(request.headers)
    headers["Authorization"] = f"Bearer {token}"
    return dataclasses.replace(request, headers=headers, token_attached=True)


def classify_response(http_status: Optional[int], body,
                      lexicon: Optional[InvalidResponseLexicon] = None) -> ResponseKind:
    """Map one (status, body) pair to a response class.

    Transport failures (no status) are NetworkError. Status codes decide
    first: 401/403 are Unauthorized, 429 RateLimited, 5xx meaningless.
    A 2xx response is Valid only when the body is non-empty and free of
    lexicon phrases; other 4xx bodies stating a credential problem are
    folded into Unauthorized, the rest are ClientError.
    """
    lexicon = lexicon or InvalidResponseLexicon()
    if http_status is None:
        return ResponseKind.NETWORK_ERROR
    if isinstance(body, bytes):
        body = body.decode("utf-8", errors="replace")
    lowered = (body or "").lower()

    if http_status in (401, 403):
        return ResponseKind.UNAUTHORIZED
    if http_status == 429:
        return ResponseKind.RATE_LIMITED
    if 200 <= http_status < 300:
        if not lowered.strip():
            return ResponseKind.INVALID_MEANINGLESS
        if any(p.lower() in lowered for p in lexicon.patterns):
            return ResponseKind.INVALID_MEANINGLESS
        return ResponseKind.VALID
    if http_status >= 500:
        return ResponseKind.INVALID_MEANINGLESS
    if 400 <= http_status < 500:
        if any(p.lower() in lowered for p in lexicon.auth_patterns):
            return ResponseKind.UNAUTHORIZED
        return ResponseKind.CLIENT_ERROR
    return ResponseKind.CLIENT_ERROR


def aggregate_kind(responses) -> ResponseKind:
    """Unanimous classification, or Unstable when attempts disagree."""
    kinds = {r.classification for r in responses}
    if len(kinds) == 1:
        return next(iter(kinds))
    return ResponseKind.UNSTABLE


def probe_endpoint(request: ProbeRequest, policy: FetchPolicy, transport, *,
                   limiter: Optional[HostRateLimiter] = None,
                   lexicon: Optional[InvalidResponseLexicon] = None) -> list:
    """Send ``request`` once per attempt and classify every response.

    Exactly ``policy.attempts`` requests are issued, each a separate
    vantage; failures are encoded per attempt, never raised.
    """
    lexicon = lexicon or InvalidResponseLexicon()
    host = host_of(request.url)
    responses = []
    for vantage in range(policy.attempts):
        guard = limiter.hold(host) if limiter is not None else contextlib.nullcontext()
        started = time.monotonic()
        with guard:
            try:
                reply = transport.request(
                    request.method,
                    request.url,
                    headers=request.headers,
                    body=request.body,
                    timeout=policy.timeout,
                    vantage=vantage,
                )
                status: Optional[int] = reply.status
                excerpt = reply.body[:BODY_EXCERPT_BYTES].decode("utf-8", errors="replace")
            except TransportError:
                status = None
                excerpt = ""
        responses.append(
            ProbeResponse(
                http_status=status,
                body_excerpt=excerpt,
                latency=time.monotonic() - started,
                vantage=vantage,
                classification=classify_response(status, excerpt, lexicon),
            )
        )
    return responses


def probe_eligible(endpoint: ApiEndpoint, aggressive: bool = False) -> bool:
    """Safety gate: only GET and parameter-free POST unless aggressive."""
    if aggressive:
        return True
    if endpoint.method == "GET":
        return True
    return endpoint.method == "POST" and not endpoint.parameters


def evaluate_exposures_345(record: PluginRecord, probes) -> dict:
    """Evaluate the broken-access-control exposures from probe aggregates.

    ``probes`` is an iterable of :class:`EndpointProbes`. A plugin with no
    extra authentication leaks when any endpoint answers validly without a
    token (exposure3); one that declares extra authentication leaks the
    same way (exposure4); and one that only answers once the manifest's
    leaked verification token is attached exhibits exposure5. At most one
    of the three can hold.
    """
    if record.manifest is None or record.surface is None:
        raise MissingSurface(f"no probeable surface for {record.listing.plugin_id}")
    probes = list(probes)
    multi_auth = record.manifest.multi_auth
    has_token = record.manifest.verification_token is not None

    bare_valid = any(p.bare_kind == ResponseKind.VALID for p in probes)
    token_valid = any(p.token_kind == ResponseKind.VALID for p in probes)

    return {
        "exposure3": (not multi_auth) and bare_valid,
        "exposure4": multi_auth and bare_valid,
        "exposure5": multi_auth and has_token and not bare_valid and token_valid,
    }
