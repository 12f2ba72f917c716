"""HTTP transport with per-host politeness and loopback host resolution.

The audit layers never talk to ``requests`` directly; they go through a
small transport interface so tests can substitute scripted transports and
fixture audits can resolve synthetic hostnames to a local server.
"""

from __future__ import annotations

import contextlib
import threading
import time
from dataclasses import dataclass, field
from typing import Optional
from urllib.parse import urlsplit, urlunsplit

import requests

from .errors import TransportError

DEFAULT_USER_AGENT = "pluginaudit/0.1"


@dataclass(frozen=True)
class FetchPolicy:
    """Retry and politeness settings for all outbound requests."""

    timeout: float = 15.0
    attempts: int = 3
    per_host_interval: float = 1.0
    user_agent: str = DEFAULT_USER_AGENT
    backoff_initial: float = 1.0

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.per_host_interval < 0:
            raise ValueError("per_host_interval must be >= 0")

    def backoff(self, failed_attempts: int) -> float:
        """Sleep before the next try after ``failed_attempts`` failures."""
        return self.backoff_initial * (2 ** (failed_attempts - 1))


@dataclass(frozen=True)
class TransportReply:
    status: int
    body: bytes = b""
    headers: dict = field(default_factory=dict)


class HostRateLimiter:
    """Serializes same-host requests and spaces them by ``interval``.

    A request runs inside ``hold(host)``; the next request to that host may
    start only once the previous one has completed plus the interval. The
    pause is anchored on completion, so even spacing measured at the server
    can never dip below the interval.
    """

    def __init__(self, interval: float):
        self.interval = interval
        self._registry_lock = threading.Lock()
        self._host_locks: dict = {}
        self._last_done: dict = {}

    @contextlib.contextmanager
    def hold(self, host: str):
        if self.interval <= 0:
            yield
            return
        with self._registry_lock:
            lock = self._host_locks.setdefault(host, threading.Lock())
        with lock:
            ready = self._last_done.get(host)
            if ready is not None:
                delay = ready + self.interval - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            try:
                yield
            finally:
                self._last_done[host] = time.monotonic()


class RequestsTransport:
    """requests-backed transport.

    ``resolve`` maps hostnames to "ip:port" targets (key "*" matches any
    host); a resolved request connects to the target while keeping the
    original Host header, which is how fixture audits reach a single local
    server under many synthetic hostnames. ``proxies`` optionally rotates
    outbound proxies per probe vantage.
    """

    def __init__(self, user_agent: str = DEFAULT_USER_AGENT, resolve: Optional[dict] = None,
                 proxies: Optional[list] = None):
        self.user_agent = user_agent
        self.resolve = dict(resolve or {})
        self.proxies = list(proxies or [])
        self._local = threading.local()

    def _session(self) -> requests.Session:
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            self._local.session = session
        return session

    def _rewrite(self, url: str, headers: dict) -> str:
        parts = urlsplit(url)
        host = parts.hostname or ""
        target = self.resolve.get(host) or self.resolve.get("*")
        if not target:
            return url
        headers.setdefault("Host", parts.netloc)
        return urlunsplit((parts.scheme, target, parts.path, parts.query, parts.fragment))

    def request(self, method: str, url: str, *, headers: Optional[dict] = None,
                body: Optional[str] = None, timeout: float = 15.0,
                vantage: int = 0) -> TransportReply:
        send_headers = {"User-Agent": self.user_agent}
        if headers:
            send_headers.update(headers)
        request_url = self._rewrite(url, send_headers)
        proxies = None
        if self.proxies:
            proxy = self.proxies[vantage % len(self.proxies)]
            proxies = {"http": proxy, "https": proxy}
        try:
            response = self._session().request(
                method,
                request_url,
                headers=send_headers,
                data=body.encode("utf-8") if isinstance(body, str) else body,
                timeout=timeout,
                allow_redirects=False,
                proxies=proxies,
            )
        except requests.Timeout as exc:
            raise TransportError("timeout", str(exc)) from exc
        except requests.ConnectionError as exc:
            raise TransportError("connection", str(exc)) from exc
        except requests.RequestException as exc:
            raise TransportError("error", str(exc)) from exc
        return TransportReply(
            status=response.status_code,
            body=response.content or b"",
            headers=dict(response.headers),
        )


def host_of(url: str) -> str:
    return urlsplit(url).hostname or ""


def polite_request(transport, limiter: Optional[HostRateLimiter], policy: FetchPolicy,
                   method: str, url: str, *, headers: Optional[dict] = None,
                   body: Optional[str] = None, vantage: int = 0) -> TransportReply:
    """Single rate-limited request; transport failures propagate."""
    guard = limiter.hold(host_of(url)) if limiter is not None else contextlib.nullcontext()
    with guard:
        return transport.request(
            method, url, headers=headers, body=body, timeout=policy.timeout, vantage=vantage
        )


def fetch_with_retries(transport, limiter: Optional[HostRateLimiter], policy: FetchPolicy,
                       url: str, *, headers: Optional[dict] = None):
    """GET ``url`` retrying transport failures and 5xx up to policy.attempts.

    Returns (reply, failure_reason): on success ``reply`` is the terminal
    TransportReply (any status < 500) and ``failure_reason`` is None; when
    attempts are exhausted ``reply`` is the last 5xx reply or None and
    ``failure_reason`` is "timeout", "connection", or "server_error".
    """
    last_reply = None
    failure = None
    for attempt in range(1, policy.attempts + 1):
        if attempt > 1:
            time.sleep(policy.backoff(attempt - 1))
        try:
            reply = polite_request(transport, limiter, policy, "GET", url, headers=headers)
        except TransportError as exc:
            failure = exc.reason if exc.reason in ("timeout", "connection") else "connection"
            last_reply = None
            continue
        if reply.status >= 500:
            last_reply = reply
            failure = "server_error"
            continue
        return reply, None
    return last_reply, failure
