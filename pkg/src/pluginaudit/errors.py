"""Exception types shared across the audit toolkit."""


class PluginAuditError(Exception):
    """Base class for all toolkit errors."""


class MalformedDocument(PluginAuditError):
    """Input text is not a structurally valid document of the expected kind."""


class MissingField(PluginAuditError):
    """Document parsed but lacks a field required to be the expected kind."""


class UnsupportedVersion(PluginAuditError):
    """API description declares a version outside the supported subset."""


class InvalidUrl(PluginAuditError):
    """String does not parse as an absolute http(s) URL."""


class UnsatisfiableParameter(PluginAuditError):
    """Endpoint parameter has a schema shape no placeholder can satisfy."""


class MissingSurface(PluginAuditError):
    """Exposure evaluation requested for a record without an API surface."""


class EmptyDescription(PluginAuditError):
    """Category classification requires a non-empty description."""


class ScorerError(PluginAuditError):
    """External category scorer returned an unusable response."""


class MalformedSnapshot(PluginAuditError):
    """Store snapshot file is empty or not line-delimited JSON records."""


class DuplicateId(PluginAuditError):
    """Store snapshot contains the same plugin_id more than once."""


class UnsatisfiableSpec(PluginAuditError):
    """Fixture spec counts violate their own consistency constraints."""


class PortUnavailable(PluginAuditError):
    """Fixture server could not bind the requested port."""


class IncomparableRuns(PluginAuditError):
    """Assessment runs with different config digests cannot be diffed."""


class TransportError(PluginAuditError):
    """HTTP transport failed before any response was received.

    ``reason`` is one of "timeout", "connection", or "error".
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)
