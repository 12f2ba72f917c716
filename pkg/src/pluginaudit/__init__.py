"""Security assessment toolkit for LLM plugin ecosystems.

Audits a store of plugin listings in three layers: manifest file leakage,
listing/manifest metadata consistency, and external API authorization.
Ships a deterministic synthetic store so every verdict can be verified
against ground truth at desk scale.
"""

__version__ = "0.1.0"

from .config import AuditConfig
from .consistency import ConsistencyThresholds, ConsistencyVerdict, check_consistency
from .discovery import FetchStatus, ManifestFetchOutcome, derive_manifest_urls, fetch_manifest
from .legal import LegalDocVerdict, LegalSeedLibrary
from .models import (
    ApiEndpoint,
    ApiSurface,
    ManifestData,
    ManifestFieldPolicy,
    PluginRecord,
    StoreListing,
    parse_api_document,
    parse_manifest,
)
from .pipeline import audit_plugin, audit_store
from .probe import (
    InvalidResponseLexicon,
    ProbeRequest,
    ProbeResponse,
    ResponseKind,
    classify_response,
)
from .report import AssessmentRun, ExposureReport, diff_runs, ingest_run, render
from .transport import FetchPolicy, HostRateLimiter, RequestsTransport

__all__ = [
    "ApiEndpoint",
    "ApiSurface",
    "AssessmentRun",
    "AuditConfig",
    "ConsistencyThresholds",
    "ConsistencyVerdict",
    "ExposureReport",
    "FetchPolicy",
    "FetchStatus",
    "HostRateLimiter",
    "InvalidResponseLexicon",
    "LegalDocVerdict",
    "LegalSeedLibrary",
    "ManifestData",
    "ManifestFetchOutcome",
    "ManifestFieldPolicy",
    "PluginRecord",
    "ProbeRequest",
    "ProbeResponse",
    "RequestsTransport",
    "ResponseKind",
    "StoreListing",
    "audit_plugin",
    "audit_store",
    "check_consistency",
    "classify_response",
    "derive_manifest_urls",
    "diff_runs",
    "fetch_manifest",
    "ingest_run",
    "parse_api_document",
    "parse_manifest",
    "render",
]
