"""Domain types for store listings, plugin manifests, and API surfaces.

A plugin is described from two sides: the listing a user sees in the store
and the manifest document its developer hosts at
``/.well-known/ai-plugin.json``. The manifest in turn points at an API
description from which the probeable endpoint surface is parsed. All types
here are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional
from urllib.parse import urljoin

import yaml

from .errors import MalformedDocument, MissingField, UnsupportedVersion

SCHEMA_TYPES = ("string", "integer", "number", "boolean", "array", "object")
PARAM_LOCATIONS = ("path", "query", "header", "body")

_HTTP_METHODS = ("get", "put", "post", "delete", "options", "head", "patch", "trace")

# Manifest fields that must stay system-facing under the default policy:
# the API location, the auth settings, and the platform verification token.
DEFAULT_HIDDEN_FIELDS = frozenset({"api_url", "auth", "verification_token"})
DEFAULT_DISCLOSABLE_FIELDS = frozenset(
    {"name", "description", "legal_info_url", "contact_email", "logo_url"}
)


@dataclass(frozen=True)
class StoreListing:
    """User-facing metadata of one plugin as shown in the store."""

    plugin_id: str
    name: str
    legal_url: Optional[str] = None
    description: str = ""
    contact_email: Optional[str] = None
    category: Optional[str] = None
    logo_url: Optional[str] = None

    def __post_init__(self):
        if not self.plugin_id:
            raise ValueError("plugin_id must be non-empty")


@dataclass(frozen=True)
class ManifestData:
    """System-facing plugin configuration parsed from a hosted manifest.

    ``multi_auth`` is False exactly when the declared auth type is the
    literal "none"; a verification token may only be carried when
    ``multi_auth`` is True, which the constructor enforces.
    """

    name: str
    legal_url: Optional[str]
    api_url: str
    multi_auth: bool
    verification_token: Optional[str]
    description: str
    raw_fields: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.multi_auth and self.verification_token is not None:
            raise ValueError("verification token requires multi_auth")


@dataclass(frozen=True)
class ManifestFieldPolicy:
    """Partition of manifest fields into disclosable and hidden sets.

    ``disclosable`` must be a subset of ``required`` and ``hidden`` must be
    exactly the remainder.
    """

    required: frozenset
    disclosable: frozenset
    hidden: frozenset

    def __post_init__(self):
        if not self.disclosable <= self.required:
            raise ValueError("disclosable fields must be a subset of required")
        if self.hidden != self.required - self.disclosable:
            raise ValueError("hidden must equal required minus disclosable")

    @classmethod
    def from_required(cls, required, disclosable) -> "ManifestFieldPolicy":
        required = frozenset(required)
        disclosable = frozenset(disclosable)
        return cls(required=required, disclosable=disclosable, hidden=required - disclosable)


DEFAULT_FIELD_POLICY = ManifestFieldPolicy.from_required(
    required=DEFAULT_DISCLOSABLE_FIELDS | DEFAULT_HIDDEN_FIELDS,
    disclosable=DEFAULT_DISCLOSABLE_FIELDS,
)


@dataclass(frozen=True)
class ApiParameter:
    name: str
    location: str  # one of PARAM_LOCATIONS
    schema_type: str
    required: bool = False


@dataclass(frozen=True)
class ApiEndpoint:
    """One (path, method) pair with its declared parameters."""

    path: str
    method: str
    parameters: tuple = ()
    auth_hint: Optional[str] = None

    def __post_init__(self):
        placeholders = set(re.findall(r"\{([^{}]+)\}", self.path))
        for param in self.parameters:
            if param.location == "path" and param.name not in placeholders:
                raise ValueError(
                    f"path parameter {param.name!r} missing from template {self.path!r}"
                )

    @property
    def key(self) -> str:
        return f"{self.method} {self.path}"


@dataclass(frozen=True)
class ApiSurface:
    """All endpoints discovered from one API description document.

    ``responses`` is filled in by the probing layer, keyed by endpoint key.
    """

    source_url: str
    endpoints: tuple = ()
    base_url: str = ""
    responses: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PluginRecord:
    """Composite view of one plugin as it moves through the audit."""

    listing: StoreListing
    manifest: Optional[ManifestData] = None
    surface: Optional[ApiSurface] = None

    def __post_init__(self):
        if self.surface is not None and self.manifest is None:
            raise ValueError("an API surface is only reachable through a manifest")


def _decode_text(raw_text) -> str:
    if isinstance(raw_text, bytes):
        try:
            return raw_text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"not valid UTF-8: {exc}") from exc
    return raw_text


def _first_token(container: Any) -> Optional[str]:
    """First value in a verification-token container, by sorted key."""
    if not isinstance(container, dict) or not container:
        return None
    for key in sorted(str(k) for k in container):
        value = container.get(key)
        if isinstance(value, str) and value:
            return value
    return None


def parse_manifest(raw_text) -> ManifestData:
    """Parse a plugin manifest document into :class:`ManifestData`.

    Accepts str or bytes. Raises :class:`MalformedDocument` when the input
    is not a JSON object and :class:`MissingField` when it lacks a plugin
    name or an API document URL. Unknown fields are preserved verbatim in
    ``raw_fields``.
    """
    text = _decode_text(raw_text)
    if not text.strip():
        raise MalformedDocument("empty document")
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, RecursionError) as exc:
        raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedDocument("manifest must be a JSON object")

    name = data.get("name_for_human") or data.get("name_for_model")
    if not isinstance(name, str) or not name:
        raise MissingField("manifest has no plugin name")

    api = data.get("api")
    api_url = api.get("url") if isinstance(api, dict) else None
    if not isinstance(api_url, str) or not api_url:
        raise MissingField("manifest has no api.url")

    auth = data.get("auth")
    auth_type = auth.get("type") if isinstance(auth, dict) else None
    multi_auth = auth_type != "none"

    token = None
    if multi_auth and isinstance(auth, dict):
        token = _first_token(auth.get("verification_tokens"))

    description = data.get("description_for_human") or data.get("description_for_model")
    legal_url = data.get("legal_info_url")

    return ManifestData(
        name=name,
        legal_url=legal_url if isinstance(legal_url, str) and legal_url else None,
        api_url=api_url,
        multi_auth=multi_auth,
        verification_token=token,
        description=description if isinstance(description, str) else "",
        raw_fields=data,
    )


def check_field_policy(manifest: ManifestData, policy: ManifestFieldPolicy) -> list:
    """Return the hidden-set fields that are populated in ``manifest``.

    These are the fields an externally retrievable manifest would reveal
    even though the store contract keeps them system-facing.
    """
    violations = []
    for name in sorted(policy.hidden):
        if name == "api_url":
            populated = bool(manifest.api_url)
        elif name == "auth":
            populated = "auth" in manifest.raw_fields
        elif name == "verification_token":
            populated = manifest.verification_token is not None
        else:
            populated = _lookup_path(manifest.raw_fields, name) is not None
        if populated:
            violations.append(name)
    return violations


def _lookup_path(data: dict, dotted: str):
    node: Any = data
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


# --- API description parsing -------------------------------------------------

def _load_structured(text: str):
    try:
        return json.loads(text)
    except (json.JSONDecodeError, RecursionError):
        pass
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise MalformedDocument(f"neither JSON nor YAML: {exc}") from exc


def _resolve_ref(schema, components: dict, depth: int):
    """Follow a local $ref up to ``depth`` levels; deeper refs degrade.

    Returns (schema, levels consumed) so nested resolution can share one
    overall budget.
    """
    used = 0
    while isinstance(schema, dict) and "$ref" in schema:
        if used >= depth:
            return {"type": "object"}, used
        ref = schema["$ref"]
        if not isinstance(ref, str) or not ref.startswith("#/components/schemas/"):
            return {"type": "object"}, used
        target = ref.rsplit("/", 1)[-1]
        schema = components.get(target)
        used += 1
    return (schema if isinstance(schema, dict) else {}), used


def _schema_type(schema, components: dict, depth: int = 1) -> str:
    schema, _ = _resolve_ref(schema, components, depth)
    declared = schema.get("type")
    if isinstance(declared, str):
        return declared
    if "properties" in schema:
        return "object"
    if "items" in schema:
        return "array"
    return "string"


def _collect_parameters(raw_params, components: dict) -> list:
    params = []
    for raw in raw_params:
        if not isinstance(raw, dict):
            continue
        name = raw.get("name")
        location = raw.get("in")
        if not isinstance(name, str) or location not in ("path", "query", "header"):
            continue
        params.append(
            ApiParameter(
                name=name,
                location=location,
                schema_type=_schema_type(raw.get("schema") or {}, components),
                required=bool(raw.get("required", False)),
            )
        )
    return params


def _body_parameters(operation: dict, components: dict) -> list:
    body = operation.get("requestBody")
    if not isinstance(body, dict):
        return []
    content = body.get("content")
    if not isinstance(content, dict) or not content:
        return []
    media = content.get("application/json")
    if not isinstance(media, dict):
        # Fall back to the first declared media type.
        media = next((v for v in content.values() if isinstance(v, dict)), None)
    if media is None:
        return []
    schema, used = _resolve_ref(media.get("schema") or {}, components, depth=1)
    remaining = 1 - used
    body_required = bool(body.get("required", False))
    properties = schema.get("properties")
    if not isinstance(properties, dict):
        # Non-object body collapses to a single unnamed payload parameter.
        return [
            ApiParameter(
                name="body",
                location="body",
                schema_type=_schema_type(schema, components, remaining),
                required=body_required,
            )
        ]
    required_names = set(schema.get("required") or [])
    params = []
    for prop_name, prop_schema in properties.items():
        params.append(
            ApiParameter(
                name=str(prop_name),
                location="body",
                schema_type=_schema_type(prop_schema or {}, components, remaining),
                required=body_required and str(prop_name) in required_names,
            )
        )
    return params


def _auth_hint(operation: dict, root: dict) -> Optional[str]:
    security = operation.get("security", root.get("security"))
    if isinstance(security, list) and security:
        first = security[0]
        if isinstance(first, dict) and first:
            return sorted(first)[0]
    return None


def parse_api_document(raw_text, base_url: str) -> ApiSurface:
    """Parse a JSON or YAML API description into an :class:`ApiSurface`.

    Supports the 3.x subset used by plugin API documents: paths, methods,
    path/query/header parameters, and request bodies with flat object
    schemas. Relative server paths are resolved against ``base_url``.
    Endpoints are ordered lexicographically by (path, method).
    """
    text = _decode_text(raw_text)
    if not text.strip():
        raise MalformedDocument("empty document")
    data = _load_structured(text)
    if not isinstance(data, dict):
        raise MalformedDocument("API description must be a mapping")

    if "swagger" in data:
        raise UnsupportedVersion(f"swagger {data.get('swagger')!r} is not supported")
    version = data.get("openapi")
    if version is not None and not str(version).startswith("3."):
        raise UnsupportedVersion(f"openapi {version!r} is not supported")
    if version is None and "paths" not in data:
        raise MalformedDocument("document declares no API version and no paths")

    components = {}
    raw_components = data.get("components")
    if isinstance(raw_components, dict) and isinstance(raw_components.get("schemas"), dict):
        components = raw_components["schemas"]

    servers = data.get("servers")
    server_url = ""
    if isinstance(servers, list) and servers and isinstance(servers[0], dict):
        server_url = str(servers[0].get("url") or "")
    resolved_base = urljoin(base_url, server_url) if server_url else base_url

    endpoints = []
    paths = data.get("paths") or {}
    if not isinstance(paths, dict):
        raise MalformedDocument("paths must be a mapping")
    for path, item in paths.items():
        if not isinstance(item, dict):
            continue
        shared = item.get("parameters")
        shared_params = _collect_parameters(shared, components) if isinstance(shared, list) else []
        for method in _HTTP_METHODS:
            operation = item.get(method)
            if not isinstance(operation, dict):
                continue
            op_raw = operation.get("parameters")
            params = list(shared_params)
            if isinstance(op_raw, list):
                params.extend(_collect_parameters(op_raw, components))
            params.extend(_body_parameters(operation, components))
            # Keep the invariant: path params must appear in the template.
            placeholders = set(re.findall(r"\{([^{}]+)\}", str(path)))
            params = [
                p for p in params if p.location != "path" or p.name in placeholders
            ]
            endpoints.append(
                ApiEndpoint(
                    path=str(path),
                    method=method.upper(),
                    parameters=tuple(params),
                    auth_hint=_auth_hint(operation, data),
                )
            )

    endpoints.sort(key=lambda e: (e.path, e.method))
    return ApiSurface(source_url=base_url, endpoints=tuple(endpoints), base_url=resolved_base)
