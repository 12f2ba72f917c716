"""Store-snapshot ingestion.

A snapshot is one JSON record per line: {plugin_id, name, description,
legal_url, contact_email}. Ingestion validates, normalizes, and rejects
duplicate plugin ids; the persisted store is a canonical JSON list.
"""

from __future__ import annotations

import json
from pathlib import Path
from urllib.parse import urlsplit

from .errors import DuplicateId, MalformedSnapshot
from .models import StoreListing


def _listing_from_record(record: dict, line_no: int) -> StoreListing:
    plugin_id = record.get("plugin_id")
    if not isinstance(plugin_id, str) or not plugin_id:
        raise MalformedSnapshot(f"line {line_no}: missing plugin_id")
    name = record.get("name")
    if not isinstance(name, str):
        raise MalformedSnapshot(f"line {line_no}: missing name")
    legal_url = record.get("legal_url") or None
    if legal_url is not None:
        parts = urlsplit(legal_url)
        if parts.scheme not in ("http", "https") or not parts.hostname:
            raise MalformedSnapshot(
                f"line {line_no}: legal_url must be absolute http(s), got {legal_url!r}"
            )
    return StoreListing(
        plugin_id=plugin_id,
        name=name,
        description=record.get("description") or "",
        legal_url=legal_url,
        contact_email=record.get("contact_email") or None,
        category=record.get("category") or None,
        logo_url=record.get("logo_url") or None,
    )


def load_snapshot(path) -> list:
    """Parse a snapshot file into validated, deduplicated listings."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        raise MalformedSnapshot(f"{path}: empty snapshot")
    listings = []
    seen = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedSnapshot(f"line {line_no}: not JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise MalformedSnapshot(f"line {line_no}: record must be an object")
        listing = _listing_from_record(record, line_no)
        if listing.plugin_id in seen:
            raise DuplicateId(f"duplicate plugin_id {listing.plugin_id!r} at line {line_no}")
        seen.add(listing.plugin_id)
        listings.append(listing)
    return listings


def save_store(listings, path) -> None:
    records = [
        {
            "plugin_id": l.plugin_id,
            "name": l.name,
            "description": l.description,
            "legal_url": l.legal_url,
            "contact_email": l.contact_email,
            "category": l.category,
            "logo_url": l.logo_url,
        }
        for l in listings
    ]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(records, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_store(path) -> list:
    with open(path, encoding="utf-8") as handle:
        try:
            records = json.load(handle)
        except json.JSONDecodeError as exc:
            raise MalformedSnapshot(f"{path}: not a store file: {exc}") from exc
    if not isinstance(records, list):
        raise MalformedSnapshot(f"{path}: store must be a JSON list")
    return [
        StoreListing(
            plugin_id=r["plugin_id"],
            name=r.get("name") or "",
            description=r.get("description") or "",
            legal_url=r.get("legal_url"),
            contact_email=r.get("contact_email"),
            category=r.get("category"),
            logo_url=r.get("logo_url"),
        )
        for r in records
    ]
