"""Small shared helpers."""

from __future__ import annotations

import json
from datetime import datetime, timezone


def now_iso() -> str:
    """Current UTC time as a fixed-width ISO-8601 string (lexicographically sortable)."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def canon_json(obj) -> bytes:
    """Compact UTF-8 JSON with insertion-ordered keys; the canonical byte form."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True).encode("ascii")
