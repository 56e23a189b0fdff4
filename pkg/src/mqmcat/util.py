"""Small shared helpers: ids and timestamps."""
from __future__ import annotations

import uuid
from datetime import datetime, timezone


def new_id() -> str:
    return uuid.uuid4().hex


def now_rfc3339() -> str:
    """Current UTC time as an RFC 3339 string (second precision)."""
    return datetime.now(timezone.utc).isoformat(timespec="seconds")
