"""Structured debug log written when COJOIN_DEBUG_LOG is set"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime
from typing import Any, Optional

DEBUG_LOG_ENV = "COJOIN_DEBUG_LOG"

_lock = threading.Lock()


def debug_log_path() -> Optional[str]:
    """Return the debug log path, or None when logging is off"""
    return os.environ.get(DEBUG_LOG_ENV) or None


def log_event(category: str, data: dict[str, Any]) -> None:
    """Append one JSON record to the debug log.

    Args:
        category: Short event name (e.g. "plan_search", "phase")
        data: JSON-serializable payload
    """
    path = debug_log_path()
    if not path:
        return
    record = {"time": datetime.now().isoformat(), "category": category, **data}
    try:
        with _lock, open(path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record, default=_to_jsonable))
            f.write("\n")
    except Exception:
        pass  # Silently ignore logging errors


def _to_jsonable(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    return str(value)
