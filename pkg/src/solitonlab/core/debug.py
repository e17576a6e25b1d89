"""In-memory run traces behind ``/debug/trace/{run_id}``.

A trace is opened when a run starts, collects one entry per pipeline stage
and receives the run summary at the end. Only the most recent runs are kept.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from threading import Lock
from typing import Any, Dict, List, Optional


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class DebugTrace:
    run_id: str
    stages: List[Dict[str, Any]] = field(default_factory=list)
    payload: Dict[str, Any] = field(default_factory=dict)
    created_at: str = field(default_factory=_now)
    finished_at: Optional[str] = None


_LOCK = Lock()
_TRACES: Dict[str, DebugTrace] = {}
_MAX_TRACES = 200


def _evict() -> None:
    while len(_TRACES) > _MAX_TRACES:
        _TRACES.pop(next(iter(_TRACES)))


def start_trace(run_id: str) -> None:
    """Open a fresh trace; a rerun of the same configuration replaces the old one."""
    with _LOCK:
        _TRACES.pop(run_id, None)
        _TRACES[run_id] = DebugTrace(run_id=run_id)
        _evict()


def record_stage(run_id: str, stage: str, status: str, seconds: float) -> None:
    with _LOCK:
        trace = _TRACES.setdefault(run_id, DebugTrace(run_id=run_id))
        trace.stages.append({"stage": stage, "status": status, "seconds": round(seconds, 6)})
        _evict()


def record_trace(run_id: str, payload: Dict[str, Any]) -> None:
    with _LOCK:
        trace = _TRACES.setdefault(run_id, DebugTrace(run_id=run_id))
        trace.payload.update(payload)
        trace.finished_at = _now()
        _evict()


def get_trace(run_id: str) -> Optional[Dict[str, Any]]:
    with _LOCK:
        trace = _TRACES.get(run_id)
        if not trace:
            return None
        return {
            "run_id": trace.run_id,
            "created_at": trace.created_at,
            "finished_at": trace.finished_at,
            "stages": list(trace.stages),
            **trace.payload,
        }
