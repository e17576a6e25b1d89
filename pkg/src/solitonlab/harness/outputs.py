from __future__ import annotations

import json
import math
from pathlib import Path
from types import TracebackType
from typing import Any, Iterable, Optional, TextIO

import numpy as np


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.floating, float)):
        number = float(value)
        return number if math.isfinite(number) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def dumps(payload: Any, *, indent: Optional[int] = None) -> str:
    """JSON with numpy scalars unwrapped and non-finite numbers as null.

    Python's float repr round-trips exactly, which is at most 17 significant digits.
    """
    return json.dumps(_plain(payload), indent=indent, sort_keys=indent is not None)


class JsonLinesWriter:
    """Append-only record stream, flushed after every record."""

    def __init__(self, path: Path) -> None:
        self.path = path
        self._handle: Optional[TextIO] = None
        self.count = 0

    def __enter__(self) -> "JsonLinesWriter":
        self._handle = self.path.open("a", encoding="utf-8")
        return self

    def __exit__(
        self,
        exc_type: Optional[type[BaseException]],
        exc: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def write(self, record: dict[str, Any]) -> None:
        if self._handle is None:
            raise RuntimeError("stream is not open")
        self._handle.write(dumps(record) + "\n")
        self._handle.flush()
        self.count += 1

    def extend(self, records: Iterable[dict[str, Any]]) -> None:
        for record in records:
            self.write(record)


class RunDirectory:
    """Artifacts of one run under ``<root>/<name>-<run_id[:12]>/``."""

    def __init__(self, root: str | Path, name: str, run_id: str) -> None:
        self.path = Path(root) / f"{name}-{run_id[:12]}"
        self.written: list[Path] = []

    def prepare(self) -> "RunDirectory":
        self.path.mkdir(parents=True, exist_ok=True)
        stream = self.path / "stream.jsonl"
        if stream.exists():
            stream.unlink()
        return self

    def file(self, name: str) -> Path:
        return self.path / name

    def _track(self, target: Path) -> Path:
        if target not in self.written:
            self.written.append(target)
        return target

    def write_text(self, name: str, text: str) -> Path:
        target = self.file(name)
        target.write_text(text, encoding="utf-8")
        return self._track(target)

    def write_json(self, name: str, payload: Any) -> Path:
        return self.write_text(name, dumps(payload, indent=2) + "\n")

    def stream(self) -> JsonLinesWriter:
        return JsonLinesWriter(self._track(self.file("stream.jsonl")))

    def record(self, path: Path) -> Path:
        return self._track(path)
