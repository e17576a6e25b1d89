"""Binary field snapshots.

Each record is a header of two little-endian int64 (n, d) and two float64
(half-extent, t), followed by the field as interleaved little-endian float64
(re, im) pairs in C order.
"""
from __future__ import annotations

from pathlib import Path
from types import TracebackType
from typing import BinaryIO, Iterator, Optional

import numpy as np

from ..fields.field import ComplexField
from ..fields.grid import SpatialGrid

_INT_HEADER = np.dtype("<i8")
_FLOAT = np.dtype("<f8")


class SnapshotWriter:
    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._handle: Optional[BinaryIO] = None
        self.count = 0

    def __enter__(self) -> "SnapshotWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("wb")
        return self

    def __exit__(
        self,
        exc_type: Optional[type[BaseException]],
        exc: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> None:
        self.close()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __call__(self, time: float, psi: ComplexField) -> None:
        self.write(time, psi)

    def write(self, time: float, psi: ComplexField) -> None:
        if self._handle is None:
            raise RuntimeError("snapshot writer is not open")
        grid = psi.grid
        self._handle.write(np.array([grid.points, grid.dimension], dtype=_INT_HEADER).tobytes())
        self._handle.write(np.array([grid.half_extent, time], dtype=_FLOAT).tobytes())
        pairs = np.empty(psi.values.shape + (2,), dtype=_FLOAT)
        pairs[..., 0] = psi.values.real
        pairs[..., 1] = psi.values.imag
        self._handle.write(pairs.tobytes())
        self.count += 1


def read_snapshots(path: str | Path) -> Iterator[tuple[float, ComplexField]]:
    data = Path(path).read_bytes()
    offset = 0
    while offset < len(data):
        n, d = np.frombuffer(data, dtype=_INT_HEADER, count=2, offset=offset)
        offset += 2 * _INT_HEADER.itemsize
        half_extent, time = np.frombuffer(data, dtype=_FLOAT, count=2, offset=offset)
        offset += 2 * _FLOAT.itemsize
        grid = SpatialGrid(int(d), float(half_extent), int(n))
        count = 2 * grid.size
        pairs = np.frombuffer(data, dtype=_FLOAT, count=count, offset=offset).reshape(grid.shape + (2,))
        offset += count * _FLOAT.itemsize
        yield float(time), ComplexField(grid, pairs[..., 0] + 1j * pairs[..., 1])
