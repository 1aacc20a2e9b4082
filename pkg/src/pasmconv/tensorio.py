"""Tensor serialization: a human-readable text format and a binary format.

text-v1
    line 1: ``dims d0 d1 ...``
    line 2: ``width W``
    then whitespace-separated decimal integers, row-major.

bin-v1
    magic ``QT01``, then little-endian unsigned 32-bit words: rank,
    dims..., width, followed by the row-major elements as little-endian
    signed 64-bit integers.

Both round-trip losslessly and validate every element against the word
range on load.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .tensor import QTensor, WordSpec

__all__ = ["FORMATS", "load_tensor", "store_tensor"]

FORMATS = ("text-v1", "bin-v1")
_MAGIC = b"QT01"


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValueError(f"format: expected one of {FORMATS}, got {fmt!r}")


def store_tensor(t: QTensor, path, fmt: str = "text-v1") -> None:
    _check_format(fmt)
    path = Path(path)
    if fmt == "text-v1":
        lines = [
            "dims " + " ".join(str(d) for d in t.shape),
            f"width {t.word.width}",
        ]
        flat = t.flat()
        row = t.shape[-1]
        for start in range(0, flat.size, row):
            lines.append(" ".join(str(int(v)) for v in flat[start : start + row]))
        path.write_text("\n".join(lines) + "\n")
        return
    flat = t.flat()
    head = struct.pack(
        f"<{2 + len(t.shape)}I", len(t.shape), *t.shape, t.word.width
    )
    path.write_bytes(_MAGIC + head + flat.astype("<i8").tobytes())


def _load_text(raw: str) -> QTensor:
    lines = raw.splitlines()
    if len(lines) < 2:
        raise ValueError("text-v1: file needs a dims line and a width line")
    head = lines[0].split()
    if not head or head[0] != "dims":
        raise ValueError(f"text-v1: line 1 must start with 'dims', got {lines[0]!r}")
    if len(head) < 2:
        raise ValueError("text-v1: dims line lists no dimensions")
    try:
        dims = [int(d) for d in head[1:]]
    except ValueError:
        raise ValueError(f"text-v1: malformed dims line {lines[0]!r}") from None
    wline = lines[1].split()
    if len(wline) != 2 or wline[0] != "width":
        raise ValueError(f"text-v1: line 2 must be 'width W', got {lines[1]!r}")
    try:
        width = int(wline[1])
    except ValueError:
        raise ValueError(f"text-v1: malformed width line {lines[1]!r}") from None

    body = " ".join(lines[2:]).split()
    try:
        values = [int(v) for v in body]
    except ValueError:
        raise ValueError("text-v1: non-integer element in body") from None
    expect = int(np.prod(dims)) if dims else 0
    if len(values) != expect:
        raise ValueError(f"text-v1: expected {expect} elements for dims {dims}, got {len(values)}")
    return QTensor(dims, WordSpec(width), values)


def _load_bin(raw: bytes) -> QTensor:
    if len(raw) < 8 or raw[:4] != _MAGIC:
        raise ValueError("bin-v1: bad magic, not a QT01 file")
    (rank,) = struct.unpack_from("<I", raw, 4)
    if rank < 1:
        raise ValueError("bin-v1: rank must be >= 1")
    head_end = 8 + 4 * rank + 4
    if len(raw) < head_end:
        raise ValueError("bin-v1: truncated header")
    dims = struct.unpack_from(f"<{rank}I", raw, 8)
    (width,) = struct.unpack_from("<I", raw, 8 + 4 * rank)
    n = int(np.prod(dims)) if all(d >= 1 for d in dims) else 0
    if any(d < 1 for d in dims):
        raise ValueError(f"bin-v1: dims must all be >= 1, got {list(dims)}")
    body = raw[head_end:]
    if len(body) != 8 * n:
        raise ValueError(f"bin-v1: expected {8 * n} data bytes for dims {list(dims)}, got {len(body)}")
    values = np.frombuffer(body, dtype="<i8")
    return QTensor(dims, WordSpec(width), values)


def load_tensor(path, fmt: str = "text-v1") -> QTensor:
    _check_format(fmt)
    path = Path(path)
    try:
        if fmt == "text-v1":
            return _load_text(path.read_text())
        return _load_bin(path.read_bytes())
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from None
