"""Binary persistence, text display, tolerance comparison and kind conversion.

File layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"TCIT"
    4       4     u32 format version (1)
    8       1     u8 element kind: 1 = real64, 2 = complex (re, im) float64 pairs
    9       7     zero padding
    16      8     u64 order
    24      8*n   u64 dims
    ...           payload, row-major, little-endian IEEE-754 doubles
"""

from __future__ import annotations

import os
import struct
import sys
from typing import TextIO

import numpy as np

from .core import Context, ErrorKind, TciError, traced
from .dense import COMPLEX, REAL, DenseTensor, resolve_dtype

MAGIC = b"TCIT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sIB7x")
_U64 = struct.Struct("<Q")
_KIND_CODES = {REAL: 1, COMPLEX: 2}
_CODE_KINDS = {1: np.dtype("<f8"), 2: np.dtype("<c16")}


def header_size(order: int) -> int:
    return _PREFIX.size + _U64.size * (1 + order)


def encode(t: DenseTensor) -> bytes:
    parts = [_PREFIX.pack(MAGIC, FORMAT_VERSION, _KIND_CODES[t.dtype]), _U64.pack(t.order)]
    parts.extend(_U64.pack(d) for d in t.shape)
    le = t.data.astype(t.dtype.newbyteorder("<"), copy=False)
    parts.append(le.tobytes(order="C"))
    return b"".join(parts)


def decode(blob: bytes) -> DenseTensor:
    if len(blob) < _PREFIX.size + _U64.size:
        raise TciError(ErrorKind.PARSE_FAILURE, f"file too short for a header ({len(blob)} bytes)")
    magic, ver, code = _PREFIX.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TciError(ErrorKind.PARSE_FAILURE, f"bad magic {magic!r}")
    if ver != FORMAT_VERSION:
        raise TciError(ErrorKind.PARSE_FAILURE, f"unsupported format version {ver}")
    if code not in _CODE_KINDS:
        raise TciError(ErrorKind.PARSE_FAILURE, f"unknown element kind code {code}")
    (order_,) = _U64.unpack_from(blob, _PREFIX.size)
    if order_ > len(blob) or header_size(order_) > len(blob):
        raise TciError(ErrorKind.PARSE_FAILURE, "truncated dimension list")
    hdr = header_size(order_)
    dims = tuple(_U64.unpack_from(blob, _PREFIX.size + _U64.size * (1 + b))[0] for b in range(order_))
    if any(d < 1 for d in dims):
        raise TciError(ErrorKind.PARSE_FAILURE, f"invalid dims {list(dims)}")
    kind = _CODE_KINDS[code]
    count = 1
    for d in dims:
        count *= d
    expected = hdr + count * kind.itemsize
    if len(blob) != expected:
        what = "truncated payload" if len(blob) < expected else "trailing bytes after payload"
        raise TciError(ErrorKind.PARSE_FAILURE, f"{what}: expected {expected} bytes, found {len(blob)}")
    arr = np.frombuffer(blob, dtype=kind, count=count, offset=hdr).reshape(dims)
    return DenseTensor._wrap(arr.astype(kind.newbyteorder("="), copy=True))


@traced("save")
def save(ctx: Context, t: DenseTensor, path) -> None:
    blob = encode(t)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise TciError(ErrorKind.IO_FAILURE, f"cannot write {os.fspath(path)!s}: {exc.strerror or exc}") from exc


@traced("load")
def load(ctx: Context, path) -> DenseTensor:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise TciError(ErrorKind.IO_FAILURE, f"cannot read {os.fspath(path)!s}: {exc.strerror or exc}") from exc
    return decode(blob)


def _fmt_real(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def format_number(v) -> str:
    """Shortest round-trip text; integral values lose the trailing ``.0``."""
    if isinstance(v, complex) or np.iscomplexobj(v):
        z = complex(v)
        im = _fmt_real(z.imag)
        sign = "" if im.startswith("-") else "+"
        return f"{_fmt_real(z.real)}{sign}{im}i"
    return _fmt_real(v)


def render(t: DenseTensor) -> str:
    lines = ["shape=[" + ",".join(str(d) for d in t.shape) + "]"]
    data = t.data
    if t.order == 0:
        lines.append(format_number(data.item()))
    elif t.order == 1:
        lines.append(" ".join(format_number(v) for v in data.tolist()))
    else:
        for row in data.reshape(t.shape[0], -1).tolist():
            lines.append(" ".join(format_number(v) for v in row))
    return "\n".join(lines) + "\n"


@traced("show")
def show(ctx: Context, t: DenseTensor, stream: TextIO | None = None) -> None:
    """Print ``shape=[...]`` then one line per value of the first index."""
    (stream or sys.stdout).write(render(t))


@traced("close")
def close(ctx: Context, a: DenseTensor, b: DenseTensor, epsilon: float) -> bool:
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if a.shape != b.shape:
        return False
    if a.size == 0:
        return True
    return bool(np.max(np.abs(a.data - b.data)) <= epsilon)


def convert(ctx_src: Context, t: DenseTensor, ctx_dst: Context, dtype=None) -> DenseTensor:
    """Copy ``t`` into ``ctx_dst``, optionally promoting it to complex.

    Complex to real is refused; use :func:`tci.dense.real` when dropping the
    imaginary part is intended.
    """
    ctx_src.check_alive()
    ctx_dst.check_alive()
    target = t.dtype if dtype is None else resolve_dtype(dtype)
    if t.is_complex and target == REAL:
        raise TciError(ErrorKind.UNSUPPORTED, "complex to real conversion would drop imaginary parts")
    ctx_dst._count("convert")
    return DenseTensor._wrap(np.array(t.data, dtype=target, copy=True))
