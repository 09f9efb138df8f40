"""Reference dense tensor and the construction/manipulation routines.

Elements are stored in one C-contiguous numpy buffer, row-major with the last
bond index varying fastest. Only two element kinds exist: real double
(``float64``) and complex double (``complex128``).

Routines that have an in-place form take ``inplace=True``; they then replace
the storage of the tensor argument and return ``None``. The result is always
computed into a fresh buffer first, so aliasing between input and output is
never observable.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import Context, ErrorKind, TciError, traced

REAL = np.dtype(np.float64)
COMPLEX = np.dtype(np.complex128)

Shape = tuple[int, ...]
Coords = tuple[int, ...]


def resolve_dtype(dtype) -> np.dtype:
    """Map a user-facing element-kind spelling onto one of the two kinds."""
    if dtype is None:
        return REAL
    if isinstance(dtype, str):
        key = dtype.lower()
        if key in ("r64", "real", "real64", "float", "float64", "f8"):
            return REAL
        if key in ("c64", "complex", "complex128", "c16", "cplx"):
            return COMPLEX
    elif dtype is float:
        return REAL
    elif dtype is complex:
        return COMPLEX
    else:
        dt = np.dtype(dtype)
        if dt.kind == "c":
            return COMPLEX
        if dt.kind in "fiub":
            return REAL
    raise TciError(ErrorKind.UNSUPPORTED, f"unsupported element kind {dtype!r}")


class DenseTensor:
    """Order-n dense array with value semantics.

    ``DenseTensor()`` is the default tensor: order 0 holding a single zero.
    Passing an array-like copies it into a fresh row-major buffer.
    """

    __slots__ = ("_data",)

    def __init__(self, data=None, dtype=None):
        if data is None:
            self._data = np.zeros((), dtype=resolve_dtype(dtype))
            return
        arr = np.asarray(data)
        kind = resolve_dtype(dtype) if dtype is not None else resolve_dtype(arr.dtype)
        self._data = np.array(arr, dtype=kind, order="C", copy=True)

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "DenseTensor":
        t = cls.__new__(cls)
        if arr.dtype != REAL and arr.dtype != COMPLEX:
            arr = arr.astype(COMPLEX if arr.dtype.kind == "c" else REAL)
        t._data = arr if arr.flags.c_contiguous else np.array(arr, order="C")
        return t

    @property
    def data(self) -> np.ndarray:
        """The underlying buffer (shared, not copied)."""
        return self._data

    @property
    def shape(self) -> Shape:
        return tuple(int(d) for d in self._data.shape)

    @property
    def order(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(self._data.size)

    @property
    def dtype(self) -> np.dtype:
        return self._data.dtype

    @property
    def is_complex(self) -> bool:
        return self._data.dtype == COMPLEX

    def to_numpy(self) -> np.ndarray:
        return self._data.copy()

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return (
            self._data.shape == other._data.shape
            and self._data.dtype == other._data.dtype
            and bool(np.array_equal(self._data, other._data))
        )

    __hash__ = None

    def __repr__(self) -> str:
        kind = "c64" if self.is_complex else "r64"
        return f"DenseTensor(shape={list(self.shape)}, dtype={kind})"


def _set_storage(t: DenseTensor, arr: np.ndarray) -> None:
    t._data = DenseTensor._wrap(arr)._data


def _finish(t: DenseTensor, arr: np.ndarray, inplace: bool):
    if inplace:
        _set_storage(t, arr)
        return None
    return DenseTensor._wrap(arr)


def check_shape(shape: Iterable[int]) -> Shape:
    dims = tuple(int(d) for d in shape)
    for d in dims:
        if d < 1:
            raise TciError(ErrorKind.SHAPE_MISMATCH, f"bond dimensions must be >= 1, got {list(dims)}")
    return dims


def _check_coords(t: DenseTensor, coords: Sequence[int]) -> Coords:
    c = tuple(int(x) for x in coords)
    shape = t.shape
    if len(c) != len(shape):
        raise TciError(ErrorKind.OUT_OF_RANGE, f"coordinates {list(c)} do not match order {len(shape)}")
    for ci, d in zip(c, shape):
        if not 0 <= ci < d:
            raise TciError(ErrorKind.OUT_OF_RANGE, f"coordinates {list(c)} outside shape {list(shape)}")
    return c


def _scalar(v):
    return complex(v) if np.iscomplexobj(v) else float(v)


# --- read-only queries -------------------------------------------------------


@traced("order")
def order(ctx: Context, t: DenseTensor) -> int:
    return t.order


@traced("shape")
def shape(ctx: Context, t: DenseTensor) -> Shape:
    return t.shape


@traced("size")
def size(ctx: Context, t: DenseTensor) -> int:
    return t.size


@traced("size_bytes")
def size_bytes(ctx: Context, t: DenseTensor, elem_width: int | None = None) -> int:
    """Memory footprint; ``elem_width`` overrides the native element width in bytes."""
    width = t.dtype.itemsize if elem_width is None else int(elem_width)
    return t.size * width


@traced("get_elem")
def get_elem(ctx: Context, t: DenseTensor, coords: Sequence[int]):
    return _scalar(t._data[_check_coords(t, coords)])


# --- construction and destruction --------------------------------------------


@traced("allocate")
def allocate(ctx: Context, shape: Sequence[int], dtype=None) -> DenseTensor:
    """Reserve storage without initializing it.

    Under ``__debug__`` (the default interpreter mode) the buffer is filled
    with NaN so that reading it by mistake is loud.
    """
    dims = check_shape(shape)
    kind = resolve_dtype(dtype)
    arr = np.full(dims, np.nan, dtype=kind) if __debug__ else np.empty(dims, dtype=kind)
    return DenseTensor._wrap(arr)


@traced("zeros")
def zeros(ctx: Context, shape: Sequence[int], dtype=None) -> DenseTensor:
    return DenseTensor._wrap(np.zeros(check_shape(shape), dtype=resolve_dtype(dtype)))


@traced("fill")
def fill(ctx: Context, shape: Sequence[int], value, dtype=None) -> DenseTensor:
    if dtype is None:
        dtype = COMPLEX if isinstance(value, complex) else REAL
    return DenseTensor._wrap(np.full(check_shape(shape), value, dtype=resolve_dtype(dtype)))


@traced("eye")
def eye(ctx: Context, n: int, dtype=None) -> DenseTensor:
    if int(n) < 1:
        raise TciError(ErrorKind.SHAPE_MISMATCH, "eye needs n >= 1")
    return DenseTensor._wrap(np.eye(int(n), dtype=resolve_dtype(dtype)))


@traced("random")
def random(ctx: Context, shape: Sequence[int], gen: Callable[[], object], dtype=None) -> DenseTensor:
    """Fill a tensor by calling ``gen()`` once per element in row-major order."""
    dims = check_shape(shape)
    kind = resolve_dtype(dtype)
    n = math.prod(dims)
    values = np.empty(n, dtype=kind)
    for i in range(n):
        values[i] = gen()
    return DenseTensor._wrap(values.reshape(dims))


@traced("assign_from_range")
def assign_from_range(
    ctx: Context,
    shape: Sequence[int],
    values: Sequence,
    coors2idx: Callable[[Coords], int],
    dtype=None,
) -> DenseTensor:
    dims = check_shape(shape)
    if dtype is None:
        dtype = COMPLEX if any(isinstance(v, complex) for v in values) else REAL
    arr = np.empty(dims, dtype=resolve_dtype(dtype))
    n = len(values)
    for c in np.ndindex(*dims):
        idx = int(coors2idx(c))
        if not 0 <= idx < n:
            raise TciError(ErrorKind.OUT_OF_RANGE, f"coors2idx({list(c)}) = {idx} outside range of length {n}")
        arr[c] = values[idx]
    return DenseTensor._wrap(arr)


@traced("to_range")
def to_range(ctx: Context, t: DenseTensor, out, coors2idx: Callable[[Coords], int]) -> None:
    """Write every element into ``out[coors2idx(coords)]``."""
    n = len(out)
    for c in np.ndindex(*t.shape):
        idx = int(coors2idx(c))
        if not 0 <= idx < n:
            raise TciError(ErrorKind.OUT_OF_RANGE, f"coors2idx({list(c)}) = {idx} outside range of length {n}")
        out[idx] = _scalar(t._data[c])


@traced("copy")
def copy(ctx: Context, t: DenseTensor) -> DenseTensor:
    return DenseTensor._wrap(t._data.copy())


@traced("move")
def move(ctx: Context, t: DenseTensor) -> DenseTensor:
    """Hand the storage over to a new tensor and reset ``t`` to the default state."""
    out = DenseTensor._wrap(t._data)
    t._data = np.zeros((), dtype=t._data.dtype)
    return out


@traced("clear")
def clear(ctx: Context, t: DenseTensor) -> None:
    t._data = np.zeros((), dtype=t._data.dtype)


# --- manipulation ------------------------------------------------------------


@traced("set_elem")
def set_elem(ctx: Context, t: DenseTensor, coords: Sequence[int], value) -> None:
    c = _check_coords(t, coords)
    if isinstance(value, complex) and not t.is_complex:
        if value.imag != 0:
            raise TciError(ErrorKind.UNSUPPORTED, "cannot store a complex value in a real tensor")
        value = value.real
    t._data[c] = value


@traced("reshape")
def reshape(ctx: Context, t: DenseTensor, new_shape: Sequence[int], *, inplace: bool = False):
    dims = tuple(int(d) for d in new_shape)
    if any(d < 1 for d in dims) or math.prod(dims) != t.size:
        raise TciError(ErrorKind.SHAPE_MISMATCH, f"cannot reshape {list(t.shape)} into {list(dims)}")
    return _finish(t, t._data.reshape(dims).copy(), inplace)


def _check_perm(perm: Sequence[int], n: int) -> tuple[int, ...]:
    p = tuple(int(x) for x in perm)
    if sorted(p) != list(range(n)):
        raise TciError(ErrorKind.ORDER_MISMATCH, f"{list(p)} is not a permutation of {n} bonds")
    return p


@traced("transpose")
def transpose(ctx: Context, t: DenseTensor, new_order: Sequence[int], *, inplace: bool = False):
    p = _check_perm(new_order, t.order)
    return _finish(t, np.array(np.transpose(t._data, p), order="C"), inplace)


@traced("cplx_conj")
def cplx_conj(ctx: Context, t: DenseTensor, *, inplace: bool = False):
    return _finish(t, np.conj(t._data), inplace)


@traced("to_cplx")
def to_cplx(ctx: Context, t: DenseTensor) -> DenseTensor:
    return DenseTensor._wrap(t._data.astype(COMPLEX, copy=True))


@traced("real")
def real(ctx: Context, t: DenseTensor) -> DenseTensor:
    return DenseTensor._wrap(np.array(t._data.real, dtype=REAL, copy=True))


@traced("imag")
def imag(ctx: Context, t: DenseTensor) -> DenseTensor:
    if not t.is_complex:
        return DenseTensor._wrap(np.zeros(t._data.shape, dtype=REAL))
    return DenseTensor._wrap(np.array(t._data.imag, dtype=REAL, copy=True))


@traced("expand")
def expand(ctx: Context, t: DenseTensor, increments: Mapping[int, int], *, inplace: bool = False):
    """Append ``increments[b]`` zero slots at the end of each listed bond ``b``."""
    pad = [(0, 0)] * t.order
    for b, inc in increments.items():
        b, inc = int(b), int(inc)
        if not 0 <= b < t.order:
            raise TciError(ErrorKind.OUT_OF_RANGE, f"bond {b} outside order {t.order}")
        if inc < 1:
            raise TciError(ErrorKind.OUT_OF_RANGE, f"increment for bond {b} must be >= 1")
        pad[b] = (0, inc)
    return _finish(t, np.pad(t._data, pad), inplace)


def _ranges_to_slices(t: DenseTensor, ranges) -> tuple[slice, ...]:
    shape = t.shape
    if isinstance(ranges, Mapping):
        items = {int(b): r for b, r in ranges.items()}
        for b in items:
            if not 0 <= b < len(shape):
                raise TciError(ErrorKind.OUT_OF_RANGE, f"bond {b} outside order {len(shape)}")
        pairs = [items.get(b, (0, d)) for b, d in enumerate(shape)]
    else:
        pairs = list(ranges)
        if len(pairs) != len(shape):
            raise TciError(ErrorKind.OUT_OF_RANGE, f"need {len(shape)} ranges, got {len(pairs)}")
    out = []
    for b, ((first, second), d) in enumerate(zip(pairs, shape)):
        first, second = int(first), int(second)
        if not 0 <= first < second <= d:
            raise TciError(ErrorKind.OUT_OF_RANGE, f"range [{first}, {second}) invalid for bond {b} of dim {d}")
        out.append(slice(first, second))
    return tuple(out)


@traced("slice")
def slice_tensor(ctx: Context, t: DenseTensor, ranges, *, inplace: bool = False):
    """Restrict bonds to half-open ``[first, second)`` ranges.

    ``ranges`` is either a mapping ``bond -> (first, second)`` (unlisted bonds
    keep their full range) or a sequence with one pair per bond.
    """
    return _finish(t, t._data[_ranges_to_slices(t, ranges)].copy(), inplace)


@traced("shrink")
def shrink(ctx: Context, t: DenseTensor, ranges: Mapping[int, tuple[int, int]], *, inplace: bool = False):
    return _finish(t, t._data[_ranges_to_slices(t, dict(ranges))].copy(), inplace)


@traced("extract_sub")
def extract_sub(ctx: Context, t: DenseTensor, ranges: Sequence[tuple[int, int]], *, inplace: bool = False):
    return _finish(t, t._data[_ranges_to_slices(t, list(ranges))].copy(), inplace)


@traced("replace_sub")
def replace_sub(ctx: Context, t: DenseTensor, sub: DenseTensor, begin_pt: Sequence[int], *, inplace: bool = False):
    begin = tuple(int(x) for x in begin_pt)
    if len(begin) != t.order or sub.order != t.order:
        raise TciError(ErrorKind.OUT_OF_RANGE, "begin point and sub-tensor must match the tensor order")
    window = []
    for b, (start, ds, dt) in enumerate(zip(begin, sub.shape, t.shape)):
        if start < 0 or start + ds > dt:
            raise TciError(ErrorKind.OUT_OF_RANGE, f"sub-tensor overflows bond {b}")
        window.append(slice(start, start + ds))
    kind = COMPLEX if (t.is_complex or sub.is_complex) else REAL
    arr = t._data.astype(kind, copy=True)
    arr[tuple(window)] = sub._data
    return _finish(t, arr, inplace)


@traced("concatenate")
def concatenate(ctx: Context, tensors: Sequence[DenseTensor], bond: int) -> DenseTensor:
    if not tensors:
        raise TciError(ErrorKind.SHAPE_MISMATCH, "nothing to concatenate")
    ref = tensors[0].shape
    bond = int(bond)
    if not 0 <= bond < len(ref):
        raise TciError(ErrorKind.OUT_OF_RANGE, f"bond {bond} outside order {len(ref)}")
    for t in tensors[1:]:
        s = t.shape
        if len(s) != len(ref) or any(a != b for i, (a, b) in enumerate(zip(s, ref)) if i != bond):
            raise TciError(ErrorKind.SHAPE_MISMATCH, f"cannot concatenate {list(s)} with {list(ref)} on bond {bond}")
    return DenseTensor._wrap(np.concatenate([t._data for t in tensors], axis=bond))


@traced("stack")
def stack(ctx: Context, tensors: Sequence[DenseTensor], bond: int) -> DenseTensor:
    if not tensors:
        raise TciError(ErrorKind.SHAPE_MISMATCH, "nothing to stack")
    ref = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != ref:
            raise TciError(ErrorKind.SHAPE_MISMATCH, f"cannot stack {list(t.shape)} with {list(ref)}")
    bond = int(bond)
    if not 0 <= bond <= len(ref):
        raise TciError(ErrorKind.OUT_OF_RANGE, f"insert index {bond} outside [0, {len(ref)}]")
    return DenseTensor._wrap(np.stack([t._data for t in tensors], axis=bond))


@traced("for_each")
def for_each(ctx: Context, t: DenseTensor, f: Callable, *, mutate: bool = False) -> None:
    """Visit every element once in row-major order.

    Read-only by default. With ``mutate=True`` each element is replaced by
    the value ``f`` returns, which realizes an elementwise map in place.
    """
    flat = t._data.reshape(-1)
    if mutate:
        for i in range(flat.size):
            flat[i] = f(_scalar(flat[i]))
    else:
        for v in flat:
            f(_scalar(v))


@traced("for_each_with_coors")
def for_each_with_coors(ctx: Context, t: DenseTensor, f: Callable, *, mutate: bool = False) -> None:
    """Like :func:`for_each` but calls ``f(element, coords)``."""
    data = t._data
    for c in itertools.product(*(range(d) for d in t.shape)):
        if mutate:
            data[c] = f(_scalar(data[c]), c)
        else:
            f(_scalar(data[c]), c)
