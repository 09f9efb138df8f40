"""Execution context, error taxonomy and call diagnostics.

Every interface routine takes a :class:`Context` as its first argument. The
context carries the worker budget handed to the BLAS/LAPACK thread pool, the
diagnostic level sampled from ``TCI_VERBOSE`` and per-operation call counters.
"""

from __future__ import annotations

import enum
import functools
import os
import sys
import threading
import time
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator

VERSION = "1.0"

_ENV_VERBOSE = "TCI_VERBOSE"


class ErrorKind(enum.Enum):
    SHAPE_MISMATCH = "ShapeMismatch"
    ORDER_MISMATCH = "OrderMismatch"
    OUT_OF_RANGE = "OutOfRange"
    LABEL_CONFLICT = "LabelConflict"
    NOT_SQUARE = "NotSquare"
    SINGULAR_MATRIX = "SingularMatrix"
    NO_CONVERGENCE = "NoConvergence"
    IO_FAILURE = "IoFailure"
    PARSE_FAILURE = "ParseFailure"
    DEAD_CONTEXT = "DeadContext"
    UNSUPPORTED = "Unsupported"


class TciError(Exception):
    """Error raised by interface routines; ``kind`` names the failure class."""

    def __init__(self, kind: ErrorKind, detail: str):
        super().__init__(f"{kind.value}: {detail}")
        self.kind = kind
        self.detail = detail


def _read_verbose_env() -> int:
    raw = os.environ.get(_ENV_VERBOSE)
    if raw is None or raw.strip() == "":
        return 0
    try:
        level = int(raw)
    except ValueError:
        print(f"tci: warning: {_ENV_VERBOSE}={raw!r} is not an integer, using 0", file=sys.stderr)
        return 0
    return min(max(level, 0), 2)


@dataclass(eq=False)
class Context:
    """Backend execution context.

    ``threads`` and ``verbose`` are fixed at creation. ``calls`` counts
    top-level interface invocations per operation name.
    """

    threads: int
    verbose: int
    alive: bool = True
    calls: Counter = field(default_factory=Counter)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def check_alive(self) -> None:
        if not self.alive:
            raise TciError(ErrorKind.DEAD_CONTEXT, "context has been destroyed")

    def _count(self, op: str) -> None:
        with self._lock:
            self.calls[op] += 1

    @contextmanager
    def thread_scope(self) -> Iterator[None]:
        """Pin the BLAS/LAPACK pool to at most ``threads`` workers for the enclosed block.

        The limit is also capped at the usable core count: OpenBLAS sizes its
        buffers for the cores it saw at load time, and some LAPACK drivers
        crash when asked to run wider than that.

        Entering the scope costs a few hundred microseconds, so drivers wrap
        whole runs in it rather than individual kernel calls.
        """
        self.check_alive()
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=min(self.threads, usable_cores())):
            yield


def usable_cores() -> int:
    try:
        return len(os.sched_getaffinity(0)) or 1
    except AttributeError:
        return os.cpu_count() or 1


def create_context(threads: int | None = None, verbose: int | None = None) -> Context:
    if threads is None:
        threads = usable_cores()
    if threads < 1:
        raise ValueError("threads must be a positive integer")
    level = _read_verbose_env() if verbose is None else int(verbose)
    if level not in (0, 1, 2):
        raise ValueError("verbose level must be 0, 1 or 2")
    return Context(threads=int(threads), verbose=level)


def destroy_context(ctx: Context) -> None:
    ctx.check_alive()
    ctx.alive = False
    ctx.calls.clear()


def version() -> str:
    return VERSION


_depth = threading.local()


def _describe(args: tuple, kwargs: dict) -> tuple[list[tuple[int, ...]], str]:
    from .dense import DenseTensor

    shapes: list[tuple[int, ...]] = []
    kinds: list[bool] = []

    def visit(obj, nested: bool) -> None:
        if isinstance(obj, DenseTensor):
            shapes.append(obj.shape)
            kinds.append(obj.is_complex)
        elif not nested and isinstance(obj, (list, tuple)):
            for item in obj:
                visit(item, True)

    for a in args:
        visit(a, False)
    for v in kwargs.values():
        visit(v, False)
    dtype = "c64" if any(kinds) else "r64"
    return shapes, dtype


def _emit(ctx: Context, op: str, args: tuple, kwargs: dict, elapsed_ns: int | None) -> None:
    shapes, dtype = _describe(args, kwargs)
    shape_txt = ";".join(",".join(str(d) for d in s) for s in shapes)
    line = f"tci:{op} shapes=[{shape_txt}] dtype={dtype}"
    if elapsed_ns is not None:
        line += f" time_us={elapsed_ns // 1000}"
    print(line, file=sys.stderr)


def traced(op: str):
    """Decorate an interface routine taking ``ctx`` first.

    Validates the context, counts the call and writes the diagnostic line.
    Calls made from inside another traced routine are neither counted nor
    reported, so one user-level call yields one line.
    """

    def wrap(fn):
        @functools.wraps(fn)
        def inner(ctx: Context, *args, **kwargs):
            if not isinstance(ctx, Context):
                raise TypeError(f"{op}: first argument must be a Context")
            ctx.check_alive()
            depth = getattr(_depth, "value", 0)
            if depth:
                return fn(ctx, *args, **kwargs)
            ctx._count(op)
            level = ctx.verbose
            _depth.value = 1
            try:
                if level == 0:
                    return fn(ctx, *args, **kwargs)
                start = time.perf_counter_ns()
                result = fn(ctx, *args, **kwargs)
                elapsed = time.perf_counter_ns() - start
                _emit(ctx, op, args, kwargs, elapsed if level >= 2 else None)
                return result
            finally:
                _depth.value = 0

        return inner

    return wrap
