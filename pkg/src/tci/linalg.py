"""Tensor linear algebra on matricized operands.

Decompositions and matrix functions fold the first ``k`` bonds into the row
index and the rest into the column index, run a dense matrix kernel and fold
the factors back. Dense kernels come from LAPACK (through numpy/scipy). The
conventions layered on top are fixed so results are reproducible:

* SVD: each left singular vector is rotated so its largest-magnitude entry
  is real and positive (the right vector gets the inverse phase).
* QR/LQ: the triangular factor has a real, nonnegative diagonal.
* eig: eigenvalues sorted by (real, imag); eigenvectors phase-fixed like
  SVD vectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import Context, ErrorKind, TciError, traced
from .dense import COMPLEX, REAL, DenseTensor, _finish

# --- matricization -----------------------------------------------------------


def matricize(t: DenseTensor, k: int) -> np.ndarray:
    """Row-major unfolding of ``t`` with the first ``k`` bonds as rows (a view)."""
    if not 1 <= k < t.order:
        raise TciError(ErrorKind.ORDER_MISMATCH, f"need 1 <= k < order, got k={k} for order {t.order}")
    shape = t.shape
    rows = math.prod(shape[:k])
    return t.data.reshape(rows, -1)


def refold(mat: np.ndarray, row_dims: Sequence[int], col_dims: Sequence[int]) -> DenseTensor:
    return DenseTensor._wrap(np.asarray(mat, order="C").reshape(tuple(row_dims) + tuple(col_dims)))


def _square(t: DenseTensor, k: int) -> np.ndarray:
    m = matricize(t, k)
    if m.shape[0] != m.shape[1]:
        raise TciError(ErrorKind.NOT_SQUARE, f"matricization is {m.shape[0]}x{m.shape[1]}")
    return m


def _phase_fix_columns(vecs: np.ndarray) -> np.ndarray:
    """Per-column unit phases making each column's largest-magnitude entry real positive."""
    if vecs.shape[0] == 0:
        return np.ones(vecs.shape[1], dtype=vecs.dtype)
    idx = np.argmax(np.abs(vecs), axis=0)
    pivots = vecs[idx, np.arange(vecs.shape[1])]
    mags = np.abs(pivots)
    phases = np.ones_like(pivots)
    nz = mags > 0
    phases[nz] = np.conj(pivots[nz]) / mags[nz]
    return phases


def _frob(arr: np.ndarray) -> float:
    if np.iscomplexobj(arr):
        sq = arr.real * arr.real + arr.imag * arr.imag
    else:
        sq = arr * arr
    return math.sqrt(float(np.sum(sq)))


# --- norms, scaling, diag, trace ---------------------------------------------


@traced("norm")
def norm(ctx: Context, t: DenseTensor) -> float:
    return _frob(t.data)


@traced("normalize")
def normalize(ctx: Context, t: DenseTensor, *, inplace: bool = False):
    """Scale to unit Frobenius norm.

    Returns ``(normalized, prior_norm)``, or just ``prior_norm`` when
    ``inplace=True``.
    """
    n = _frob(t.data)
    if n == 0.0:
        raise TciError(ErrorKind.SINGULAR_MATRIX, "cannot normalize a zero-norm tensor")
    out = _finish(t, t.data / n, inplace)
    return n if inplace else (out, n)


@traced("scale")
def scale(ctx: Context, t: DenseTensor, s, *, inplace: bool = False):
    return _finish(t, t.data * s, inplace)


@traced("diag")
def diag(ctx: Context, t: DenseTensor, *, inplace: bool = False):
    if t.order == 1:
        arr = np.diag(t.data)
    elif t.order == 2:
        arr = np.diagonal(t.data).copy()
    else:
        raise TciError(ErrorKind.ORDER_MISMATCH, f"diag needs an order-1 or order-2 tensor, got order {t.order}")
    return _finish(t, arr, inplace)


@traced("trace")
def trace(ctx: Context, t: DenseTensor, bond_pairs: Sequence[tuple[int, int]], *, inplace: bool = False):
    """Partial trace over the listed bond pairs."""
    shape = t.shape
    labels = list(range(t.order))
    seen: set[int] = set()
    for a, b in bond_pairs:
        a, b = int(a), int(b)
        for x in (a, b):
            if not 0 <= x < t.order:
                raise TciError(ErrorKind.OUT_OF_RANGE, f"bond {x} outside order {t.order}")
        if a == b or a in seen or b in seen:
            raise TciError(ErrorKind.LABEL_CONFLICT, f"bond pair ({a}, {b}) overlaps another pair")
        if shape[a] != shape[b]:
            raise TciError(ErrorKind.SHAPE_MISMATCH, f"bonds {a} and {b} have dims {shape[a]} != {shape[b]}")
        seen.update((a, b))
        labels[b] = labels[a]
    keep = [labels[i] for i in range(t.order) if i not in seen]
    arr = np.einsum(t.data, labels, keep)
    return _finish(t, np.array(arr), inplace)


# --- contraction -------------------------------------------------------------


def _parse_labels(labels) -> list:
    if isinstance(labels, str):
        return list(labels)
    return [int(x) for x in labels]


@traced("contract")
def contract(ctx: Context, a: DenseTensor, labels_a, b: DenseTensor, labels_b, labels_out) -> DenseTensor:
    """Einstein contraction driven by bond labels.

    Labels are integer sequences or strings with one character per label.
    Labels shared by ``a`` and ``b`` and absent from ``labels_out`` are summed;
    ``labels_out`` fixes the output bond order (empty gives a scalar tensor).
    """
    la, lb, lc = _parse_labels(labels_a), _parse_labels(labels_b), _parse_labels(labels_out)
    if len(la) != a.order or len(lb) != b.order:
        raise TciError(ErrorKind.ORDER_MISMATCH, "label count must equal tensor order")
    for name, ls in (("a", la), ("b", lb), ("out", lc)):
        if len(set(ls)) != len(ls):
            raise TciError(ErrorKind.LABEL_CONFLICT, f"repeated label in {name} labels {ls}")
    sa, sb, sc = set(la), set(lb), set(lc)
    if sa & sb & sc:
        raise TciError(ErrorKind.LABEL_CONFLICT, f"labels {sorted(map(str, sa & sb & sc))} appear in all three lists")
    for lab in lc:
        if lab not in sa and lab not in sb:
            raise TciError(ErrorKind.LABEL_CONFLICT, f"output label {lab!r} appears in no input")
    dangling = (sa ^ sb) - sc
    if dangling:
        raise TciError(ErrorKind.LABEL_CONFLICT, f"labels {sorted(map(str, dangling))} appear in one input only")
    shared = [lab for lab in la if lab in sb]
    for lab in shared:
        da, db = a.shape[la.index(lab)], b.shape[lb.index(lab)]
        if da != db:
            raise TciError(ErrorKind.SHAPE_MISMATCH, f"label {lab!r} has dims {da} and {db}")
    axes_a = [la.index(lab) for lab in shared]
    axes_b = [lb.index(lab) for lab in shared]
    res = np.tensordot(a.data, b.data, axes=(axes_a, axes_b))
    free = [lab for lab in la if lab not in sb] + [lab for lab in lb if lab not in sa]
    perm = [free.index(lab) for lab in lc]
    return DenseTensor._wrap(np.transpose(res, perm))


@traced("linear_combine")
def linear_combine(ctx: Context, tensors: Sequence[DenseTensor], coefficients: Sequence | None = None) -> DenseTensor:
    if not tensors:
        raise TciError(ErrorKind.SHAPE_MISMATCH, "empty linear combination")
    ref = tensors[0].shape
    for t in tensors:
        if t.shape != ref:
            raise TciError(ErrorKind.SHAPE_MISMATCH, f"shape {list(t.shape)} differs from {list(ref)}")
    if coefficients is None:
        coefficients = [1.0] * len(tensors)
    if len(coefficients) != len(tensors):
        raise TciError(ErrorKind.SHAPE_MISMATCH, "coefficient count does not match tensor count")
    kind = COMPLEX if any(t.is_complex for t in tensors) or any(isinstance(c, complex) for c in coefficients) else REAL
    acc = np.zeros(ref, dtype=kind)
    for t, c in zip(tensors, coefficients):
        acc += c * t.data
    return DenseTensor._wrap(acc)


# --- SVD ---------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationPolicy:
    """Singular-value truncation rule.

    Drop values below ``s_min``, keep at least ``chi_min`` of the survivors,
    then grow the kept count until the relative discarded weight is at most
    ``target_trunc_err`` or ``chi_max`` values are kept. ``chi_max=None``
    means no cap.
    """

    chi_max: int | None = None
    chi_min: int = 1
    target_trunc_err: float = 0.0
    s_min: float = 0.0

    def __post_init__(self):
        if self.chi_min < 1:
            raise ValueError("chi_min must be >= 1")
        if self.chi_max is not None and self.chi_max < self.chi_min:
            raise ValueError("chi_max must be >= chi_min")
        if self.target_trunc_err < 0 or self.s_min < 0:
            raise ValueError("target_trunc_err and s_min must be nonnegative")

    def kept(self, s: np.ndarray) -> tuple[int, float]:
        """Number of values to keep from non-increasing ``s`` and the resulting error."""
        s2 = s * s
        total = float(np.sum(s2))

        def err(chi: int) -> float:
            return float(np.sum(s2[chi:])) / total if total > 0 else 0.0

        survivors = max(int(np.count_nonzero(s >= self.s_min)), 1)
        if survivors <= self.chi_min:
            chi = survivors
        else:
            cap = survivors if self.chi_max is None else min(self.chi_max, survivors)
            chi = self.chi_min
            while chi < cap and err(chi) > self.target_trunc_err:
                chi += 1
        return chi, err(chi)


def _svd_matrix(m: np.ndarray):
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise TciError(ErrorKind.NO_CONVERGENCE, f"SVD did not converge: {exc}") from exc
    ph = _phase_fix_columns(u)
    u = u * ph
    vh = vh * np.conj(ph)[:, None]
    return u, s, vh


def _svd_tensors(t: DenseTensor, k: int, keep: int | None = None):
    m = matricize(t, k)
    u, s, vh = _svd_matrix(m)
    if keep is not None:
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    row_dims, col_dims = t.shape[:k], t.shape[k:]
    kappa = s.shape[0]
    return (
        refold(u, row_dims, (kappa,)),
        DenseTensor._wrap(np.array(s, dtype=REAL)),
        refold(vh, (kappa,), col_dims),
        s,
    )


@traced("svd")
def svd(ctx: Context, a: DenseTensor, k: int):
    """Thin SVD of the ``k``-row-bond matricization: returns ``(u, s_diag, v_dag)``."""
    u, s, vh, _ = _svd_tensors(a, k)
    return u, s, vh


@traced("trunc_svd")
def trunc_svd(
    ctx: Context,
    a: DenseTensor,
    k: int,
    chi_max: int | None = None,
    s_min: float = 0.0,
    *,
    chi_min: int = 1,
    target_trunc_err: float = 0.0,
    policy: TruncationPolicy | None = None,
):
    """Truncated SVD: returns ``(u, s_diag, v_dag, trunc_err)``.

    Either give ``policy`` or the individual knobs; the positional
    ``(chi_max, s_min)`` form is the fixed-cap rule.
    """
    if policy is None:
        policy = TruncationPolicy(chi_max=chi_max, chi_min=chi_min, target_trunc_err=target_trunc_err, s_min=s_min)
    m = matricize(a, k)
    u, s, vh = _svd_matrix(m)
    chi, err = policy.kept(s)
    row_dims, col_dims = a.shape[:k], a.shape[k:]
    return (
        refold(u[:, :chi], row_dims, (chi,)),
        DenseTensor._wrap(np.array(s[:chi], dtype=REAL)),
        refold(vh[:chi], (chi,), col_dims),
        err,
    )


# --- QR / LQ -----------------------------------------------------------------


def _qr_matrix(m: np.ndarray):
    q, r = np.linalg.qr(m, mode="reduced")
    d = np.diagonal(r)
    mags = np.abs(d)
    ph = np.ones_like(d)
    nz = mags > 0
    ph[nz] = d[nz] / mags[nz]
    q = q * ph
    r = np.conj(ph)[:, None] * r
    return q, r


@traced("qr")
def qr(ctx: Context, a: DenseTensor, k: int):
    m = matricize(a, k)
    q, r = _qr_matrix(m)
    rho = q.shape[1]
    return refold(q, a.shape[:k], (rho,)), refold(r, (rho,), a.shape[k:])


@traced("lq")
def lq(ctx: Context, a: DenseTensor, k: int):
    m = matricize(a, k)
    q, r = _qr_matrix(m.conj().T)
    rho = q.shape[1]
    return refold(r.conj().T, a.shape[:k], (rho,)), refold(q.conj().T, (rho,), a.shape[k:])


# --- matrix functions --------------------------------------------------------

_PADE6 = tuple(
    math.factorial(12 - j) * math.factorial(6) / (math.factorial(12) * math.factorial(j) * math.factorial(6 - j))
    for j in range(7)
)


def expm_pade6(m: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with the (6, 6) Padé approximant.

    The scaling exponent is the smallest ``s`` with ``||A / 2**s||_1 <= 0.5``.
    """
    n = m.shape[0]
    norm1 = float(np.max(np.sum(np.abs(m), axis=0))) if n else 0.0
    s = max(0, math.ceil(math.log2(norm1 / 0.5))) if norm1 > 0.5 else 0
    b = m / (2.0**s)
    ident = np.eye(n, dtype=b.dtype)
    b2 = b @ b
    b4 = b2 @ b2
    b6 = b4 @ b2
    c = _PADE6
    even = c[0] * ident + c[2] * b2 + c[4] * b4 + c[6] * b6
    odd = b @ (c[1] * ident + c[3] * b2 + c[5] * b4)
    x = np.linalg.solve(even - odd, even + odd)
    for _ in range(s):
        x = x @ x
    return x


@traced("exp")
def exp(ctx: Context, a: DenseTensor, k: int, *, inplace: bool = False):
    m = _square(a, k)
    return _finish(a, expm_pade6(m).reshape(a.shape), inplace)


@traced("inverse")
def inverse(ctx: Context, a: DenseTensor, k: int, *, inplace: bool = False):
    m = _square(a, k)
    scale_ = float(np.max(np.abs(m))) if m.size else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    pivots = np.abs(np.diagonal(lu))
    if scale_ == 0.0 or float(np.min(pivots)) < 1e-13 * scale_:
        raise TciError(ErrorKind.SINGULAR_MATRIX, "matrix is singular to working precision")
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(m.shape[0], dtype=m.dtype), check_finite=False)
    return _finish(a, inv.reshape(a.shape), inplace)


# --- eigensolvers ------------------------------------------------------------


def _eig_matrix(m: np.ndarray, vectors: bool):
    try:
        if vectors:
            w, v = np.linalg.eig(m)
        else:
            w, v = np.linalg.eigvals(m), None
    except np.linalg.LinAlgError as exc:
        raise TciError(ErrorKind.NO_CONVERGENCE, f"eigensolver did not converge: {exc}") from exc
    w = w.astype(COMPLEX)
    order_ = np.lexsort((w.imag, w.real))
    w = w[order_]
    if v is not None:
        v = v.astype(COMPLEX)[:, order_]
        v = v * _phase_fix_columns(v)
    return w, v


def _eigh_matrix(m: np.ndarray, vectors: bool):
    h = 0.5 * (m + m.conj().T)
    try:
        if vectors:
            w, v = np.linalg.eigh(h)
            v = v * _phase_fix_columns(v)
        else:
            w, v = np.linalg.eigvalsh(h), None
    except np.linalg.LinAlgError as exc:
        raise TciError(ErrorKind.NO_CONVERGENCE, f"eigensolver did not converge: {exc}") from exc
    return w, v


@traced("eig")
def eig(ctx: Context, a: DenseTensor, k: int):
    """Right eigenpairs ``(w, v)``; ``v`` has shape ``a.shape[:k] + (I,)``."""
    m = _square(a, k)
    w, v = _eig_matrix(m, True)
    return DenseTensor._wrap(w), refold(v, a.shape[:k], (m.shape[0],))


@traced("eigvals")
def eigvals(ctx: Context, a: DenseTensor, k: int) -> DenseTensor:
    w, _ = _eig_matrix(_square(a, k), False)
    return DenseTensor._wrap(w)


@traced("eigh")
def eigh(ctx: Context, a: DenseTensor, k: int):
    """Hermitian eigenpairs of the symmetrized matricization, ascending."""
    m = _square(a, k)
    w, v = _eigh_matrix(m, True)
    return DenseTensor._wrap(np.array(w, dtype=REAL)), refold(v, a.shape[:k], (m.shape[0],))


@traced("eigvalsh")
def eigvalsh(ctx: Context, a: DenseTensor, k: int) -> DenseTensor:
    w, _ = _eigh_matrix(_square(a, k), False)
    return DenseTensor._wrap(np.array(w, dtype=REAL))


def eig_general(ctx: Context, a: DenseTensor, k: int, values_only: bool = False):
    """``eigvals`` or ``eig`` depending on ``values_only``; always returns a pair."""
    if values_only:
        return eigvals(ctx, a, k), None
    return eig(ctx, a, k)


def eig_hermitian(ctx: Context, a: DenseTensor, k: int, values_only: bool = False):
    if values_only:
        return eigvalsh(ctx, a, k), None
    return eigh(ctx, a, k)


mat_exp = exp
mat_inverse = inverse
