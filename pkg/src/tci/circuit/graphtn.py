"""Tensor networks on coupling graphs: states, layer operators and BP regauging.

Site tensors are complex numpy arrays. A state tensor has axes
``(phys, bond_0, bond_1, ...)`` and an operator tensor
``(out, in, bond_0, ...)``, where ``bond_k`` is the edge to the k-th
neighbor in increasing vertex order.

BP messages live on doubled bonds: ``messages[(i, j)]`` is the D x D matrix
``M[a, a']`` (ket index first) sent from ``i`` to ``j``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import linalg as L
from ..core import Context, ErrorKind, TciError
from ..dense import DenseTensor
from .gates import Gate
from .lattice import Graph

# eigenvalues below this fraction of the largest are treated as zero
MESSAGE_CLAMP = 1e-12
# gate singular values below this fraction of the largest are dropped
GATE_RANK_TOL = 1e-13
# bond singular values below this fraction of the largest carry no weight
BOND_ZERO_TOL = 1e-14
BP_TOL = 1e-10
BP_MAX_ITERS = 500


@dataclass
class GraphTN:
    graph: Graph
    tensors: list[np.ndarray]
    phys_axes: int  # 1 for states, 2 for operators

    def axis(self, v: int, u: int) -> int:
        """Axis of site ``v``'s tensor that carries the bond to ``u``."""
        return self.phys_axes + self.graph.neighbors(v).index(u)

    def bond_dim(self, i: int, j: int) -> int:
        return self.tensors[i].shape[self.axis(i, j)]

    def bond_dims(self) -> dict[tuple[int, int], int]:
        return {e: self.bond_dim(*e) for e in self.graph.edges}

    def copy(self) -> "GraphTN":
        return GraphTN(self.graph, [t.copy() for t in self.tensors], self.phys_axes)

    def check(self) -> None:
        for i, j in self.graph.edges:
            if self.bond_dim(i, j) != self.bond_dim(j, i):
                raise TciError(ErrorKind.SHAPE_MISMATCH, f"bond ({i}, {j}) has mismatched dims")


def product_state(graph: Graph, bits=None) -> GraphTN:
    """Computational-basis product state (all zeros by default), bond dims 1."""
    tensors = []
    for v in range(graph.n):
        t = np.zeros((2,) + (1,) * graph.degree(v), dtype=complex)
        t[(int(bits[v]) if bits is not None else 0,) + (0,) * graph.degree(v)] = 1.0
        tensors.append(t)
    return GraphTN(graph, tensors, 1)


def identity_tno(graph: Graph) -> GraphTN:
    tensors = [np.eye(2, dtype=complex).reshape((2, 2) + (1,) * graph.degree(v)) for v in range(graph.n)]
    return GraphTN(graph, tensors, 2)


# --- layer to operator -------------------------------------------------------


def _fuse_new_bond(t: np.ndarray, ax: int, new_ax: int) -> np.ndarray:
    """Merge axis ``new_ax`` of ``t`` into axis ``ax`` with the new index slow."""
    t = np.moveaxis(t, new_ax, ax)
    shape = list(t.shape)
    merged = shape[ax] * shape[ax + 1]
    return t.reshape(shape[:ax] + [merged] + shape[ax + 2 :])


def _split_two_qubit(ctx: Context, u: np.ndarray):
    """Split a 4x4 unitary into ``(left[out, in, k], right[k, out, in])``."""
    if u.shape != (4, 4):
        raise TciError(ErrorKind.SHAPE_MISMATCH, f"two-qubit gate must be 4x4, got {u.shape}")
    op = u.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3)  # (out_i, in_i, out_j, in_j)
    uu, s, vh = L.svd(ctx, DenseTensor._wrap(np.ascontiguousarray(op)), 2)
    sv = s.data
    rank = max(1, int(np.count_nonzero(sv > GATE_RANK_TOL * sv[0])))
    root = np.sqrt(sv[:rank])
    left = uu.data[:, :, :rank] * root
    right = root[:, None, None] * vh.data[:rank]
    return left, right


def _apply_site_op(t: np.ndarray, op: np.ndarray) -> np.ndarray:
    """``op[out, mid, ...] . t[mid, in, ...]`` with op's extra axes appended."""
    extra = op.ndim - 2
    res = np.tensordot(op, t, axes=([1], [0]))  # (out, extras..., in, bonds...)
    return np.moveaxis(res, list(range(1, 1 + extra)), list(range(res.ndim - extra, res.ndim)))


def layer_to_tno(ctx: Context, group: list[Gate], graph: Graph) -> GraphTN:
    """Operator network for one layer, gates multiplied in program order onto the identity.

    A two-qubit gate on non-adjacent vertices is routed along the BFS
    shortest path with identity transport tensors on intermediate sites.
    """
    tno = identity_tno(graph)
    ts = tno.tensors
    for g in group:
        if g.is_barrier:
            continue
        if not g.is_two_qubit:
            (q,) = g.qubits
            ts[q] = _apply_site_op(ts[q], g.matrix())
            continue
        i, j = g.qubits
        left, right = _split_two_qubit(ctx, g.matrix())
        rank = left.shape[2]
        path = graph.shortest_path(i, j)
        # endpoint i: new bond axis goes onto the edge towards path[1]
        t = _apply_site_op(ts[i], left)
        ts[i] = _fuse_new_bond(t, tno.axis(i, path[1]), t.ndim - 1)
        for prev, mid, nxt in zip(path, path[1:], path[2:]):
            delta = np.eye(rank, dtype=complex)
            t = np.multiply.outer(ts[mid], delta)  # (..., k_in, k_out)
            t = _fuse_new_bond(t, tno.axis(mid, nxt), t.ndim - 1)
            ts[mid] = _fuse_new_bond(t, tno.axis(mid, prev), t.ndim - 1)
        end = path[-1]
        t = _apply_site_op(ts[end], np.moveaxis(right, 0, 2))
        ts[end] = _fuse_new_bond(t, tno.axis(end, path[-2]), t.ndim - 1)
    tno.check()
    return tno


# --- dense reference contractions -------------------------------------------


def _einsum_network(tn: GraphTN, out_labels_per_site) -> np.ndarray:
    graph = tn.graph
    edge_label = {e: 2 * graph.n + k for k, e in enumerate(graph.edges)}
    operands = []
    for v, t in enumerate(tn.tensors):
        labels = list(out_labels_per_site[v])
        labels += [edge_label[tuple(sorted((v, u)))] for u in graph.neighbors(v)]
        operands += [t, labels]
    out = [lab for v in range(graph.n) for lab in out_labels_per_site[v]]
    return np.einsum(*operands, out, optimize="greedy")


def tns_to_vector(tn: GraphTN) -> np.ndarray:
    """Amplitudes of a state network, qubit 0 most significant."""
    if 2 * tn.graph.n + len(tn.graph.edges) > 52:
        raise TciError(ErrorKind.UNSUPPORTED, "network too large for dense contraction")
    return _einsum_network(tn, [[v] for v in range(tn.graph.n)]).reshape(-1)


def tno_to_matrix(tn: GraphTN) -> np.ndarray:
    n = tn.graph.n
    if 2 * n + len(tn.graph.edges) > 52:
        raise TciError(ErrorKind.UNSUPPORTED, "network too large for dense contraction")
    arr = _einsum_network(tn, [[v, n + v] for v in range(n)])
    # (out0, in0, out1, in1, ...) -> (out..., in...)
    perm = [2 * v for v in range(n)] + [2 * v + 1 for v in range(n)]
    return arr.transpose(perm).reshape(2**n, 2**n)


# --- belief propagation ------------------------------------------------------


@dataclass
class BpResult:
    messages: dict[tuple[int, int], np.ndarray]
    iters: int
    converged: bool
    iter_wall_us: list[float] = field(default_factory=list)
    max_change: float = 0.0


def _absorb_messages(tn: GraphTN, v: int, messages, skip: int | None) -> np.ndarray:
    """Site tensor with every incoming message except ``skip``'s contracted onto its bonds."""
    x = tn.tensors[v]
    for u in tn.graph.neighbors(v):
        if u == skip:
            continue
        ax = tn.axis(v, u)
        x = np.moveaxis(np.tensordot(x, messages[(u, v)], axes=([ax], [0])), -1, ax)
    return x


def _outgoing(tn: GraphTN, v: int, u: int, messages) -> np.ndarray:
    x = _absorb_messages(tn, v, messages, skip=u)
    t = tn.tensors[v]
    ax = tn.axis(v, u)
    others = [a for a in range(t.ndim) if a != ax]
    m = np.tensordot(x, np.conj(t), axes=(others, others))
    m = 0.5 * (m + m.conj().T)
    nrm = np.linalg.norm(m)
    if nrm == 0.0:
        raise TciError(ErrorKind.SINGULAR_MATRIX, f"message {v}->{u} vanished")
    return m / nrm


def initial_messages(tn: GraphTN) -> dict[tuple[int, int], np.ndarray]:
    msgs = {}
    for i, j in tn.graph.edges:
        d = tn.bond_dim(i, j)
        eye = np.eye(d, dtype=complex) / np.sqrt(d)
        msgs[(i, j)] = eye
        msgs[(j, i)] = eye.copy()
    return msgs


def bp_fixed_point(ctx: Context, tns: GraphTN, max_iters: int = BP_MAX_ITERS, tol: float = BP_TOL) -> BpResult:
    """Synchronous BP from identity messages until the largest update is at most ``tol``.

    Running out of iterations is reported through ``converged=False``.
    """
    ctx.check_alive()
    msgs = initial_messages(tns)
    directed = sorted(msgs)
    walls: list[float] = []
    change = 0.0
    for it in range(1, max_iters + 1):
        t0 = time.perf_counter_ns()
        new = {(v, u): _outgoing(tns, v, u, msgs) for v, u in directed}
        change = max((float(np.linalg.norm(new[k] - msgs[k])) for k in directed), default=0.0)
        msgs = new
        walls.append((time.perf_counter_ns() - t0) / 1000.0)
        if change <= tol:
            return BpResult(msgs, it, True, walls, change)
    return BpResult(msgs, max_iters, False, walls, change)


def message_sqrt_pair(ctx: Context, message: np.ndarray):
    """``(M^{1/2}, M^{-1/2})``, with eigenvalues below the relative clamp set to zero."""
    h = 0.5 * (message + message.conj().T)
    w_t, v_t = L.eigh(ctx, DenseTensor._wrap(np.array(h, dtype=complex)), 1)
    w, v = w_t.data, v_t.data
    top = float(np.max(np.abs(w))) if w.size else 0.0
    keep = w > MESSAGE_CLAMP * top
    root = np.where(keep, np.sqrt(np.where(keep, w, 0.0)), 0.0)
    inv_root = np.where(keep, 1.0 / np.where(keep, root, 1.0), 0.0)
    vh = v.conj().T
    return (v * root) @ vh, (v * inv_root) @ vh


def site_density(tns: GraphTN, messages, site: int) -> np.ndarray:
    x = _absorb_messages(tns, site, messages, skip=None)
    t = tns.tensors[site]
    bonds = list(range(1, t.ndim))
    return np.tensordot(x, np.conj(t), axes=(bonds, bonds))


def measure_z(ctx: Context, tns: GraphTN, messages, site: int) -> float:
    ctx.check_alive()
    rho = site_density(tns, messages, site)
    tr = float(np.real(rho[0, 0] + rho[1, 1]))
    if abs(tr) < 1e-300:
        raise TciError(ErrorKind.SINGULAR_MATRIX, f"site {site} density has vanishing trace")
    return float(np.real(rho[0, 0] - rho[1, 1])) / tr


# --- operator application ----------------------------------------------------


def contract_tno(tns: GraphTN, tno: GraphTN) -> GraphTN:
    """Site-wise ``O_i . V_i`` with bond pairs fused as ``(operator, state)``."""
    if tns.graph is not tno.graph and tns.graph.edges != tno.graph.edges:
        raise TciError(ErrorKind.SHAPE_MISMATCH, "state and operator live on different graphs")
    out = []
    for v in range(tns.graph.n):
        o, s = tno.tensors[v], tns.tensors[v]
        d = tns.graph.degree(v)
        res = np.tensordot(o, s, axes=([1], [0]))  # (p, t_0..t_{d-1}, s_0..s_{d-1})
        perm = [0] + [a for k in range(d) for a in (1 + k, 1 + d + k)]
        res = res.transpose(perm)
        shape = [2] + [o.shape[2 + k] * s.shape[1 + k] for k in range(d)]
        out.append(np.ascontiguousarray(res.reshape(shape)))
    return GraphTN(tns.graph, out, 1)


def truncate_edge(ctx: Context, tns: GraphTN, messages, i: int, j: int, chi: int | None) -> float:
    """Regauge bond (i, j) with the message square roots and cut it to ``chi``; returns the error."""
    x, x_inv = message_sqrt_pair(ctx, messages[(i, j)])
    y, y_inv = message_sqrt_pair(ctx, messages[(j, i)])
    b = x.T @ y
    u_t, s_t, wh_t = L.svd(ctx, DenseTensor._wrap(np.ascontiguousarray(b)), 1)
    u, s, wh = u_t.data, s_t.data, wh_t.data
    s_floor = BOND_ZERO_TOL * float(s[0]) if s.size and s[0] > 0 else 0.0
    policy = L.TruncationPolicy(chi_max=chi, s_min=s_floor)
    keep, err = policy.kept(s)
    root = np.sqrt(s[:keep])
    left = (x_inv.T @ u[:, :keep]) * root  # D x keep
    right = root[:, None] * (wh[:keep] @ y_inv)  # keep x D
    ai, aj = tns.axis(i, j), tns.axis(j, i)
    tns.tensors[i] = np.moveaxis(np.tensordot(tns.tensors[i], left, axes=([ai], [0])), -1, ai)
    tns.tensors[j] = np.moveaxis(np.tensordot(right, tns.tensors[j], axes=([1], [aj])), 0, aj)
    return err


@dataclass
class ApplyResult:
    tns: GraphTN
    max_trunc_err: float
    bp: BpResult


def apply_tno(
    ctx: Context,
    tns: GraphTN,
    tno: GraphTN,
    chi: int | None,
    bp_tol: float = BP_TOL,
    bp_max_iters: int = BP_MAX_ITERS,
) -> ApplyResult:
    """Apply an operator network, BP-regauge every bond and truncate to ``chi``."""
    grown = contract_tno(tns, tno)
    bp = bp_fixed_point(ctx, grown, bp_max_iters, bp_tol)
    worst = 0.0
    for i, j in grown.graph.edges:
        worst = max(worst, truncate_edge(ctx, grown, bp.messages, i, j, chi))
    grown.check()
    return ApplyResult(grown, worst, bp)
