"""Acceptance criteria, one check per criterion.

Each ``check_N`` returns an :class:`Outcome`. Under pytest every check also
adds a "PASS/FAIL criterion N: ..." line to the terminal summary; running the
file directly prints the same lines::

    python3 tests/test_acceptance.py            # all criteria
    python3 tests/test_acceptance.py 5 8        # a subset
    python3 tests/test_acceptance.py --fingerprint --threads 4
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import math
import os
import struct
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pytest

import tci
from tci import dense as D
from tci import linalg as L
from tci import tensor_io as IO
from tci.circuit import (
    Gate,
    Graph,
    build_kim_circuit,
    edge_coloring,
    layer_to_tno,
    parse_qasm,
    path_graph,
    ring_graph,
    run_circuit,
    statevector_oracle,
    tno_to_matrix,
    tns_to_vector,
)
from tci.core import ErrorKind, TciError
from tci.dense import DenseTensor
from tci.itebd import TfimParams, pfeuty_energy, run_itebd

TOL_GOLDEN = 1e-12


@dataclass
class Outcome:
    passed: bool
    detail: str
    # deterministic numeric results, hashed for the thread-count comparison
    values: list = field(default_factory=list)
    seconds: float = 0.0


def _context(threads):
    return tci.create_context(threads=threads, verbose=0)


def _timed(limit_s, fn):
    t0 = time.perf_counter()
    ok, detail, values = fn()
    dt = time.perf_counter() - t0
    if dt >= limit_s:
        ok = False
        detail += f"; runtime {dt:.1f} s exceeds {limit_s} s"
    else:
        detail += f"; {dt:.1f} s"
    return Outcome(ok, detail, values, dt)


def _raises(kind, fn) -> bool:
    try:
        fn()
    except TciError as exc:
        return exc.kind is kind
    return False


# --- nested-loop oracles -----------------------------------------------------


def loop_contract(a, la, b, lb, lo, dims):
    """Einstein sum by explicit iteration over every label value."""
    labels = sorted(set(la) | set(lb))
    out = np.zeros([dims[x] for x in lo], dtype=np.result_type(a.dtype, b.dtype))
    for vals in itertools.product(*(range(dims[x]) for x in labels)):
        env = dict(zip(labels, vals))
        out[tuple(env[x] for x in lo)] += a[tuple(env[x] for x in la)] * b[tuple(env[x] for x in lb)]
    return out


def embed(gate: Gate, n: int) -> np.ndarray:
    """Full 2^n matrix of one gate by bit manipulation (qubit 0 most significant)."""
    u = gate.matrix()
    k = len(gate.qubits)
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = 0
        for q in gate.qubits:
            sub_in = 2 * sub_in + bits[q]
        for sub_out in range(2**k):
            if u[sub_out, sub_in] == 0:
                continue
            out_bits = list(bits)
            for pos, q in enumerate(gate.qubits):
                out_bits[q] = (sub_out >> (k - 1 - pos)) & 1
            row = 0
            for b in out_bits:
                row = 2 * row + b
            full[row, col] += u[sub_out, sub_in]
    return full


# --- criterion 1: golden examples ------------------------------------------


def _golden_cases(ctx):
    rng = np.random.Generator(np.random.MT19937(7))
    gen = lambda: rng.uniform(0.0, 1.0)  # noqa: E731
    near = lambda x, y: abs(x - y) <= TOL_GOLDEN  # noqa: E731
    cases = {}

    def case(name):
        def deco(fn):
            cases[name] = fn
            return fn

        return deco

    @case("verbose defaults to 0")
    def _():
        saved = os.environ.pop("TCI_VERBOSE", None)
        try:
            v = tci.create_context().verbose
        finally:
            if saved is not None:
                os.environ["TCI_VERBOSE"] = saved
        return v == 0, [v]

    @case("TCI_VERBOSE=2 enables timing")
    def _():
        saved = os.environ.get("TCI_VERBOSE")
        os.environ["TCI_VERBOSE"] = "2"
        try:
            c = tci.create_context()
        finally:
            if saved is None:
                del os.environ["TCI_VERBOSE"]
            else:
                os.environ["TCI_VERBOSE"] = saved
        err = io.StringIO()
        real_err, sys.stderr = sys.stderr, err
        try:
            D.eye(c, 2)
        finally:
            sys.stderr = real_err
        return c.verbose == 2 and "time_us=" in err.getvalue(), [c.verbose]

    @case("dead context rejected")
    def _():
        c = tci.create_context()
        tci.destroy_context(c)
        return _raises(ErrorKind.DEAD_CONTEXT, lambda: D.zeros(c, (2,))), []

    @case("version 1.0")
    def _():
        return tci.version() == "1.0", []

    @case("zeros get_elem")
    def _():
        t = D.zeros(ctx, (3, 4, 2))
        return t.shape == (3, 4, 2) and D.get_elem(ctx, t, (0, 2, 1)) == 0.0, []

    @case("eye elements")
    def _():
        e = D.eye(ctx, 3)
        return near(D.get_elem(ctx, e, (1, 1)), 1.0) and near(D.get_elem(ctx, e, (1, 2)), 0.0), []

    @case("fill element")
    def _():
        return near(D.get_elem(ctx, D.fill(ctx, (3, 2, 4), 2.0), (0, 1, 3)), 2.0), []

    @case("random in [0, 1)")
    def _():
        t = D.random(ctx, (3, 4, 2), gen)
        return t.shape == (3, 4, 2) and bool(np.all((t.data >= 0.0) & (t.data < 1.0))), t.data.tolist()

    @case("assign_from_range")
    def _():
        t = D.assign_from_range(ctx, (2, 3), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0], lambda c: 3 * c[0] + c[1])
        return near(D.get_elem(ctx, t, (1, 1)), 5.0), []

    @case("to_range round trip")
    def _():
        vals = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        t = D.assign_from_range(ctx, (2, 3), vals, lambda c: 3 * c[0] + c[1])
        out = [0.0] * 6
        D.to_range(ctx, t, out, lambda c: 3 * c[0] + c[1])
        return out == vals, []

    @case("move")
    def _():
        a = D.random(ctx, (2, 3), gen)
        snap = D.copy(ctx, a)
        b = D.move(ctx, a)
        return b == snap and a == DenseTensor(), []

    @case("clear")
    def _():
        a = D.eye(ctx, 2)
        D.clear(ctx, a)
        return a == DenseTensor(), []

    @case("size 24")
    def _():
        t = D.zeros(ctx, (3, 4, 2))
        return D.order(ctx, t) == 3 and D.size(ctx, t) == 24, []

    @case("size_bytes 96")
    def _():
        return D.size_bytes(ctx, D.zeros(ctx, (3, 4, 2)), 4) == 96, []

    @case("get_elem on eye")
    def _():
        e = D.eye(ctx, 3)
        return near(D.get_elem(ctx, e, (1, 1)), 1.0) and near(D.get_elem(ctx, e, (0, 1)), 0.0), []

    @case("set_elem")
    def _():
        t = D.zeros(ctx, (3, 4, 2))
        D.set_elem(ctx, t, (2, 1, 0), 1.0)
        return near(D.get_elem(ctx, t, (2, 1, 0)), 1.0), []

    @case("reshape shape")
    def _():
        return D.reshape(ctx, D.zeros(ctx, (3, 4, 2)), (4, 2, 3)).shape == (4, 2, 3), []

    @case("transpose element")
    def _():
        a = D.random(ctx, (3, 2, 4), gen)
        b = D.transpose(ctx, a, (1, 0, 2))
        return D.get_elem(ctx, a, (1, 0, 0)) == D.get_elem(ctx, b, (0, 1, 0)), []

    @case("transpose shape")
    def _():
        return D.transpose(ctx, D.zeros(ctx, (3, 2, 4)), (2, 1, 0)).shape == (4, 2, 3), []

    @case("cplx_conj")
    def _():
        z = DenseTensor(rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
        zc = D.cplx_conj(ctx, z)
        ok = all(np.conj(D.get_elem(ctx, z, c)) == D.get_elem(ctx, zc, c) for c in itertools.product(range(2), range(3)))
        return ok, []

    @case("to_cplx")
    def _():
        v = D.get_elem(ctx, D.to_cplx(ctx, D.eye(ctx, 3)), (1, 1))
        return isinstance(v, complex) and abs(v - (1.0 + 0.0j)) <= TOL_GOLDEN, []

    @case("imag of real")
    def _():
        im = D.imag(ctx, D.random(ctx, (2, 3), gen))
        return im.shape == (2, 3) and bool(np.all(im.data == 0.0)), []

    @case("expand shape")
    def _():
        return D.expand(ctx, D.zeros(ctx, (2, 2, 2)), {1: 2, 0: 1}).shape == (3, 4, 2), []

    @case("expand padding")
    def _():
        return D.get_elem(ctx, D.expand(ctx, D.zeros(ctx, (2, 2, 2)), {1: 2, 0: 1}), (2, 3, 0)) == 0.0, []

    @case("shrink")
    def _():
        a = D.random(ctx, (3, 4, 2), gen)
        s = D.shrink(ctx, a, {1: (1, 3), 0: (0, 2)})
        return s.shape == (2, 2, 2) and D.get_elem(ctx, a, (0, 1, 1)) == D.get_elem(ctx, s, (0, 0, 1)), []

    @case("extract_sub")
    def _():
        a = D.random(ctx, (3, 4, 2), gen)
        sub = D.extract_sub(ctx, a, [(1, 3), (0, 2), (0, 2)])
        return D.get_elem(ctx, a, (1, 0, 0)) == D.get_elem(ctx, sub, (0, 0, 0)), []

    @case("replace_sub")
    def _():
        sub = D.random(ctx, (2, 2, 2), gen)
        t = D.replace_sub(ctx, D.zeros(ctx, (3, 4, 2)), sub, (1, 2, 0))
        return D.get_elem(ctx, t, (1, 2, 0)) == D.get_elem(ctx, sub, (0, 0, 0)), []

    @case("concatenate shape")
    def _():
        a, b, c = (D.random(ctx, (2, 3, 4), gen) for _ in range(3))
        # {2,6,4} is the two-input result; three inputs sum to 9 along bond 1
        two = D.concatenate(ctx, [a, b], 1).shape
        three = D.concatenate(ctx, [a, b, c], 1).shape
        return two == (2, 6, 4) and three == (2, 9, 4), []

    @case("concatenate offset")
    def _():
        a, b, c = (D.random(ctx, (2, 3, 4), gen) for _ in range(3))
        d = D.concatenate(ctx, [a, b, c], 1)
        return D.get_elem(ctx, b, (0, 0, 0)) == D.get_elem(ctx, d, (0, 3, 0)), []

    @case("stack shape")
    def _():
        ts = [D.random(ctx, (2, 3, 4), gen) for _ in range(3)]
        return D.stack(ctx, ts, 1).shape == (2, 3, 3, 4), []

    @case("stack element")
    def _():
        ts = [D.random(ctx, (2, 3, 4), gen) for _ in range(3)]
        return D.get_elem(ctx, ts[1], (0, 2, 3)) == D.get_elem(ctx, D.stack(ctx, ts, 1), (0, 1, 2, 3)), []

    @case("for_each total")
    def _():
        acc = []
        D.for_each(ctx, D.eye(ctx, 3), acc.append)
        return near(sum(acc), 3.0), [sum(acc)]

    @case("for_each mutate")
    def _():
        e = D.eye(ctx, 3)
        D.for_each(ctx, e, lambda v: v + 1.0, mutate=True)
        return near(D.get_elem(ctx, e, (1, 1)), 2.0), []

    @case("for_each_with_coors")
    def _():
        e = D.eye(ctx, 3)
        D.for_each_with_coors(ctx, e, lambda v, c: v + c[0], mutate=True)
        return near(D.get_elem(ctx, e, (1, 1)), 2.0), []

    @case("norm of eye")
    def _():
        n = L.norm(ctx, D.eye(ctx, 3))
        return near(n, math.sqrt(3.0)), [n]

    @case("normalize")
    def _():
        t, _ = L.normalize(ctx, D.random(ctx, (3, 4, 2), gen))
        n = L.norm(ctx, t)
        return near(n, 1.0), [n]

    @case("scale 3 then -2")
    def _():
        e = L.scale(ctx, D.eye(ctx, 3), 3.0)
        e2 = L.scale(ctx, e, -2.0)
        return near(D.get_elem(ctx, e, (2, 2)), 3.0) and near(D.get_elem(ctx, e2, (2, 2)), -6.0), []

    @case("diag extract")
    def _():
        d = L.diag(ctx, D.eye(ctx, 3))
        return d.order == 1 and d.shape == (3,) and bool(np.all(np.abs(d.data - 1.0) <= TOL_GOLDEN)), []

    @case("diag round trip")
    def _():
        return L.diag(ctx, L.diag(ctx, D.eye(ctx, 3))) == D.eye(ctx, 3), []

    @case("trace shape")
    def _():
        return L.trace(ctx, D.zeros(ctx, (3, 4, 2, 4, 2)), [(1, 3), (2, 4)]).shape == (3,), []

    @case("contract shape")
    def _():
        a, b = D.random(ctx, (3, 4, 2), gen), D.random(ctx, (2, 4, 5), gen)
        return L.contract(ctx, a, "ijk", b, "kjl", "li").shape == (5, 3), []

    @case("exp of eye")
    def _():
        e = L.mat_exp(ctx, D.eye(ctx, 3), 1)
        return all(near(D.get_elem(ctx, e, (i, i)), math.e) for i in range(3)), [D.get_elem(ctx, e, (0, 0))]

    @case("inverse of eye")
    def _():
        inv = L.mat_inverse(ctx, D.eye(ctx, 3), 1)
        return inv.shape == (3, 3) and float(np.max(np.abs(inv.data - np.eye(3)))) <= TOL_GOLDEN, []

    @case("eig vector shape")
    def _():
        _, v = L.eig_general(ctx, D.random(ctx, (3, 4, 12), gen), 2)
        return v.shape == (3, 4, 12), []

    @case("close false")
    def _():
        b = D.eye(ctx, 3)
        D.set_elem(ctx, b, (0, 0), 1.0 + 1e-5)
        return IO.close(ctx, D.eye(ctx, 3), b, 1e-6) is False, []

    @case("close true")
    def _():
        b = D.eye(ctx, 3)
        D.set_elem(ctx, b, (0, 0), 1.0 + 1e-5)
        return IO.close(ctx, D.eye(ctx, 3), b, 1e-4) is True, []

    @case("convert promotes")
    def _():
        r = D.random(ctx, (4, 4), gen)
        z = IO.convert(ctx, r, tci.create_context(), "complex")
        return z.is_complex and bool(np.all(z.data.imag == 0.0)), []

    @case("convert copies")
    def _():
        r = D.random(ctx, (4, 4), gen)
        c = IO.convert(ctx, r, tci.create_context())
        return c == r and c.data is not r.data, []

    @case("qasm angles")
    def _():
        c = parse_qasm("OPENQASM 2.0; qreg q[2]; rx(0.7*pi) q[0]; rzz(pi/4) q[0],q[1];")
        th = [g.theta for g in c.operations()]
        return len(th) == 2 and near(th[0], 0.7 * math.pi) and near(th[1], 0.25 * math.pi), th

    return cases


def check_1(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        failed, values = [], []
        with ctx.thread_scope():
            cases = _golden_cases(ctx)
            for name, fn in cases.items():
                ok, vals = fn()
                values.extend(vals)
                if not ok:
                    failed.append(name)
        detail = f"{len(cases) - len(failed)}/{len(cases)} golden examples"
        if failed:
            detail += " (failed: " + ", ".join(failed) + ")"
        return not failed and len(cases) >= 25, detail, values

    return _timed(5, body)


# --- criterion 2: truncated-state fidelity ---------------------------------


def check_2(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        worst, values = 0.0, []
        with ctx.thread_scope():
            for seed in range(50):
                engine = np.random.Generator(np.random.MT19937(seed))
                psi = D.random(ctx, (2,) * 6, lambda: engine.uniform(-1.0, 1.0))
                L.normalize(ctx, psi, inplace=True)
                _, s, _ = L.svd(ctx, psi, 3)
                ee = []
                D.for_each(ctx, s, lambda v: ee.append(-(v * v) * math.log(v * v)) if v > 0 else None)
                bee = sum(ee)
                oracle_bee = float(-np.sum(s.data**2 * np.log(s.data**2)))
                worst = max(worst, abs(bee - oracle_bee))
                u, s, vt, err = L.trunc_svd(ctx, psi, 3, 2, 0.0)
                sm = L.diag(ctx, s)
                psi1 = L.contract(ctx, u, "ijkl", sm, "lm", "ijkm")
                psi1 = L.contract(ctx, psi1, "ijkl", vt, "lmno", "ijkmno")
                psi1, _ = L.normalize(ctx, psi1)
                ovlp = D.get_elem(ctx, L.contract(ctx, psi, "ijklmn", psi1, "ijklmn", ""), ())
                fide = ovlp * ovlp
                worst = max(worst, abs(fide - (1.0 - err)))
                values += [bee, err, fide]
        return worst <= 1e-10, f"max |fidelity - (1 - trunc_err)| = {worst:.2e} over 50 seeds", values

    return _timed(5, body)


# --- criterion 3: contraction oracle ---------------------------------------


def _random_contraction(rng):
    while True:
        n_shared, n_a, n_b = (int(x) for x in rng.integers(0, 4, size=3))
        if 1 <= n_shared + n_a <= 4 and 1 <= n_shared + n_b <= 4:
            break
    names = list("abcdefgh")
    rng.shuffle(names)
    shared, free_a, free_b = names[:n_shared], names[n_shared : n_shared + n_a], names[n_shared + n_a : n_shared + n_a + n_b]
    dims = {x: int(rng.integers(1, 6)) for x in shared + free_a + free_b}
    la = list(rng.permutation(shared + free_a))
    lb = list(rng.permutation(shared + free_b))
    lo = list(rng.permutation(free_a + free_b))
    return "".join(la), "".join(lb), "".join(lo), dims


def check_3(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        rng = np.random.Generator(np.random.MT19937(2024))
        worst, values = 0.0, []
        with ctx.thread_scope():
            for k in range(200):
                la, lb, lo, dims = _random_contraction(rng)
                cplx = k % 2 == 1
                a = rng.normal(size=[dims[x] for x in la])
                b = rng.normal(size=[dims[x] for x in lb])
                if cplx:
                    a = a + 1j * rng.normal(size=a.shape)
                    b = b + 1j * rng.normal(size=b.shape)
                got = L.contract(ctx, DenseTensor(a), la, DenseTensor(b), lb, lo).data
                ref = loop_contract(a, la, b, lb, lo, dims)
                scale = max(float(np.linalg.norm(ref)), 1e-300)
                worst = max(worst, float(np.linalg.norm(got - ref)) / scale)
                values.append(got)
        return worst <= 1e-12, f"max relative Frobenius error {worst:.2e} over 200 contractions", values

    return _timed(30, body)


# --- criterion 4: decompositions -------------------------------------------


def check_4(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        rng = np.random.Generator(np.random.MT19937(4242))
        worst = {"orth": 0.0, "recon": 0.0, "eig": 0.0, "exp": 0.0}
        values = []
        with ctx.thread_scope():
            for k in range(100):
                rows, cols = (int(x) for x in rng.integers(1, 25, size=2))
                cplx = k % 2 == 1
                m = rng.normal(size=(rows, cols))
                if cplx:
                    m = m + 1j * rng.normal(size=(rows, cols))
                a = DenseTensor(m)
                nrm = np.linalg.norm(m)
                kappa = min(rows, cols)

                u, s, vh = L.svd(ctx, a, 1)
                worst["orth"] = max(worst["orth"], np.max(np.abs(u.data.conj().T @ u.data - np.eye(kappa))), np.max(np.abs(vh.data @ vh.data.conj().T - np.eye(kappa))))
                worst["recon"] = max(worst["recon"], np.linalg.norm((u.data * s.data) @ vh.data - m) / nrm)
                q, r = L.qr(ctx, a, 1)
                worst["orth"] = max(worst["orth"], np.max(np.abs(q.data.conj().T @ q.data - np.eye(kappa))))
                worst["recon"] = max(worst["recon"], np.linalg.norm(q.data @ r.data - m) / nrm)
                lo, q2 = L.lq(ctx, a, 1)
                worst["orth"] = max(worst["orth"], np.max(np.abs(q2.data @ q2.data.conj().T - np.eye(kappa))))
                worst["recon"] = max(worst["recon"], np.linalg.norm(lo.data @ q2.data - m) / nrm)
                values += [s.data, r.data]

                n = rows
                sq = m[:, :n] if cols >= n else np.pad(m, ((0, 0), (0, n - cols)))
                h = sq + sq.conj().T
                w, v = L.eig_hermitian(ctx, DenseTensor(h), 1)
                worst["orth"] = max(worst["orth"], np.max(np.abs(v.data.conj().T @ v.data - np.eye(n))))
                hn = max(np.linalg.norm(h), 1e-300)
                for i in range(n):
                    worst["eig"] = max(worst["eig"], np.linalg.norm(h @ v.data[:, i] - w.data[i] * v.data[:, i]) / hn)
                wg, vg = L.eig_general(ctx, DenseTensor(sq), 1)
                sn = max(np.linalg.norm(sq), 1e-300)
                for i in range(n):
                    worst["eig"] = max(worst["eig"], np.linalg.norm(sq @ vg.data[:, i] - wg.data[i] * vg.data[:, i]) / sn)
                values += [w.data, wg.data]

                x = sq / np.linalg.norm(sq, 2) * rng.uniform(0.05, 1.0)
                p = L.mat_exp(ctx, DenseTensor(x), 1).data @ L.mat_exp(ctx, DenseTensor(-x), 1).data
                worst["exp"] = max(worst["exp"], np.max(np.abs(p - np.eye(n))))
                values.append(p)
        ok = worst["orth"] <= 1e-12 and worst["recon"] <= 1e-11 and worst["eig"] <= 1e-9 and worst["exp"] <= 1e-10
        detail = (
            f"orthogonality {worst['orth']:.1e}, reconstruction {worst['recon']:.1e}, "
            f"eigen-residual {worst['eig']:.1e}, exp(A)exp(-A)-I {worst['exp']:.1e}"
        )
        return bool(ok), detail, values

    return _timed(60, body)


# --- criterion 5: iTEBD physics ---------------------------------------------


def check_5(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        exact = pfeuty_energy(1.0)
        energies = {}
        for chi in (4, 8, 16):
            energies[chi] = run_itebd(ctx, TfimParams(g=1.0, chi=chi)).energy
        err16 = abs(energies[16] - exact)
        mono = energies[8] <= energies[4] + 1e-9 and energies[16] <= energies[8] + 1e-9
        detail = (
            f"E(chi=16) = {energies[16]:.9f}, oracle {exact:.9f}, |diff| = {err16:.2e}; "
            f"E(4) = {energies[4]:.9f}, E(8) = {energies[8]:.9f} ({'monotone' if mono else 'NOT monotone'})"
        )
        return err16 <= 1e-4 and mono, detail, [energies[c] for c in (4, 8, 16)]

    return _timed(120, body)


# --- criteria 6 and 7: exactness against the statevector oracle ------------


def check_6(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        g = path_graph(10)
        circ = build_kim_circuit(g, 0.7 * math.pi, 0.25 * math.pi, 3)
        res = run_circuit(ctx, circ, g, None, 1 + len(edge_coloring(g)))
        amps = tns_to_vector(res.tns)
        exact, _ = statevector_oracle(circ)
        err = float(np.max(np.abs(amps - exact)))
        return err <= 1e-8, f"max amplitude error {err:.2e} over 1024 amplitudes", [amps]

    return _timed(60, body)


def check_7(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        g = ring_graph(12)
        circ = build_kim_circuit(g, 0.7 * math.pi, 0.25 * math.pi, 2)
        res = run_circuit(ctx, circ, g, 64, 1 + len(edge_coloring(g)))
        _, z = statevector_oracle(circ)
        err = float(np.max(np.abs(res.z - z)))
        trunc = max(r.max_trunc_err for r in res.rows)
        return err <= 1e-6, f"max |<Z> - oracle| = {err:.2e} (max truncation error {trunc:.1e})", [res.z]

    return _timed(120, body)


# --- criterion 8: heavy-hex run and BP cost ---------------------------------


def check_8(threads=None) -> Outcome:
    from tci.cli import main

    def run(chi, cycles, out):
        argv = ["kim", "--lattice", "heavyhex:2", "--cycles", str(cycles), "--chi", str(chi), "--out", str(out)]
        if threads:
            argv = ["--threads", str(threads)] + argv
        real_out, sys.stdout = sys.stdout, io.StringIO()
        try:
            return main(argv)
        finally:
            sys.stdout = real_out

    def body():
        # At small chi a BP iteration costs about a millisecond of interpreter
        # overhead, so one-off warm-up and scheduler noise matter.  An unmeasured
        # warm-up run goes first; then every chi runs in each of two interleaved
        # rounds and keeps its lower per-iteration mean.
        per_iter = {}
        rows32 = 0
        with tempfile.TemporaryDirectory() as tmp:
            run(4, 1, Path(tmp) / "warmup.csv")
            for _ in range(2):
                for chi in (4, 8, 16, 32):
                    out = Path(tmp) / f"kim_chi{chi}.csv"
                    code = run(chi, 10, out)
                    if code != 0:
                        return False, f"kim run at chi={chi} exited with {code}", []
                    table = list(csv.DictReader(out.open()))
                    iters = sum(int(r["bp_iters"]) for r in table)
                    wall = sum(int(r["bp_iters"]) * float(r["wall_us_per_bp_iter"]) for r in table)
                    per_iter[chi] = min(per_iter.get(chi, math.inf), wall / iters)
                    if chi == 32:
                        rows32 = len(table)
        chis = sorted(per_iter)
        mono = all(per_iter[b] >= 0.8 * per_iter[a] for a, b in zip(chis, chis[1:]))
        listing = ", ".join(f"chi={c}: {per_iter[c]:.0f} us" for c in chis)
        ok = rows32 == 10 and mono
        return ok, f"{rows32} CSV rows at chi=32; best-of-2 mean wall per BP iteration {listing}", []

    return _timed(300, body)


# --- criterion 9: TNO faithfulness ------------------------------------------


def _random_layer(rng, n):
    layer = [Gate(str(rng.choice(["rx", "rz"])), (q,), float(rng.uniform(-math.pi, math.pi))) for q in range(n) if rng.random() < 0.7]
    free = list(rng.permutation(n))
    while len(free) >= 2 and rng.random() < 0.8:
        i, j = int(free.pop()), int(free.pop())
        layer.append(Gate("rzz", (i, j), float(rng.uniform(-math.pi, math.pi))))
    rng.shuffle(layer)
    return layer


def check_9(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        rng = np.random.Generator(np.random.MT19937(99))
        worst, values = 0.0, []
        with ctx.thread_scope():
            for k in range(50):
                n = int(rng.integers(2, 5))
                graphs = [path_graph(n)] + ([ring_graph(n), Graph(n, [(0, v) for v in range(1, n)])] if n >= 3 else [])
                g = graphs[k % len(graphs)]
                layers = [_random_layer(rng, n), _random_layer(rng, n)]
                product = np.eye(2**n, dtype=complex)
                tno_product = np.eye(2**n, dtype=complex)
                for layer in layers:
                    expected = np.eye(2**n, dtype=complex)
                    for gate in layer:
                        expected = embed(gate, n) @ expected
                    got = tno_to_matrix(layer_to_tno(ctx, layer, g))
                    worst = max(worst, float(np.max(np.abs(got - expected))))
                    product = expected @ product
                    tno_product = got @ tno_product
                    values.append(got)
                worst = max(worst, float(np.max(np.abs(tno_product - product))))
        return worst <= 1e-12, f"max |TNO - gate product| = {worst:.2e} over 50 two-layer circuits", values

    return _timed(30, body)


# --- criterion 10: persistence ----------------------------------------------


def check_10(threads=None) -> Outcome:
    def body():
        ctx = _context(threads)
        rng = np.random.Generator(np.random.MT19937(10))
        bad = 0
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "t.tcit"
            for k in range(100):
                shape = tuple(int(d) for d in rng.integers(1, 6, size=int(rng.integers(0, 5))))
                arr = rng.normal(size=shape) * 10.0 ** float(rng.integers(-200, 200))
                if k % 2:
                    arr = arr + 1j * rng.normal(size=shape)
                if k % 10 == 0 and arr.size > 1:
                    flat = arr.reshape(-1)
                    flat[0], flat[-1] = -0.0, np.inf
                t = DenseTensor(arr)
                IO.save(ctx, t, path)
                back = IO.load(ctx, path)
                if back.dtype != t.dtype or back.shape != t.shape or back.data.tobytes() != t.data.tobytes():
                    bad += 1
            good = IO.encode(D.eye(ctx, 3))
            corruptions = {
                "magic": b"XXXX" + good[4:],
                "version": good[:4] + struct.pack("<I", 2) + good[8:],
                "kind": good[:8] + b"\x09" + good[9:],
                "order": good[:16] + struct.pack("<Q", 7) + good[24:],
                "zero dim": good[:24] + struct.pack("<Q", 0) + good[32:],
                "truncated header": good[:12],
                "truncated payload": good[:-8],
                "trailing bytes": good + b"\x00",
            }
            missed = []
            for name, blob in corruptions.items():
                path.write_bytes(blob)
                if not _raises(ErrorKind.PARSE_FAILURE, lambda: IO.load(ctx, path)):
                    missed.append(name)
        ok = bad == 0 and not missed
        detail = f"{100 - bad}/100 bit-exact round trips; {len(corruptions) - len(missed)}/{len(corruptions)} corrupt files rejected"
        if missed:
            detail += " (accepted: " + ", ".join(missed) + ")"
        return ok, detail, []

    return _timed(5, body)


# --- criterion 11: thread-count determinism ---------------------------------

DETERMINISM_CHECKS = (1, 2, 3, 4, 5, 6, 7)


def _digest(values) -> str:
    h = hashlib.sha256()
    for v in values:
        a = np.asarray(v)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def fingerprint(threads) -> dict[int, str]:
    return {n: _digest(CHECKS[n](threads).values) for n in DETERMINISM_CHECKS}


def check_11(threads=None) -> Outcome:
    def body():
        script = Path(__file__).resolve()
        procs = {
            w: subprocess.run(
                [sys.executable, str(script), "--fingerprint", "--threads", str(w)],
                capture_output=True,
                text=True,
                timeout=900,
            )
            for w in (1, 4)
        }
        prints = {}
        for w, p in procs.items():
            if p.returncode != 0:
                return False, f"fingerprint run with {w} workers failed: {p.stderr.strip()[-300:]}", []
            prints[w] = dict(line.split("=", 1) for line in p.stdout.split())
        differ = [n for n in prints[1] if prints[1][n] != prints[4].get(n)]
        ok = not differ and len(prints[1]) == len(DETERMINISM_CHECKS)
        from tci.core import usable_cores

        detail = "criteria 1-7 bit-identical at 1 and 4 workers" if ok else f"results differ for criteria {differ}"
        detail += f" ({usable_cores()} usable core(s) cap the BLAS pool)"
        return ok, detail, []

    return _timed(900, body)


CHECKS = {
    1: check_1,
    2: check_2,
    3: check_3,
    4: check_4,
    5: check_5,
    6: check_6,
    7: check_7,
    8: check_8,
    9: check_9,
    10: check_10,
    11: check_11,
}

TITLES = {
    1: "golden examples",
    2: "truncated-state fidelity",
    3: "contraction oracle",
    4: "decomposition residuals",
    5: "iTEBD critical energy",
    6: "BP exactness on a tree",
    7: "loopy no-truncation exactness",
    8: "heavy-hex run and BP cost scaling",
    9: "TNO faithfulness",
    10: "persistence",
    11: "thread-count determinism",
}


def report_line(n: int, outcome: Outcome) -> str:
    return f"{'PASS' if outcome.passed else 'FAIL'} criterion {n} ({TITLES[n]}): {outcome.detail}"


@pytest.mark.parametrize("n", sorted(CHECKS))
def test_criterion(n):
    from conftest import ACCEPTANCE_LINES

    outcome = CHECKS[n]()
    line = report_line(n, outcome)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert outcome.passed, line


def _main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Run the acceptance criteria.")
    parser.add_argument("criteria", nargs="*", type=int, help="criterion numbers (default: all)")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--fingerprint", action="store_true", help="print digests of criteria 1-7 results")
    args = parser.parse_args(argv)
    if args.fingerprint:
        for n, digest in fingerprint(args.threads).items():
            print(f"{n}={digest}")
        return 0
    failed = 0
    for n in args.criteria or sorted(CHECKS):
        outcome = CHECKS[n](args.threads)
        print(report_line(n, outcome), flush=True)
        failed += not outcome.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(_main())
