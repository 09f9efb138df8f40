"""Exact dense statevector simulation, used as the reference for small circuits."""

from __future__ import annotations

import numpy as np

from ..core import ErrorKind, TciError
from .gates import Circuit

MAX_QUBITS = 20


def simulate(circuit: Circuit) -> np.ndarray:
    """Final amplitudes from |0...0>, qubit 0 most significant."""
    n = circuit.num_qubits
    if n > MAX_QUBITS:
        raise TciError(ErrorKind.UNSUPPORTED, f"statevector limited to {MAX_QUBITS} qubits, got {n}")
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for g in circuit.gates:
        if g.is_barrier:
            continue
        k = len(g.qubits)
        u = g.matrix().reshape((2,) * (2 * k))
        psi = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), list(g.qubits)))
        psi = np.moveaxis(psi, list(range(k)), list(g.qubits))
    return psi.reshape(-1)


def z_expectations(amplitudes: np.ndarray, n: int) -> np.ndarray:
    probs = np.abs(amplitudes.reshape((2,) * n)) ** 2
    out = np.empty(n)
    for q in range(n):
        marg = probs.sum(axis=tuple(a for a in range(n) if a != q))
        out[q] = marg[0] - marg[1]
    return out / probs.sum()


def amplitude(amplitudes: np.ndarray, bits) -> complex:
    idx = 0
    for b in bits:
        idx = 2 * idx + int(b)
    return complex(amplitudes[idx])


def statevector_oracle(circuit: Circuit):
    """``(amplitudes, <Z_i> per qubit)``."""
    amps = simulate(circuit)
    return amps, z_expectations(amps, circuit.num_qubits)
