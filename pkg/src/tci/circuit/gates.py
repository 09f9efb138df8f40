"""Gate and circuit records plus the rotation-gate matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import ErrorKind, TciError

ONE_QUBIT = ("rx", "rz")
TWO_QUBIT = ("rzz",)


@dataclass(frozen=True)
class Gate:
    kind: str  # "rx" | "rz" | "rzz" | "barrier"
    qubits: tuple[int, ...]
    theta: float | None = None

    @property
    def is_barrier(self) -> bool:
        return self.kind == "barrier"

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT

    def matrix(self) -> np.ndarray:
        """Unitary with qubit order as in ``qubits`` (first qubit most significant)."""
        return gate_matrix(self.kind, self.theta)


def gate_matrix(kind: str, theta: float) -> np.ndarray:
    half = 0.5 * theta
    if kind == "rx":
        c, s = math.cos(half), math.sin(half)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "rz":
        return np.diag([np.exp(-1j * half), np.exp(1j * half)])
    if kind == "rzz":
        a, b = np.exp(-1j * half), np.exp(1j * half)
        return np.diag([a, b, b, a])
    raise TciError(ErrorKind.UNSUPPORTED, f"no matrix for gate {kind!r}")


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)
    # optional coupling graph as sorted (i, j) pairs with i < j
    coupling: list[tuple[int, int]] | None = None

    def add(self, gate: Gate) -> None:
        for q in gate.qubits:
            if not 0 <= q < self.num_qubits:
                raise TciError(ErrorKind.OUT_OF_RANGE, f"qubit {q} outside register of {self.num_qubits}")
        if len(set(gate.qubits)) != len(gate.qubits):
            raise TciError(ErrorKind.LABEL_CONFLICT, f"repeated qubit in {gate.kind} {list(gate.qubits)}")
        self.gates.append(gate)

    def barrier(self) -> None:
        self.gates.append(Gate("barrier", tuple(range(self.num_qubits))))

    def operations(self) -> list[Gate]:
        return [g for g in self.gates if not g.is_barrier]

    def interaction_edges(self) -> list[tuple[int, int]]:
        """Distinct qubit pairs touched by two-qubit gates, sorted."""
        pairs = {tuple(sorted(g.qubits)) for g in self.gates if g.is_two_qubit}
        return sorted(pairs)


def layerize(circuit: Circuit) -> list[list[Gate]]:
    """Split the program at barriers; empty groups are dropped.

    Two-qubit gates inside one group must touch disjoint qubits.
    """
    groups: list[list[Gate]] = []
    current: list[Gate] = []

    def flush():
        if current:
            groups.append(list(current))
            current.clear()

    for g in circuit.gates:
        if g.is_barrier:
            flush()
        else:
            current.append(g)
    flush()
    for group in groups:
        used: set[int] = set()
        for g in group:
            if not g.is_two_qubit:
                continue
            clash = used.intersection(g.qubits)
            if clash:
                raise TciError(
                    ErrorKind.LABEL_CONFLICT,
                    f"two-qubit gates share qubit {min(clash)} within one barrier-free group",
                )
            used.update(g.qubits)
    return groups
