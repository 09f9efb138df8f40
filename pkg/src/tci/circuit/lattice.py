"""Coupling graphs, edge coloring and the kicked-Ising circuit builder."""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable

from .gates import Circuit, Gate

KIM_THETA_X = 0.7 * math.pi
KIM_THETA_ZZ = 0.25 * math.pi


class Graph:
    """Undirected simple graph on vertices ``0..n-1`` with sorted adjacency."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        self.n = int(n)
        self._adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in edges:
            self.add_edge(u, v)

    def add_edge(self, u: int, v: int) -> None:
        if u == v or not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"invalid edge ({u}, {v}) for {self.n} vertices")
        self._adj[u].add(v)
        self._adj[v].add(u)

    def neighbors(self, v: int) -> list[int]:
        return sorted(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for u in range(self.n) for v in self._adj[u] if u < v)

    def max_degree(self) -> int:
        return max((len(a) for a in self._adj), default=0)

    def shortest_path(self, src: int, dst: int) -> list[int]:
        """BFS path; neighbors are expanded in increasing index order."""
        prev = {src: None}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if u == dst:
                break
            for w in self.neighbors(u):
                if w not in prev:
                    prev[w] = u
                    queue.append(w)
        if dst not in prev:
            raise ValueError(f"vertices {src} and {dst} are disconnected")
        path = [dst]
        while path[-1] != src:
            path.append(prev[path[-1]])
        return path[::-1]

    def diameter(self) -> int:
        best = 0
        for s in range(self.n):
            dist = {s: 0}
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for w in self._adj[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        queue.append(w)
            best = max(best, max(dist.values()))
        return best

    def is_tree(self) -> bool:
        if len(self.edges) != self.n - 1:
            return False
        try:
            return all(self.shortest_path(0, v) for v in range(self.n))
        except ValueError:
            return False


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def ring_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("a ring needs at least 3 vertices")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def heavy_hex_graph(rows: int, cols: int = 7) -> Graph:
    """Heavy-hex fragment: ``rows`` lines of ``cols`` qubits joined by bridge qubits.

    Between line r and r+1 a bridge qubit sits under every column c with
    ``c % 4 == 1`` (r even) or ``c % 4 == 3`` (r odd). ``rows=8, cols=16``
    gives the 156-qubit layout; ``rows=2, cols=7`` a 16-qubit fragment.
    """
    if rows < 1 or cols < 2:
        raise ValueError("heavy-hex needs rows >= 1 and cols >= 2")

    def line(r: int, c: int) -> int:
        return r * cols + c

    edges = []
    for r in range(rows):
        edges.extend((line(r, c), line(r, c + 1)) for c in range(cols - 1))
    nxt = rows * cols
    for r in range(rows - 1):
        offset = 1 if r % 2 == 0 else 3
        for c in range(offset, cols, 4):
            edges.append((line(r, c), nxt))
            edges.append((nxt, line(r + 1, c)))
            nxt += 1
    return Graph(nxt, edges)


def parse_lattice(text: str) -> Graph:
    """``heavyhex:R``, ``heavyhex:RxC``, ``ring:N`` or ``path:N``."""
    kind, _, arg = text.partition(":")
    if not arg:
        raise ValueError(f"lattice {text!r} needs a size, e.g. ring:12")
    if kind == "heavyhex":
        r, _, c = arg.partition("x")
        return heavy_hex_graph(int(r), int(c) if c else 7)
    n = int(arg)
    if kind == "ring":
        return ring_graph(n)
    if kind == "path":
        if n < 2:
            raise ValueError("a path needs at least 2 vertices")
        return path_graph(n)
    raise ValueError(f"unknown lattice kind {kind!r}")


def edge_coloring(graph: Graph) -> list[list[tuple[int, int]]]:
    """Proper edge coloring, returned as color classes of sorted edges.

    Edges are colored in sorted order. A conflict is repaired by flipping a
    two-color alternating path, which always succeeds on bipartite graphs
    (giving max-degree many colors); otherwise a fresh color is opened.
    """
    color_at: list[dict[int, tuple[int, int]]] = [dict() for _ in range(graph.n)]
    coloring: dict[tuple[int, int], int] = {}

    def free(v: int) -> int:
        c = 0
        while c in color_at[v]:
            c += 1
        return c

    def assign(e, c):
        coloring[e] = c
        color_at[e[0]][c] = e
        color_at[e[1]][c] = e

    for e in graph.edges:
        u, v = e
        a, b = free(u), free(v)
        if a not in color_at[v]:
            assign(e, a)
            continue
        # walk the a/b alternating path from v; flipping it frees a at v
        path = []
        x, col = v, a
        while col in color_at[x]:
            f = color_at[x][col]
            path.append(f)
            x = f[0] if f[1] == x else f[1]
            col = b if col == a else a
        if any(u in f for f in path):
            c = 0
            while c in color_at[u] or c in color_at[v]:
                c += 1
            assign(e, c)
            continue
        for f in path:
            old = coloring[f]
            del color_at[f[0]][old]
            del color_at[f[1]][old]
        for f in path:
            assign(f, b if coloring[f] == a else a)
        assign(e, a)
    used = sorted(set(coloring.values()))
    return [sorted(e for e, c in coloring.items() if c == col) for col in used]


def build_kim_circuit(graph: Graph, theta_x: float = KIM_THETA_X, theta_zz: float = KIM_THETA_ZZ, cycles: int = 1) -> Circuit:
    """Kicked-Ising Floquet circuit: per cycle an Rx layer, then one Rzz layer per edge color."""
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    circ = Circuit(graph.n, coupling=graph.edges)
    layers = edge_coloring(graph)
    for m in range(cycles):
        if m:
            circ.barrier()
        for q in range(graph.n):
            circ.add(Gate("rx", (q,), theta_x))
        for group in layers:
            circ.barrier()
            for i, j in group:
                circ.add(Gate("rzz", (i, j), theta_zz))
    return circ


def coupling_graph(circuit: Circuit) -> Graph:
    """Graph from the circuit's declared coupling, else from its two-qubit gates."""
    edges = circuit.coupling if circuit.coupling is not None else circuit.interaction_edges()
    return Graph(circuit.num_qubits, edges)
