"""Circuit ingestion and graph tensor-network simulation."""

from .gates import Circuit, Gate, gate_matrix, layerize
from .graphtn import (
    GraphTN,
    apply_tno,
    bp_fixed_point,
    identity_tno,
    layer_to_tno,
    measure_z,
    message_sqrt_pair,
    product_state,
    tno_to_matrix,
    tns_to_vector,
)
from .kim import evolve, run_circuit
from .lattice import Graph, build_kim_circuit, edge_coloring, heavy_hex_graph, parse_lattice, path_graph, ring_graph
from .qasm import parse_qasm
from .statevector import statevector_oracle

__all__ = [
    "Circuit",
    "Gate",
    "Graph",
    "GraphTN",
    "apply_tno",
    "bp_fixed_point",
    "build_kim_circuit",
    "edge_coloring",
    "evolve",
    "gate_matrix",
    "heavy_hex_graph",
    "identity_tno",
    "layer_to_tno",
    "layerize",
    "measure_z",
    "message_sqrt_pair",
    "parse_lattice",
    "parse_qasm",
    "path_graph",
    "product_state",
    "ring_graph",
    "run_circuit",
    "statevector_oracle",
    "tno_to_matrix",
    "tns_to_vector",
]
