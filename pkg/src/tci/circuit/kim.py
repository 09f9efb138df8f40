"""Layer-by-layer circuit evolution of a graph tensor-network state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Context
from .gates import Circuit, Gate, layerize
from .graphtn import BP_MAX_ITERS, BP_TOL, GraphTN, apply_tno, bp_fixed_point, layer_to_tno, measure_z, product_state
from .lattice import Graph


@dataclass
class CycleRow:
    cycle: int
    bp_iters: int
    wall_us_per_bp_iter: float
    max_trunc_err: float
    mean_z: float


@dataclass
class EvolutionResult:
    tns: GraphTN
    rows: list[CycleRow] = field(default_factory=list)
    bp_iter_wall_us: list[float] = field(default_factory=list)
    z: np.ndarray | None = None
    bp_converged: bool = True


def split_cycles(groups: list[list[Gate]], layers_per_cycle: int) -> list[list[list[Gate]]]:
    return [groups[k : k + layers_per_cycle] for k in range(0, len(groups), layers_per_cycle)]


def evolve(
    ctx: Context,
    cycles: list[list[list[Gate]]],
    graph: Graph,
    chi: int | None,
    bp_tol: float = BP_TOL,
    bp_max_iters: int = BP_MAX_ITERS,
) -> EvolutionResult:
    """Apply each cycle's layers to |0...0>, recording BP cost and <Z> after every cycle."""
    tns = product_state(graph)
    result = EvolutionResult(tns)
    with ctx.thread_scope():
        for m, layers in enumerate(cycles, start=1):
            iters, wall, worst = 0, 0.0, 0.0
            for group in layers:
                tno = layer_to_tno(ctx, group, graph)
                step = apply_tno(ctx, tns, tno, chi, bp_tol, bp_max_iters)
                tns = step.tns
                worst = max(worst, step.max_trunc_err)
                iters += step.bp.iters
                wall += sum(step.bp.iter_wall_us)
                result.bp_iter_wall_us.extend(step.bp.iter_wall_us)
                result.bp_converged &= step.bp.converged
            bp = bp_fixed_point(ctx, tns, bp_max_iters, bp_tol)
            iters += bp.iters
            wall += sum(bp.iter_wall_us)
            result.bp_iter_wall_us.extend(bp.iter_wall_us)
            result.bp_converged &= bp.converged
            z = np.array([measure_z(ctx, tns, bp.messages, v) for v in range(graph.n)])
            result.z = z
            result.rows.append(CycleRow(m, iters, wall / max(iters, 1), worst, float(np.mean(z))))
    result.tns = tns
    return result


def run_circuit(
    ctx: Context,
    circuit: Circuit,
    graph: Graph,
    chi: int | None,
    layers_per_cycle: int | None = None,
    bp_tol: float = BP_TOL,
    bp_max_iters: int = BP_MAX_ITERS,
) -> EvolutionResult:
    """Evolve under ``circuit``; ``layers_per_cycle=None`` treats the whole program as one cycle."""
    groups = layerize(circuit)
    per = layers_per_cycle or max(len(groups), 1)
    return evolve(ctx, split_cycles(groups, per), graph, chi, bp_tol, bp_max_iters)
