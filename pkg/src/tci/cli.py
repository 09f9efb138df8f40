"""Command-line entry point: ``tci {itebd,kim,bench,show}``.

Exit status is 0 on success, 1 on runtime or data errors and 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import statistics
import sys
from contextlib import contextmanager

import numpy as np

from .core import ErrorKind, TciError, create_context, destroy_context

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _bond_dim(text: str) -> int:
    v = _positive_int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"bond dimension must be >= 2, got {v}")
    return v


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return v


def _positive_float(text: str) -> float:
    v = _finite(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _angle(text: str) -> float:
    """Number or angle expression such as ``0.7*pi``."""
    from .circuit.qasm import _Parser, tokenize

    try:
        p = _Parser(tokenize(text))
        v = p.expr()
        if p.peek().kind != "eof":
            raise ValueError
    except (TciError, ValueError):
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}") from None
    return v


def _schedule(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid tau schedule {text!r}") from None
    if not vals or any(not math.isfinite(v) or v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("tau schedule must list positive numbers")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("tau schedule must be strictly decreasing")
    return vals


def _sizes(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid size list {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return vals


def _lattice(text: str) -> str:
    from .circuit.lattice import parse_lattice

    try:
        parse_lattice(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tci", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=_positive_int, default=None, help="worker budget (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("itebd", help="iTEBD ground state of the transverse-field Ising chain")
    p.add_argument("--g", type=_finite, default=1.0, help="transverse field (default 1)")
    p.add_argument("--chi", type=_bond_dim, default=16, help="maximum bond dimension (default 16)")
    p.add_argument("--tau-schedule", type=_schedule, default=None, help="comma-separated decreasing time steps")
    p.add_argument("--sweeps", type=_positive_int, default=2000, help="sweep budget per time step")
    p.add_argument("--tol", type=_positive_float, default=None, help="Schmidt-value change that ends a stage")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out", default=None, help="CSV path (default: standard output)")

    p = sub.add_parser("kim", help="kicked-Ising circuit with BP-regauged tensor networks")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--lattice", type=_lattice, help="heavyhex:R | heavyhex:RxC | ring:N | path:N")
    src.add_argument("--qasm", help="OpenQASM 2.0 file (one cycle)")
    p.add_argument("--theta-x", type=_angle, default=None, help="Rx angle (default 0.7*pi)")
    p.add_argument("--theta-zz", type=_angle, default=None, help="Rzz angle (default 0.25*pi)")
    p.add_argument("--cycles", type=_positive_int, default=None, help="Floquet cycles (default 10; 1 for --qasm)")
    p.add_argument("--chi", type=_positive_int, default=32, help="maximum bond dimension (default 32)")
    p.add_argument("--bp-tol", type=_positive_float, default=1e-10)
    p.add_argument("--bp-max-iters", type=_positive_int, default=500)
    p.add_argument("--oracle", action="store_true", help="compare <Z> with an exact statevector run")
    p.add_argument("--seed", type=int, default=12345, help="accepted for uniformity; the run is deterministic")
    p.add_argument("--out", default=None, help="CSV path (default: standard output)")

    p = sub.add_parser("bench", help="time the contraction or SVD kernel")
    p.add_argument("--op", choices=("contract", "svd"), required=True)
    p.add_argument("--sizes", type=_sizes, default=[32, 64, 128])
    p.add_argument("--repeat", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out", default=None, help="CSV path (default: standard output)")

    p = sub.add_parser("show", help="print a saved tensor file")
    p.add_argument("path")
    return parser


@contextmanager
def _csv_sink(path):
    """Yield ``(csv_stream, report_stream)``; reports go to stderr when CSV uses stdout."""
    if path is None:
        yield sys.stdout, sys.stderr
        return
    buf = io.StringIO()
    yield buf, sys.stdout
    try:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise TciError(ErrorKind.IO_FAILURE, f"cannot write {path}: {exc.strerror or exc}") from exc


def _num(x: float) -> str:
    return repr(float(x))


def _stats_line(label: str, samples) -> str:
    tail = list(samples)[-10:]
    if not tail:
        return f"{label}: no samples"
    return (
        f"{label} (last {len(tail)}): mean={statistics.fmean(tail):.1f} us "
        f"min={min(tail):.1f} us max={max(tail):.1f} us"
    )


def cmd_itebd(ctx, args) -> int:
    from .itebd import DEFAULT_SCHEDULE, TfimParams, run_itebd

    kw = dict(g=args.g, chi=args.chi, sweeps_per_tau=args.sweeps, seed=args.seed)
    kw["tau_schedule"] = args.tau_schedule or DEFAULT_SCHEDULE
    if args.tol is not None:
        kw["lambda_tol"] = args.tol
    params = TfimParams(**kw)
    result = run_itebd(ctx, params)
    with _csv_sink(args.out) as (sink, report):
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["tau", "sweep", "energy_per_site", "trunc_err", "wall_us"])
        for r in result.trace:
            w.writerow([_num(r.tau), r.sweep, _num(r.energy), _num(r.trunc_err), f"{r.wall_us:.3f}"])
    for s in result.stages:
        state = "converged" if s.converged else "sweep budget reached"
        print(f"tau={s.tau!r}: {s.sweeps} sweeps, {state}", file=report)
    print(f"final energy per site: {result.energy!r}", file=report)
    print(_stats_line("wall time per iteration", [r.wall_us for r in result.trace]), file=report)
    return 0


def cmd_kim(ctx, args) -> int:
    from .circuit.gates import Circuit, layerize
    from .circuit.kim import run_circuit
    from .circuit.lattice import KIM_THETA_X, KIM_THETA_ZZ, build_kim_circuit, coupling_graph, edge_coloring, parse_lattice
    from .circuit.qasm import parse_qasm
    from .circuit.statevector import MAX_QUBITS, statevector_oracle

    if args.qasm is not None:
        if args.theta_x is not None or args.theta_zz is not None:
            print("tci: error: --theta-x/--theta-zz only apply to --lattice", file=sys.stderr)
            return USAGE_ERROR
        try:
            with open(args.qasm) as fh:
                text = fh.read()
        except OSError as exc:
            raise TciError(ErrorKind.IO_FAILURE, f"cannot read {args.qasm}: {exc.strerror or exc}") from exc
        program = parse_qasm(text)
        graph = coupling_graph(program)
        reps = args.cycles or 1
        circuit = Circuit(program.num_qubits, [], program.coupling)
        for m in range(reps):
            if m:
                circuit.barrier()
            circuit.gates.extend(program.gates)
        per = max(len(layerize(program)), 1)
    else:
        graph = parse_lattice(args.lattice)
        theta_x = KIM_THETA_X if args.theta_x is None else args.theta_x
        theta_zz = KIM_THETA_ZZ if args.theta_zz is None else args.theta_zz
        circuit = build_kim_circuit(graph, theta_x, theta_zz, args.cycles or 10)
        per = 1 + len(edge_coloring(graph))
    if args.oracle and graph.n > MAX_QUBITS:
        print(f"tci: error: Unsupported: --oracle needs at most {MAX_QUBITS} qubits", file=sys.stderr)
        return RUNTIME_ERROR
    result = run_circuit(ctx, circuit, graph, args.chi, per, args.bp_tol, args.bp_max_iters)
    with _csv_sink(args.out) as (sink, report):
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["cycle", "bp_iters", "wall_us_per_bp_iter", "max_trunc_err", "mean_Z"])
        for r in result.rows:
            w.writerow([r.cycle, r.bp_iters, f"{r.wall_us_per_bp_iter:.3f}", _num(r.max_trunc_err), _num(r.mean_z)])
    print(f"qubits={graph.n} edges={len(graph.edges)} cycles={len(result.rows)} chi={args.chi}", file=report)
    print(_stats_line("wall time per BP iteration", result.bp_iter_wall_us), file=report)
    if not result.bp_converged:
        print("warning: BP hit its iteration limit in at least one layer", file=report)
    if args.oracle:
        _, z_exact = statevector_oracle(circuit)
        err = float(np.max(np.abs(result.z - z_exact))) if result.z is not None else 0.0
        print(f"max |<Z> - oracle| = {err:.3e}", file=report)
    return 0


def cmd_bench(ctx, args) -> int:
    from .bench import run_bench

    rows = run_bench(ctx, args.op, args.sizes, args.repeat, args.seed)
    with _csv_sink(args.out) as (sink, _):
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["size", "mean_us", "min_us", "max_us"])
        for r in rows:
            w.writerow([r.size, f"{r.mean_us:.3f}", f"{r.min_us:.3f}", f"{r.max_us:.3f}"])
    return 0


def cmd_show(ctx, args) -> int:
    from .tensor_io import load, show

    show(ctx, load(ctx, args.path))
    return 0


COMMANDS = {"itebd": cmd_itebd, "kim": cmd_kim, "bench": cmd_bench, "show": cmd_show}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = create_context(threads=args.threads)
    except ValueError as exc:
        print(f"tci: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return COMMANDS[args.command](ctx, args)
    except TciError as exc:
        print(f"tci: error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except ValueError as exc:
        print(f"tci: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    finally:
        destroy_context(ctx)


if __name__ == "__main__":
    sys.exit(main())
