"""iTEBD ground-state search for the transverse-field Ising chain.

The Hamiltonian is ``H = -J sum Z_i Z_{i+1} + g sum X_i``. The infinite MPS
has a two-site unit cell in Vidal form::

    ... lam_b  gamma_a  lam_a  gamma_b  lam_b  gamma_a ...

Site tensors are (left bond, physical, right bond). The "A" bond carries
``lam_a`` (between ``gamma_a`` and ``gamma_b``), the "B" bond carries
``lam_b``. All tensor algebra goes through the :mod:`tci` interface.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from . import dense as D
from . import linalg as L
from .core import Context
from .dense import DenseTensor

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
DEFAULT_SCHEDULE = (0.1, 0.01, 0.001, 1e-4)
DEFAULT_SEED = 12345
# Schmidt values below this (relative to the normalized two-site block) are dropped
LAMBDA_CUTOFF = 1e-12


@dataclass(frozen=True)
class TfimParams:
    g: float
    chi: int = 16
    j: float = 1.0
    tau_schedule: tuple[float, ...] = DEFAULT_SCHEDULE
    sweeps_per_tau: int = 2000
    lambda_tol: float = 1e-12
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        sched = tuple(float(t) for t in self.tau_schedule)
        object.__setattr__(self, "tau_schedule", sched)
        if self.chi < 2:
            raise ValueError("chi must be >= 2")
        if not sched or any(t <= 0 for t in sched):
            raise ValueError("tau schedule must be nonempty and positive")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("tau schedule must be strictly decreasing")
        if self.sweeps_per_tau < 1:
            raise ValueError("sweeps_per_tau must be >= 1")
        if self.lambda_tol <= 0:
            raise ValueError("lambda_tol must be positive")


@dataclass
class InfiniteMps:
    gamma_a: DenseTensor
    gamma_b: DenseTensor
    lambda_a: DenseTensor
    lambda_b: DenseTensor

    def swapped(self) -> "InfiniteMps":
        """The same chain viewed with the sublattice labels exchanged."""
        return InfiniteMps(self.gamma_b, self.gamma_a, self.lambda_b, self.lambda_a)


def bond_hamiltonian(params: TfimParams) -> np.ndarray:
    """Two-site term as a 4x4 matrix; the field is split evenly over the two bonds a site touches."""
    eye2 = np.eye(2)
    return -params.j * np.kron(PAULI_Z, PAULI_Z) + 0.5 * params.g * (np.kron(PAULI_X, eye2) + np.kron(eye2, PAULI_X))


def build_gate(ctx: Context, params: TfimParams, tau: float) -> DenseTensor:
    """``exp(-tau h)`` with bonds (out1, out2, in1, in2)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    h = DenseTensor(bond_hamiltonian(params).reshape(2, 2, 2, 2))
    return L.mat_exp(ctx, L.scale(ctx, h, -tau), 2)


def random_state(ctx: Context, chi: int, seed: int = DEFAULT_SEED) -> InfiniteMps:
    rng = np.random.Generator(np.random.MT19937(seed))

    def gen():
        return rng.uniform(-1.0, 1.0)

    ga = D.random(ctx, (chi, 2, chi), gen)
    gb = D.random(ctx, (chi, 2, chi), gen)
    lam = L.normalize(ctx, D.fill(ctx, (chi,), 1.0))[0]
    return InfiniteMps(ga, gb, lam, D.copy(ctx, lam))


def _inv(lam: DenseTensor) -> DenseTensor:
    return DenseTensor._wrap(1.0 / lam.data)


def _two_site(ctx: Context, left: DenseTensor, center: DenseTensor, right: DenseTensor, outer: DenseTensor):
    """``outer . left . center . right . outer`` with bonds (a, p, q, f)."""
    lhs = L.contract(ctx, L.diag(ctx, outer), "ab", left, "bpc", "apc")
    lhs = L.contract(ctx, lhs, "apc", L.diag(ctx, center), "cd", "apd")
    rhs = L.contract(ctx, right, "dqe", L.diag(ctx, outer), "ef", "dqf")
    return L.contract(ctx, lhs, "apd", rhs, "dqf", "apqf")


def _bond_tensors(state: InfiniteMps, which: str):
    if which == "A":
        return state.gamma_a, state.lambda_a, state.gamma_b, state.lambda_b
    if which == "B":
        return state.gamma_b, state.lambda_b, state.gamma_a, state.lambda_a
    raise ValueError(f"bond must be 'A' or 'B', got {which!r}")


def itebd_update_bond(ctx: Context, state: InfiniteMps, gate: DenseTensor, which: str, chi: int):
    """Apply ``gate`` across one bond and re-split; returns ``(new_state, trunc_err)``."""
    left, center, right, outer = _bond_tensors(state, which)
    theta = _two_site(ctx, left, center, right, outer)
    theta = L.contract(ctx, gate, "stpq", theta, "apqf", "astf")
    theta, _ = L.normalize(ctx, theta)
    u, s, v_dag, err = L.trunc_svd(ctx, theta, 2, chi, LAMBDA_CUTOFF)
    new_center, _ = L.normalize(ctx, s)
    inv_outer = L.diag(ctx, _inv(outer))
    new_left = L.contract(ctx, inv_outer, "ab", u, "bsx", "asx")
    new_right = L.contract(ctx, v_dag, "xtf", inv_outer, "fg", "xtg")
    if which == "A":
        out = InfiniteMps(new_left, new_right, new_center, outer)
    else:
        out = InfiniteMps(new_right, new_left, outer, new_center)
    return out, err


def bond_energy(ctx: Context, state: InfiniteMps, params: TfimParams, which: str) -> float:
    left, center, right, outer = _bond_tensors(state, which)
    theta = _two_site(ctx, left, center, right, outer)
    h = DenseTensor(bond_hamiltonian(params).reshape(2, 2, 2, 2))
    h_theta = L.contract(ctx, h, "stpq", theta, "apqf", "astf")
    conj = D.cplx_conj(ctx, theta)
    num = L.contract(ctx, conj, "apqf", h_theta, "apqf", "")
    den = L.contract(ctx, conj, "apqf", theta, "apqf", "")
    return float(np.real(D.get_elem(ctx, num, ()))) / float(np.real(D.get_elem(ctx, den, ())))


def measure_energy(ctx: Context, state: InfiniteMps, params: TfimParams) -> float:
    """Energy per site: the mean of the two bond energies."""
    return 0.5 * (bond_energy(ctx, state, params, "A") + bond_energy(ctx, state, params, "B"))


def bond_norm(ctx: Context, state: InfiniteMps, which: str) -> float:
    """Squared norm of the two-site block around one bond (1 after that bond's update)."""
    theta = _two_site(ctx, *_bond_tensors(state, which))
    return L.norm(ctx, theta) ** 2


def _lambda_change(old: np.ndarray, new: np.ndarray) -> float:
    n = max(old.size, new.size)
    a = np.zeros(n)
    b = np.zeros(n)
    a[: old.size] = old
    b[: new.size] = new
    return float(np.max(np.abs(a - b)))


@dataclass
class TraceRow:
    tau: float
    sweep: int
    energy: float
    trunc_err: float
    wall_us: float


@dataclass
class StageResult:
    tau: float
    sweeps: int
    converged: bool


@dataclass
class ItebdResult:
    state: InfiniteMps
    trace: list[TraceRow] = field(default_factory=list)
    stages: list[StageResult] = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.trace[-1].energy

    @property
    def converged(self) -> bool:
        return bool(self.stages) and self.stages[-1].converged


def run_itebd(ctx: Context, params: TfimParams, state: InfiniteMps | None = None) -> ItebdResult:
    """Imaginary-time evolution through ``params.tau_schedule``.

    Each sweep updates the A bond then the B bond. A stage ends when the
    largest change of any Schmidt value over one sweep drops below
    ``lambda_tol`` or after ``sweeps_per_tau`` sweeps.
    """
    if state is None:
        state = random_state(ctx, params.chi, params.seed)
    result = ItebdResult(state)
    with ctx.thread_scope():
        for tau in params.tau_schedule:
            gate = build_gate(ctx, params, tau)
            converged = False
            sweep = 0
            for sweep in range(1, params.sweeps_per_tau + 1):
                prev_a, prev_b = state.lambda_a.data, state.lambda_b.data
                t0 = time.perf_counter_ns()
                state, err_a = itebd_update_bond(ctx, state, gate, "A", params.chi)
                state, err_b = itebd_update_bond(ctx, state, gate, "B", params.chi)
                wall = (time.perf_counter_ns() - t0) / 1000.0
                energy = measure_energy(ctx, state, params)
                result.trace.append(TraceRow(tau, sweep, energy, max(err_a, err_b), wall))
                delta = max(
                    _lambda_change(prev_a, state.lambda_a.data),
                    _lambda_change(prev_b, state.lambda_b.data),
                )
                if delta < params.lambda_tol:
                    converged = True
                    break
            result.stages.append(StageResult(tau, sweep, converged))
    result.state = state
    return result


def pfeuty_energy(g: float, j: float = 1.0) -> float:
    """Exact ground-state energy per site from the free-fermion dispersion."""

    def integrand(k):
        return math.sqrt(j * j + g * g - 2.0 * j * g * math.cos(k))

    # the dispersion is even about k = pi, so integrate one half
    val, _ = integrate.quad(integrand, 0.0, math.pi, limit=200, epsabs=0.0, epsrel=1e-13)
    return -val / math.pi


def with_chi(params: TfimParams, chi: int) -> TfimParams:
    return replace(params, chi=chi)
