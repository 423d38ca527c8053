"""
Dense density-matrix engine for one or two qubits coupled to a truncated oscillator.

Hilbert space ordering is qubit 1 (x) qubit 2 (x) Fock(N), with qubit basis |g> = 0, |e> = 1.
Hamiltonians are in units of hbar (rad/s) and written in the interaction picture.
"""
import math
import re
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from squid_modes.algo import MHZ, NS, US
from squid_modes.algo.errors import (FockOverflowError, ParameterValidationError, PositivityLossError,
                                     StepResolutionError)
from squid_modes.algo.types import GateConfig, OperatorSpec, Trajectory
from squid_modes.log import get_logger

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
EXCITED = np.diag([0.0, 1.0]).astype(complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y)

# collapse operators whose rate times the run duration falls below this are dropped
NEGLIGIBLE_DECAY = 1e-18


class GateMetrics(BaseModel):
    fidelity: float
    fidelity_phase_fixed: float
    concurrence_wootters: float
    concurrence_shortcut: float
    n_photon_final: float
    achieved_G_MHz: float
    delta_MHz: float
    chi_MHz: float
    gate_time_ns: float
    max_trace_error: float
    max_hermiticity_error: float
    min_eigenvalue: float
    config: dict
    integrator: dict
    tones: Optional[dict] = None


def destroy(N: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, N)), 1).astype(complex)


def embed(op: np.ndarray, position: int, dims: Sequence[int]) -> np.ndarray:
    result = np.ones((1, 1), dtype=complex)
    for i, dim in enumerate(dims):
        result = np.kron(result, op if i == position else np.eye(dim, dtype=complex))
    return result


def system_dims(n_qubits: int, N: int) -> tuple[int, ...]:
    return (2,) * n_qubits + (N,)


def basis_state(label: str, n_qubits: int, N: int) -> np.ndarray:
    """Density matrix of a product basis state such as 'gg0', 'e0' or 'eg1'."""
    match = re.fullmatch(r"([ge]+)(\d+)", label.strip().lower())
    if not match or len(match.group(1)) != n_qubits:
        raise ParameterValidationError("initial_state", f"cannot parse initial state '{label}' for {n_qubits} qubits")
    fock = int(match.group(2))
    if fock >= N:
        raise ParameterValidationError("initial_state", f"Fock level {fock} is beyond the cutoff N={N}")
    psi = np.ones(1, dtype=complex)
    for letter in match.group(1):
        psi = np.kron(psi, np.array([1, 0] if letter == "g" else [0, 1], dtype=complex))
    psi = np.kron(psi, np.eye(N, dtype=complex)[fock])
    return np.outer(psi, psi.conj())


def validate_gate_config(cfg: GateConfig):
    if cfg.n_qubits not in (1, 2):
        raise ParameterValidationError("n_qubits", "only one or two qubits are supported")
    if cfg.N < 4:
        raise ParameterValidationError("N", "Fock cutoff N must be at least 4")
    if len(cfg.T1) < cfg.n_qubits or len(cfg.T2) < cfg.n_qubits:
        raise ParameterValidationError("T1", "one T1 and one T2 per qubit are required")
    for i in range(cfg.n_qubits):
        if not (cfg.T1[i] > 0 and cfg.T2[i] > 0):
            raise ParameterValidationError(f"T1[{i}]", "lifetimes must be positive")
        if cfg.T2[i] > 2 * cfg.T1[i]:
            raise ParameterValidationError(f"T2[{i}]", "T2 must not exceed 2*T1")
    if cfg.kappa < 0:
        raise ParameterValidationError("kappa", "kappa must not be negative")
    if not cfg.duration > 0:
        raise ParameterValidationError("t_final", "run duration must be positive (set t_final or a non-zero delta)")


class MSHamiltonian:
    """
    H(t) = G*sum_n (a e^{-i delta t} + a^dag e^{i delta t})(sigma+_n + sigma-_n) + chi*a^dag a*sum_n |e><e|_n

    With beam_splitter=True only the excitation-exchange terms a*sigma+ and a^dag*sigma- are kept.
    """

    def __init__(self, cfg: GateConfig, beam_splitter: Optional[bool] = None):
        self.cfg = cfg
        self.beam_splitter = cfg.beam_splitter if beam_splitter is None else beam_splitter
        self.dims = system_dims(cfg.n_qubits, cfg.N)
        a = embed(destroy(cfg.N), cfg.n_qubits, self.dims)
        dim = a.shape[0]
        coupling = np.zeros((dim, dim), dtype=complex)
        kerr = np.zeros((dim, dim), dtype=complex)
        number = a.conj().T @ a
        for n in range(cfg.n_qubits):
            flip = SIGMA_PLUS if self.beam_splitter else SIGMA_PLUS + SIGMA_MINUS
            coupling += a @ embed(flip, n, self.dims)
            kerr += number @ embed(EXCITED, n, self.dims)
        self._coupling = cfg.G * coupling
        self._kerr = cfg.chi * kerr if cfg.include_kerr else np.zeros_like(kerr)
        self.a = a

    @property
    def dim(self) -> int:
        return self._coupling.shape[0]

    def __call__(self, t: float) -> np.ndarray:
        term = np.exp(-1j * self.cfg.delta * t) * self._coupling
        return term + term.conj().T + self._kerr

    def terms(self, t: float = 0.0) -> list[OperatorSpec]:
        term = np.exp(-1j * self.cfg.delta * t) * self._coupling
        return [OperatorSpec(term + term.conj().T, "sideband coupling"), OperatorSpec(self._kerr, "cross-Kerr")]


def build_ms_hamiltonian(cfg: GateConfig, beam_splitter: Optional[bool] = None) -> MSHamiltonian:
    return MSHamiltonian(cfg, beam_splitter)


def build_collapse_ops(cfg: GateConfig) -> list[OperatorSpec]:
    dims = system_dims(cfg.n_qubits, cfg.N)
    duration = cfg.duration
    ops = []

    def add(rate: float, op: np.ndarray, label: str):
        if rate * duration >= NEGLIGIBLE_DECAY:
            ops.append(OperatorSpec(math.sqrt(rate) * op, label))

    add(cfg.kappa, embed(destroy(cfg.N), cfg.n_qubits, dims), "resonator decay")
    for n in range(cfg.n_qubits):
        gamma_1 = 1.0 / cfg.T1[n]
        gamma_phi = max(1.0 / cfg.T2[n] - 0.5 * gamma_1, 0.0)
        add(gamma_1, embed(SIGMA_MINUS, n, dims), f"qubit {n + 1} relaxation")
        add(0.5 * gamma_phi, embed(SIGMA_Z, n, dims), f"qubit {n + 1} dephasing")
    return ops


def _fastest_rate(cfg: GateConfig) -> float:
    rates = [abs(cfg.delta), abs(cfg.G), abs(cfg.chi) if cfg.include_kerr else 0.0, cfg.kappa]
    rates += [1.0 / t for t in cfg.T1[:cfg.n_qubits]]
    return max(rates)


def _check_snapshot(rho: np.ndarray) -> tuple[float, float, float]:
    trace_error = abs(np.trace(rho).real - 1.0)
    hermiticity_error = float(np.abs(rho - rho.conj().T).max())
    min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    return trace_error, hermiticity_error, min_eigenvalue


def lindblad_evolve(H: Callable[[float], np.ndarray], collapse_ops: Sequence, rho0: np.ndarray, cfg: GateConfig,
                    photon_limit: Optional[float] = None) -> Trajectory:
    """
    Integrate the Lindblad master equation with fixed-step classical Runge-Kutta.

    Args:
        H: Hamiltonian as a function of time (rad/s).
        collapse_ops: OperatorSpec or plain matrices, rates already folded in.
        rho0: initial density matrix.
        cfg: supplies dt, duration and snapshot spacing.
        photon_limit: raise FockOverflowError when the mean photon number exceeds it.

    Raises:
        StepResolutionError: dt is too coarse for the fastest rate of cfg.
        PositivityLossError: a stored snapshot has an eigenvalue below -1e-5.
    """
    duration = cfg.duration
    steps = max(1, int(round(duration / cfg.dt)))
    h = duration / steps
    fastest = _fastest_rate(cfg)
    if h * fastest >= 0.05:
        raise StepResolutionError(f"dt = {h:.3g} s is too coarse: dt*rate = {h * fastest:.3g} must stay below 0.05")

    dims = system_dims(cfg.n_qubits, cfg.N)
    dim = int(np.prod(dims))
    if rho0.shape != (dim, dim):
        raise ParameterValidationError("rho0", f"initial state has shape {rho0.shape}, expected {(dim, dim)}")
    c_ops = [c.matrix if isinstance(c, OperatorSpec) else np.asarray(c, dtype=complex) for c in collapse_ops]
    c_dag = [c.conj().T for c in c_ops]
    damping = 0.5 * sum((cd @ c for c, cd in zip(c_ops, c_dag)), np.zeros((dim, dim), dtype=complex))
    number_diag = np.real(np.diag(embed(np.diag(np.arange(cfg.N)).astype(complex), cfg.n_qubits, dims)))

    def rhs(t: float, rho: np.ndarray) -> np.ndarray:
        h_eff = H(t) - 1j * damping
        out = -1j * (h_eff @ rho - rho @ h_eff.conj().T)
        for c, cd in zip(c_ops, c_dag):
            out += c @ rho @ cd
        return out

    rho = np.array(rho0, dtype=complex)
    times, snapshots = [0.0], [rho.copy()]
    every = max(1, int(cfg.snapshot_every))
    worst_trace, worst_hermiticity, lowest = _check_snapshot(rho)
    for step in range(1, steps + 1):
        t = (step - 1) * h
        k1 = rhs(t, rho)
        k2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2)
        k4 = rhs(t + h, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if photon_limit is not None:
            n_photon = float(number_diag @ np.real(np.diag(rho)))
            if n_photon > photon_limit:
                raise FockOverflowError(f"mean photon number {n_photon:.3g} exceeds {photon_limit:g} at "
                                        f"t = {step * h / NS:.3f} ns; raise the Fock cutoff")
        if step % every == 0 or step == steps:
            trace_error, hermiticity_error, min_eigenvalue = _check_snapshot(rho)
            if min_eigenvalue < -1e-5:
                raise PositivityLossError(f"density matrix lost positivity (eigenvalue {min_eigenvalue:.3g}) at "
                                          f"t = {step * h / NS:.3f} ns; reduce dt")
            worst_trace = max(worst_trace, trace_error)
            worst_hermiticity = max(worst_hermiticity, hermiticity_error)
            lowest = min(lowest, min_eigenvalue)
            times.append(step * h)
            snapshots.append(rho.copy())
    get_logger().debug(f"Lindblad run finished: {steps} steps of {h / NS:.4f} ns, max trace error "
                       f"{worst_trace:.2e}, min eigenvalue {lowest:.2e}")

    trajectory = Trajectory(
        times=np.array(times),
        snapshots=snapshots,
        dims=dims,
        n_photon=np.array([float(number_diag @ np.real(np.diag(r))) for r in snapshots]),
        min_eigenvalue=lowest,
        max_trace_error=worst_trace,
        max_hermiticity_error=worst_hermiticity,
    )
    if cfg.n_qubits == 2:
        _add_two_qubit_series(trajectory, cfg.N)
    return trajectory


def _add_two_qubit_series(trajectory: Trajectory, N: int):
    reduced = [partial_trace_oscillator(r, N) for r in trajectory.snapshots]
    trajectory.rho_gggg = np.array([r[0, 0].real for r in reduced])
    trajectory.rho_eeee = np.array([r[3, 3].real for r in reduced])
    trajectory.im_rho_eegg = np.array([r[3, 0].imag for r in reduced])
    pairs = [concurrence(r) for r in reduced]
    trajectory.concurrence = np.array([p[0] for p in pairs])
    trajectory.concurrence_shortcut = np.array([p[1] for p in pairs])
    fidelities = [bell_fidelity(r) for r in reduced]
    trajectory.fidelity_phase_fixed = np.array([f[0] for f in fidelities])
    trajectory.fidelity = np.array([f[1] for f in fidelities])


def run_gate(cfg: GateConfig) -> Trajectory:
    """Two-qubit bichromatic gate from |g, g, 0> (or cfg.initial_state) over cfg.duration."""
    validate_gate_config(cfg)
    if cfg.n_qubits != 2:
        raise ParameterValidationError("n_qubits", "the gate needs two qubits")
    H = build_ms_hamiltonian(cfg)
    rho0 = basis_state(cfg.initial_state, cfg.n_qubits, cfg.N)
    get_logger().info(f"Running gate: G = 2pi x {cfg.G / MHZ:.4f} MHz, delta = 2pi x {cfg.delta / MHZ:.4f} MHz, "
                      f"chi = 2pi x {cfg.chi / MHZ:.4f} MHz, N = {cfg.N}, duration {cfg.duration / NS:.2f} ns")
    return lindblad_evolve(H, build_collapse_ops(cfg), rho0, cfg, photon_limit=cfg.N / 4)


def partial_trace_oscillator(rho_full: np.ndarray, n_fock: Optional[int] = None, n_qubits: int = 2) -> np.ndarray:
    dim = rho_full.shape[0]
    q = 2 ** n_qubits
    if rho_full.ndim != 2 or rho_full.shape[1] != dim or dim % q or (n_fock is not None and dim != q * n_fock):
        raise ParameterValidationError("rho_full", f"shape {rho_full.shape} does not match {q} x Fock dimension")
    N = dim // q
    return np.einsum("ajbj->ab", rho_full.reshape(q, N, q, N))


def _check_two_qubit_state(rho: np.ndarray):
    if rho.shape != (4, 4):
        raise ParameterValidationError("rho", f"expected a 4x4 two-qubit density matrix, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > 1e-8:
        raise ParameterValidationError("rho", "density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-6:
        raise ParameterValidationError("rho", "density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-6:
        raise ParameterValidationError("rho", "density matrix is not positive")


def concurrence(rho_2q: np.ndarray) -> tuple[float, float]:
    """Wootters concurrence and the shortcut 2*Im(rho_ee,gg), valid for states supported on |gg>, |ee>."""
    rho = np.asarray(rho_2q, dtype=complex)
    _check_two_qubit_state(rho)
    rho_tilde = _SPIN_FLIP @ rho.conj() @ _SPIN_FLIP
    eigenvalues = np.linalg.eigvals(rho @ rho_tilde)
    lambdas = np.sort(np.sqrt(np.clip(eigenvalues.real, 0.0, None)))[::-1]
    wootters = max(0.0, float(lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]))
    return wootters, float(2.0 * rho[3, 0].imag)


def bell_fidelity(rho_2q: np.ndarray) -> tuple[float, float]:
    """
    Overlap with (|gg> + i|ee>)/sqrt(2).

    Returns the fidelity for the fixed phase and its maximum over local z rotations, which only
    rotate the phase of rho_ee,gg.
    """
    rho = np.asarray(rho_2q, dtype=complex)
    population = 0.5 * (rho[0, 0].real + rho[3, 3].real)
    return float(population + rho[3, 0].imag), float(population + abs(rho[3, 0]))


def excitation_number(rho: np.ndarray, n_qubits: int, N: int) -> float:
    dims = system_dims(n_qubits, N)
    a = embed(destroy(N), n_qubits, dims)
    total = a.conj().T @ a
    for n in range(n_qubits):
        total = total + embed(EXCITED, n, dims)
    return float(np.real(np.trace(total @ rho)))


def gate_config_echo(cfg: GateConfig) -> dict:
    def lifetime(value):
        return None if math.isinf(value) else value / US

    return {
        "G_MHz": cfg.G / MHZ,
        "delta_MHz": cfg.delta / MHZ,
        "chi_MHz": cfg.chi / MHZ,
        "kappa_MHz": cfg.kappa / MHZ,
        "T1_us": [lifetime(t) for t in cfg.T1[:cfg.n_qubits]],
        "T2_us": [lifetime(t) for t in cfg.T2[:cfg.n_qubits]],
        "fock_cutoff": cfg.N,
        "include_kerr": cfg.include_kerr,
        "t_final_ns": cfg.duration / NS,
        "dt_ns": cfg.dt / NS,
        "initial_state": cfg.initial_state,
    }
