"""
Time-domain check of the frequency-domain mode solver.

Each half of the resonator is a chain of n_cells LC sections. Node 0 of each half sits next to the
SQUID and node n_cells at the open end; both carry half a cell of capacitance. The linearised SQUID
is a spring (2*pi/Phi0)^2*E_J(t) acting on the flux jump between the two junction nodes, in parallel
with the SQUID capacitance.
"""
import math
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel
from scipy.linalg import eigh
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks, get_window

from squid_modes.algo import GHZ, MHZ, NS, PHI0
from squid_modes.algo.circuit import derive_constants
from squid_modes.algo.errors import (CFLViolationError, InstabilityError, InsufficientSamplesError,
                                     ParameterValidationError)
from squid_modes.algo.modesolver import floquet_mode, floquet_mode_general, mode_profile
from squid_modes.algo.types import (ChainState, CircuitParams, DriveTone, FloquetMode, FluxSeries, OracleReport,
                                    SidebandConvention, SpectralPeak, SpectrumReport)
from squid_modes.config_loader import get_settings
from squid_modes.log import get_logger


class OracleRecord(BaseModel):
    branch: int
    convention: str
    omega_GHz: float
    omega_oracle_GHz: float
    freq_error_MHz: float
    A_plus: float
    A_minus: float
    A_plus_oracle: float
    A_minus_oracle: float
    A_plus_error: float
    A_minus_error: float
    n_cells: int
    dt_ns: float
    duration_ns: float


def _oracle_setting(name: str, default):
    return get_settings().get(f"oracle.{name}", default)


class LCChain:
    def __init__(self, params: CircuitParams, tone: Optional[DriveTone] = None, n_cells: int = 400,
                 dt: Optional[float] = None):
        if n_cells < 2:
            raise ParameterValidationError("n_cells", "a chain needs at least two cells per half")
        derive_constants(params)
        self.params = params
        self.tone = tone
        self.n_cells = n_cells
        self.dx = params.d / n_cells
        self.dt = dt if dt is not None else _oracle_setting("courant", 0.4) * self.dx / params.v
        self.mass_cell = params.C_T * self.dx
        self.mass = np.full(n_cells + 1, self.mass_cell)
        self.mass[0] = self.mass[-1] = 0.5 * self.mass_cell
        self.k_line = 1.0 / (params.L_T * self.dx)
        self.k_junction = (2 * math.pi / PHI0) ** 2
        self._check_stability()

    def _check_stability(self):
        if not self.dt < self.dx / self.params.v:
            raise CFLViolationError(f"dt = {self.dt:.3g} s violates dt < dx/v = {self.dx / self.params.v:.3g} s")
        swing = abs(self.tone.delta_EJ) if self.tone is not None else 0.0
        spring_max = self.k_junction * (self.params.E_J0 + swing)
        omega_max = math.sqrt(4.0 * (self.k_line + spring_max) / self.mass_cell)
        if omega_max * self.dt >= 2.0:
            raise CFLViolationError(f"junction makes the scheme unstable: omega_max*dt = {omega_max * self.dt:.3f} >= 2")
        get_logger().debug(f"LC chain: {self.n_cells} cells per half, dt = {self.dt:.3e} s, "
                           f"omega_max*dt = {omega_max * self.dt:.3f}")

    def spring(self, t: float) -> float:
        E_J = self.params.E_J0
        if self.tone is not None:
            E_J += self.tone.delta_EJ * math.cos(self.tone.omega_d * t)
        return self.k_junction * E_J

    def positions(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx

    def _line_forces(self, X: np.ndarray) -> np.ndarray:
        diff = self.k_line * (X[:, 1:] - X[:, :-1])
        F = np.zeros_like(X)
        F[:, :-1] += diff
        F[:, 1:] -= diff
        return F

    def accelerations(self, X: np.ndarray, t: float) -> np.ndarray:
        """X[0] holds the right half, X[1] the left half, both indexed from the junction outwards."""
        F = self._line_forces(X)
        A = F / self.mass
        m0 = self.mass[0]
        jump = X[0, 0] - X[1, 0]
        mean_part = (F[0, 0] + F[1, 0]) / m0
        jump_part = (F[0, 0] - F[1, 0] - 2.0 * self.spring(t) * jump) / (m0 + 2.0 * self.params.C)
        A[0, 0] = 0.5 * (mean_part + jump_part)
        A[1, 0] = 0.5 * (mean_part - jump_part)
        return A

    def initial_state(self, phi_right: np.ndarray, phi_left: np.ndarray) -> ChainState:
        """State at rest: the previous level mirrors the next one."""
        X = np.vstack([phi_right, phi_left]).astype(float)
        X_prev = X + 0.5 * self.dt ** 2 * self.accelerations(X, 0.0)
        return ChainState(phi_right=X[0].copy(), phi_left=X[1].copy(), phi_right_prev=X_prev[0].copy(),
                          phi_left_prev=X_prev[1].copy(), dx=self.dx, dt=self.dt)

    def state_from_mode(self, mode: FloquetMode, amplitude: float = 1e-3 * PHI0) -> ChainState:
        x = self.positions()
        right = mode_profile(mode, x).u_omega
        left = mode_profile(mode, -x).u_omega
        # x = 0 belongs to the right half in the profile convention; the left junction node is at 0-
        left[0] = -right[0]
        return self.initial_state(amplitude * right, amplitude * left)

    def advance(self, state: ChainState, n_steps: int) -> ChainState:
        X = np.vstack([state.phi_right, state.phi_left])
        X_prev = np.vstack([state.phi_right_prev, state.phi_left_prev])
        dt2 = self.dt ** 2
        t, step = state.t, state.step
        for _ in range(n_steps):
            X_next = 2.0 * X - X_prev + dt2 * self.accelerations(X, t)
            X_prev, X = X, X_next
            t += self.dt
            step += 1
        return ChainState(phi_right=X[0], phi_left=X[1], phi_right_prev=X_prev[0], phi_left_prev=X_prev[1],
                          dx=self.dx, dt=self.dt, t=t, step=step)

    def energy(self, state: ChainState) -> float:
        """
        Discrete energy between the two stored time levels.

        Kinetic energy uses the half-step velocities and potential energy the bilinear form of the
        two levels; leapfrog conserves this quantity exactly when E_J is static.
        """
        X = np.vstack([state.phi_right, state.phi_left])
        X_prev = np.vstack([state.phi_right_prev, state.phi_left_prev])
        V = (X - X_prev) / self.dt
        kinetic = 0.5 * np.sum(self.mass * V ** 2) + 0.5 * self.params.C * (V[0, 0] - V[1, 0]) ** 2
        line = 0.5 * self.k_line * np.sum((X[:, 1:] - X[:, :-1]) * (X_prev[:, 1:] - X_prev[:, :-1]))
        junction = 0.5 * self.spring(state.t) * (X[0, 0] - X[1, 0]) * (X_prev[0, 0] - X_prev[1, 0])
        return float(kinetic + line + junction)


def chain_normal_modes(params: CircuitParams, n_cells: int) -> np.ndarray:
    """Angular frequencies of the static discrete chain from the generalised eigenproblem S v = w^2 M v."""
    chain = LCChain(params, None, n_cells)
    size = n_cells + 1
    M = np.diag(np.concatenate([chain.mass, chain.mass]))
    M[0, 0] += params.C
    M[size, size] += params.C
    M[0, size] = M[size, 0] = -params.C
    S = np.zeros((2 * size, 2 * size))
    for offset in (0, size):
        for i in range(n_cells):
            a, b = offset + i, offset + i + 1
            S[a, a] += chain.k_line
            S[b, b] += chain.k_line
            S[a, b] -= chain.k_line
            S[b, a] -= chain.k_line
    K = chain.spring(0.0)
    S[0, 0] += K
    S[size, size] += K
    S[0, size] -= K
    S[size, 0] -= K
    eigenvalues = eigh(S, M, eigvals_only=True)
    return np.sqrt(np.clip(eigenvalues, 0.0, None))


def simulate_chain(params: CircuitParams, tone: Optional[DriveTone], init: Union[FloquetMode, ChainState],
                   T: float, n_cells: Optional[int] = None, dt: Optional[float] = None,
                   x_sample: Optional[float] = None, record_every: Optional[int] = None) -> FluxSeries:
    """
    Run the leapfrog chain for a time T and record the flux at x_sample.

    Args:
        init: a mode whose carrier profile is used as the initial shape at rest, or a ready state.
        x_sample: sample point in [-d, d], defaults to oracle.sample_fraction*d.
        record_every: record one sample every this many steps.

    Raises:
        CFLViolationError: dt too large for the grid or the junction stiffness.
        InstabilityError: the flux norm grew beyond oracle.growth_limit times its initial value.
    """
    n_cells = n_cells or _oracle_setting("n_cells", 400)
    if n_cells < 100:
        raise ParameterValidationError("n_cells", "at least 100 cells per half are required")
    record_every = max(1, int(record_every or _oracle_setting("record_every", 16)))
    chain = LCChain(params, tone, n_cells, dt)
    state = init if isinstance(init, ChainState) else chain.state_from_mode(init)
    if state.n_cells != n_cells or state.dt != chain.dt:
        raise ParameterValidationError("init", "initial state does not match the chain grid or time step")
    if x_sample is None:
        x_sample = _oracle_setting("sample_fraction", 0.5) * params.d
    if abs(x_sample) > params.d * (1 + 1e-12):
        raise ParameterValidationError("x_sample", "sample point lies outside the resonator")
    sample_index = min(int(round(abs(x_sample) / chain.dx)), n_cells)
    sample_row = 0 if x_sample >= 0 else 1

    steps = int(round(T / chain.dt))
    n_records = steps // record_every
    growth_limit = _oracle_setting("growth_limit", 1e3)
    initial_norm = float(np.linalg.norm(np.concatenate([state.phi_right, state.phi_left])))
    times = np.empty(n_records)
    samples = np.empty(n_records)
    for i in range(n_records):
        state = chain.advance(state, record_every)
        row = state.phi_right if sample_row == 0 else state.phi_left
        times[i] = state.t
        samples[i] = row[sample_index]
        norm = float(np.linalg.norm(np.concatenate([state.phi_right, state.phi_left])))
        if initial_norm > 0 and norm > growth_limit * initial_norm:
            raise InstabilityError(f"flux norm grew by {norm / initial_norm:.3g} at t = {state.t / NS:.3f} ns")
    return FluxSeries(t=times, phi=samples, x_sample=x_sample, final_state=state)


def _dtft_amplitude(samples: np.ndarray, weights: np.ndarray, t: np.ndarray, omega: float) -> complex:
    return complex(2.0 * np.sum(weights * samples * np.exp(-1j * omega * t)) / np.sum(weights))


def spectrum(series: Union[FluxSeries, np.ndarray], window: Optional[str] = None,
             sample_interval: Optional[float] = None, min_samples: Optional[int] = None,
             threshold: float = 1e-3, refine: bool = True) -> SpectrumReport:
    """
    Windowed spectrum of a real time series with interpolated peaks.

    Peaks are local maxima above threshold times the largest bin that dominate their neighbourhood,
    located by a parabola through the log-magnitudes of the three surrounding bins and, with refine,
    polished by maximising the windowed DTFT magnitude. Complex amplitudes are cosine amplitudes
    referred to the first sample.
    """
    window = window or _oracle_setting("window", "hann")
    min_samples = min_samples or _oracle_setting("min_samples", 2 ** 14)
    if isinstance(series, FluxSeries):
        samples, sample_interval = series.phi, series.sample_interval
    else:
        samples = np.asarray(series, dtype=float)
    if sample_interval is None or not sample_interval > 0:
        raise ParameterValidationError("sample_interval", "a positive sample interval is required")
    n = len(samples)
    if n < min_samples:
        raise InsufficientSamplesError(f"{n} samples supplied, at least {min_samples} are required")

    weights = get_window(window, n, fftbins=False)
    scale = 2.0 / np.sum(weights)
    bins = np.fft.rfft(weights * samples) * scale
    omegas = 2 * math.pi * np.fft.rfftfreq(n, sample_interval)
    d_omega = omegas[1]
    magnitude = np.abs(bins)
    t = np.arange(n) * sample_interval

    indices, _ = find_peaks(magnitude, height=threshold * magnitude.max(), distance=8)
    peaks = []
    for i in indices:
        if i == 0 or i == len(magnitude) - 1:
            continue
        left, center, right = np.log(magnitude[i - 1:i + 2] + 1e-300)
        curvature = left - 2 * center + right
        offset = 0.5 * (left - right) / curvature if curvature < 0 else 0.0
        omega = (i + offset) * d_omega
        if refine:
            result = minimize_scalar(lambda w: -abs(_dtft_amplitude(samples, weights, t, w)),
                                     bounds=(omega - d_omega, omega + d_omega), method="bounded",
                                     options={"xatol": 1e-7 * d_omega})
            omega = float(result.x)
        peaks.append(SpectralPeak(omega=omega, amplitude=_dtft_amplitude(samples, weights, t, omega)))
    return SpectrumReport(omegas=omegas, amplitudes=bins, peaks=tuple(sorted(peaks, key=lambda p: p.omega)),
                          samples=np.asarray(samples, dtype=float), sample_interval=sample_interval, window=window)


def _relative_error(measured: float, expected: float) -> float:
    if expected == 0:
        return abs(measured)
    return abs(measured - expected) / abs(expected)


def verify_mode(params: CircuitParams, tone: DriveTone, branch: int, n_cells: Optional[int] = None,
                T: Optional[float] = None, convention=None, truncation_order: int = 1,
                record_every: Optional[int] = None) -> OracleReport:
    """
    Compare a solved mode with the time-domain chain seeded by its carrier profile.

    The flux is sampled at the open end x = d where every component has unit profile, so the measured
    sideband-to-carrier ratios are the sideband amplitudes themselves. Sidebands are read at the
    measured carrier plus and minus omega_d.
    """
    constants = derive_constants(params, [tone])
    if truncation_order > 1:
        mode = floquet_mode_general(constants, tone, branch, truncation_order, convention)
    else:
        mode = floquet_mode(constants, tone, branch, convention)
    if mode.convention is SidebandConvention.PRINTED and tone.delta_EJ != 0:
        get_logger().warning("The printed sideband convention gives sideband amplitudes of the opposite sign to the "
                             "time-domain chain; set solver.sideband_convention = \"eliminated\" to compare them")
    T = T or _oracle_setting("duration_ns", 60.0) * NS
    series = simulate_chain(params, tone, mode, T, n_cells=n_cells, x_sample=params.d, record_every=record_every)
    report = spectrum(series)
    omega_oracle = report.nearest(mode.omega).omega
    carrier = report.amplitude_at(omega_oracle)

    if tone.delta_EJ == 0:
        A_plus_oracle = A_minus_oracle = 0.0
    else:
        A_plus_oracle = (report.amplitude_at(omega_oracle + tone.omega_d) / carrier).real
        A_minus_oracle = (report.amplitude_at(abs(omega_oracle - tone.omega_d)) / carrier).real
    freq_error = omega_oracle - mode.omega
    get_logger().info(f"Oracle branch {branch}: carrier {mode.omega / GHZ:.6f} GHz vs {omega_oracle / GHZ:.6f} GHz "
                      f"({freq_error / MHZ:+.3f} MHz), A+ {mode.A_plus:+.5f} vs {A_plus_oracle:+.5f}, "
                      f"A- {mode.A_minus:+.5f} vs {A_minus_oracle:+.5f}")
    return OracleReport(freq_error=freq_error,
                        A_plus_error=_relative_error(A_plus_oracle, mode.A_plus),
                        A_minus_error=_relative_error(A_minus_oracle, mode.A_minus),
                        omega_oracle=omega_oracle, A_plus_oracle=A_plus_oracle, A_minus_oracle=A_minus_oracle,
                        mode=mode, series=series, spectrum=report)


def oracle_record(report: OracleReport, n_cells: int, dt: float, duration: float) -> OracleRecord:
    mode = report.mode
    return OracleRecord(branch=mode.branch, convention=mode.convention.value, omega_GHz=mode.omega / GHZ,
                        omega_oracle_GHz=report.omega_oracle / GHZ, freq_error_MHz=report.freq_error / MHZ,
                        A_plus=mode.A_plus, A_minus=mode.A_minus, A_plus_oracle=report.A_plus_oracle,
                        A_minus_oracle=report.A_minus_oracle, A_plus_error=report.A_plus_error,
                        A_minus_error=report.A_minus_error, n_cells=n_cells, dt_ns=dt / NS,
                        duration_ns=duration / NS)
