from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.signal import get_window

from squid_modes.algo import PHI0, PHI0_REDUCED


class Sideband(str, Enum):
    MINUS = "minus"
    CARRIER = "carrier"
    PLUS = "plus"
    QUASI_STATIC = "quasi_static"


class SidebandConvention(str, Enum):
    # denominators gamma*cos(k d) + k d*sin(k d)
    PRINTED = "printed"
    # denominators k d*sin(k d) - gamma*cos(k d), obtained by eliminating the sideband rows
    ELIMINATED = "eliminated"


@dataclass(frozen=True)
class CircuitParams:
    """Geometry and electrical constants of the resonator and its central SQUID, in SI units."""
    d: float
    v: float
    Z: float
    E_J0: float
    C: float = 0.0
    phi0: float = PHI0

    @property
    def L_T(self) -> float:
        return self.Z / self.v

    @property
    def C_T(self) -> float:
        return 1.0 / (self.Z * self.v)

    @property
    def L_J(self) -> float:
        return PHI0_REDUCED ** 2 / self.E_J0


@dataclass(frozen=True)
class DriveTone:
    omega_d: float
    delta_EJ: float


@dataclass(frozen=True)
class DriveSet:
    tones: tuple[DriveTone, ...] = ()

    def __iter__(self):
        return iter(self.tones)

    def __len__(self):
        return len(self.tones)

    def __getitem__(self, item):
        return self.tones[item]


@dataclass(frozen=True)
class DerivedConstants:
    L_T: float
    C_T: float
    L_J: float
    gamma: float
    gamma_d: tuple[float, ...]
    d: float
    v: float
    E_J0: float

    def gamma_d_for(self, tone: DriveTone) -> float:
        return self.gamma * tone.delta_EJ / (2.0 * self.E_J0)

    def shift(self, omega_d: float) -> float:
        """Dimensionless sideband wavenumber offset omega_d*d/v."""
        return omega_d * self.d / self.v

    def omega_from_kd(self, kd: float) -> float:
        return kd * self.v / self.d

    def kd_from_omega(self, omega: float) -> float:
        return omega * self.d / self.v


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class FloquetMode:
    branch: int
    kd: float
    omega: float
    A_plus: float
    A_minus: float
    tone: Optional[DriveTone]
    d: float
    v: float
    convention: SidebandConvention = SidebandConvention.PRINTED
    truncation_order: int = 1
    # phi(omega + m*omega_d) for m = -M..M, normalised to phi(omega) = 1
    amplitudes: Optional[tuple[float, ...]] = None

    @property
    def omega_d(self) -> float:
        return self.tone.omega_d if self.tone is not None else 0.0

    @property
    def k(self) -> float:
        return self.kd / self.d

    @property
    def kd_plus(self) -> float:
        return self.kd + self.omega_d * self.d / self.v

    @property
    def kd_minus(self) -> float:
        return self.kd - self.omega_d * self.d / self.v

    @property
    def omega_plus(self) -> float:
        return self.omega + self.omega_d

    @property
    def omega_minus(self) -> float:
        # signed: negative when the drive exceeds the carrier
        return self.omega - self.omega_d


@dataclass(frozen=True)
class MultiToneMode:
    """Carrier shifted by several simultaneous tones, with one FloquetMode per tone evaluated at that carrier."""
    branch: int
    kd: float
    omega: float
    static_kd: float
    modes: tuple[FloquetMode, ...]


@dataclass(frozen=True, eq=False)
class ModeProfile:
    x: np.ndarray
    u_omega: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray


@dataclass(frozen=True)
class SweepPoint:
    amplitude: float
    omega: float
    kd: float
    error: str = ""


@dataclass(frozen=True)
class SweepCurve:
    branch: int
    omega_d: float
    points: tuple[SweepPoint, ...]

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.points])

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    @property
    def failed(self) -> tuple[SweepPoint, ...]:
        return tuple(p for p in self.points if p.error)


@dataclass(frozen=True)
class QuantizedMode:
    C_omega: float
    L_omega: float
    phi_zpf: float
    q_zpf: float
    kerr: float
    mode: FloquetMode


@dataclass(frozen=True)
class TransmonParams:
    ratio: float
    E_C: float
    beta: float
    Omega: float
    x_t: float
    T1: float = float("inf")
    T2: float = float("inf")
    n_g: float = 0.0


@dataclass(frozen=True)
class CouplingResult:
    G: float
    sideband: Sideband
    mode: Optional[FloquetMode] = None


@dataclass(frozen=True)
class TonePair:
    Omega: float
    omega_t: float
    omega_p: float
    dEJ_t: float
    dEJ_p: float
    G_t: float
    G_p: float


@dataclass(frozen=True)
class GateCalibration:
    pairs: tuple[TonePair, ...]
    G: float
    delta: float
    omega_shifted: float
    iterations: int
    E_J0: float

    @property
    def tones(self) -> tuple[DriveTone, ...]:
        result = []
        for pair in self.pairs:
            result.append(DriveTone(pair.omega_t, pair.dEJ_t))
            result.append(DriveTone(pair.omega_p, pair.dEJ_p))
        return tuple(result)


@dataclass(frozen=True)
class GateConfig:
    G: float
    delta: float
    chi: float = 0.0
    kappa: float = 0.0
    T1: tuple[float, ...] = (float("inf"), float("inf"))
    T2: tuple[float, ...] = (float("inf"), float("inf"))
    N: int = 10
    include_kerr: bool = True
    t_final: Optional[float] = None
    dt: float = 0.05e-9
    initial_state: str = "gg0"
    n_qubits: int = 2
    snapshot_every: int = 10
    beam_splitter: bool = False

    @property
    def gate_time(self) -> float:
        return 2 * np.pi / abs(self.delta) if self.delta else 0.0

    @property
    def duration(self) -> float:
        return self.t_final if self.t_final else self.gate_time


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    matrix: np.ndarray
    label: str

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(np.abs(self.matrix).max(), 1.0)
        return bool(np.abs(self.matrix - self.matrix.conj().T).max() <= rtol * scale)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    snapshots: list[np.ndarray]
    dims: tuple[int, ...]
    n_photon: np.ndarray
    rho_gggg: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rho_eeee: np.ndarray = field(default_factory=lambda: np.zeros(0))
    im_rho_eegg: np.ndarray = field(default_factory=lambda: np.zeros(0))
    concurrence: np.ndarray = field(default_factory=lambda: np.zeros(0))
    concurrence_shortcut: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fidelity: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fidelity_phase_fixed: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_eigenvalue: float = 0.0
    max_trace_error: float = 0.0
    max_hermiticity_error: float = 0.0

    @property
    def final_state(self) -> np.ndarray:
        return self.snapshots[-1]


@dataclass(eq=False)
class ChainState:
    """Two-time-level leapfrog state of the discretised line.

    Arrays are indexed from the junction outwards: index 0 is the node next to the SQUID,
    index n_cells the open end.
    """
    phi_right: np.ndarray
    phi_left: np.ndarray
    phi_right_prev: np.ndarray
    phi_left_prev: np.ndarray
    dx: float
    dt: float
    t: float = 0.0
    step: int = 0

    @property
    def n_cells(self) -> int:
        return len(self.phi_right) - 1

    @property
    def junction_jump(self) -> float:
        return float(self.phi_right[0] - self.phi_left[0])

    def reversed(self) -> "ChainState":
        return ChainState(
            phi_right=self.phi_right_prev.copy(),
            phi_left=self.phi_left_prev.copy(),
            phi_right_prev=self.phi_right.copy(),
            phi_left_prev=self.phi_left.copy(),
            dx=self.dx,
            dt=self.dt,
            t=self.t,
            step=self.step,
        )


@dataclass(frozen=True, eq=False)
class FluxSeries:
    t: np.ndarray
    phi: np.ndarray
    x_sample: float
    final_state: ChainState

    @property
    def sample_interval(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0


@dataclass(frozen=True)
class SpectralPeak:
    omega: float
    amplitude: complex


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    omegas: np.ndarray
    amplitudes: np.ndarray
    peaks: tuple[SpectralPeak, ...]
    samples: np.ndarray
    sample_interval: float
    window: str

    def nearest(self, omega: float) -> SpectralPeak:
        if not self.peaks:
            raise ValueError("spectrum has no peaks")
        return min(self.peaks, key=lambda p: abs(p.omega - omega))

    def amplitude_at(self, omega: float) -> complex:
        """Windowed DTFT of the stored samples at an arbitrary angular frequency, scaled to cosine amplitude."""
        n = len(self.samples)
        w = get_window(self.window, n, fftbins=False)
        t = np.arange(n) * self.sample_interval
        return complex(2.0 * np.sum(w * self.samples * np.exp(-1j * omega * t)) / np.sum(w))

    def ratio(self, omega_side: float, omega_carrier: float) -> complex:
        return self.amplitude_at(omega_side) / self.amplitude_at(omega_carrier)


@dataclass(frozen=True)
class OracleReport:
    freq_error: float
    A_plus_error: float
    A_minus_error: float
    omega_oracle: float
    A_plus_oracle: float
    A_minus_oracle: float
    mode: FloquetMode
    series: Optional[FluxSeries] = None
    spectrum: Optional[SpectrumReport] = None
