import math
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.optimize import root_scalar

from squid_modes.algo import E_CHARGE, GHZ, HBAR, KHZ, MHZ
from squid_modes.algo.circuit import derive_constants
from squid_modes.algo.errors import (AmplitudeOutOfRangeError, NonConvergenceError, ParameterValidationError,
                                     ProfileDomainError, ResonanceError)
from squid_modes.algo.modesolver import (mode_at_carrier, mode_profile, multi_tone_mode, resolve_convention,
                                        static_mode, static_root)
from squid_modes.algo.quantizer import quantize
from squid_modes.algo.types import (CircuitParams, CouplingResult, DerivedConstants, DriveTone, GateCalibration,
                                    QuantizedMode, Sideband, TonePair, TransmonParams)
from squid_modes.config_loader import get_settings
from squid_modes.log import get_logger


class CalibrationReport(BaseModel):
    tones_GHz: list[float]
    dEJ_over_EJ0: list[float]
    G_MHz: list[float]
    achieved_G_MHz: float
    omega_shifted_GHz: float
    delta_MHz: float
    qubit_Omega_GHz: list[float]
    iterations: int


def transmon_charging_energy(Omega: float, ratio: float) -> float:
    """Charging energy (J) from the transition frequency, using hbar*Omega = E_C*(sqrt(8*E_J/E_C) - 1)."""
    return HBAR * Omega / (math.sqrt(8.0 * ratio) - 1.0)


def validate_transmon(t: TransmonParams):
    if not 0.0 <= t.beta < 1.0:
        raise ParameterValidationError("beta", "beta must lie in [0, 1)")
    if not t.ratio > 0:
        raise ParameterValidationError("ratio", "E_J/E_C ratio must be positive")
    if t.T2 > 2 * t.T1:
        raise ParameterValidationError("T2", "T2 must not exceed 2*T1")
    warning_ratio = get_settings().get("validation.transmon_ratio_warning", 20.0)
    if t.ratio < warning_ratio:
        get_logger().warning(f"E_J/E_C = {t.ratio:g} is below {warning_ratio:g}; the transmon two-level "
                             f"reduction is poorly justified")


def charge_matrix_element(t: TransmonParams) -> float:
    """|<1|2e*beta*n|0>| in coulomb; the factor i of the matrix element is dropped."""
    return math.sqrt(2.0) * E_CHARGE * t.beta * (t.ratio / 8.0) ** 0.25


def _coupling_scale(qmode: QuantizedMode) -> float:
    return 4.0 * math.sqrt(HBAR * qmode.C_omega * qmode.mode.omega)


def _profile_at(qmode: QuantizedMode, x_t: float):
    if abs(x_t) > qmode.mode.d * (1 + 1e-12):
        raise ProfileDomainError(f"transmon position {x_t:g} m lies outside the resonator")
    return mode_profile(qmode.mode, x_t)


def sideband_coupling(qmode: QuantizedMode, t: TransmonParams, which) -> CouplingResult:
    which = Sideband(which)
    mode = qmode.mode
    profile = _profile_at(qmode, t.x_t)
    if which == Sideband.CARRIER:
        weight = mode.omega * profile.u_omega[0]
    elif which == Sideband.PLUS:
        weight = mode.omega_plus * mode.A_plus * profile.u_plus[0]
    elif which == Sideband.MINUS:
        weight = mode.omega_minus * mode.A_minus * profile.u_minus[0]
    else:
        raise ParameterValidationError("which", "sideband must be one of minus, carrier, plus")
    G = charge_matrix_element(t) * weight / _coupling_scale(qmode)
    return CouplingResult(G=float(G), sideband=which, mode=mode)


def quasi_static_coupling(params: CircuitParams, tone: DriveTone, t: TransmonParams,
                          branch: int = 1) -> CouplingResult:
    """
    Coupling predicted by treating the modulated SQUID as a slowly varying static element.

    The sideband weight is the relative half-swing of the static resonance between E_J0 - dEJ and
    E_J0 + dEJ; the result does not depend on the modulation frequency.
    """
    constants = derive_constants(params)
    if abs(tone.delta_EJ) >= params.E_J0:
        raise ParameterValidationError("delta_EJ", "modulation exceeds static Josephson energy")
    omega_up = _static_omega(replace(params, E_J0=params.E_J0 + tone.delta_EJ), branch)
    omega_down = _static_omega(replace(params, E_J0=params.E_J0 - tone.delta_EJ), branch)
    delta_omega = 0.5 * (omega_up - omega_down)

    mode = static_mode(constants, branch)
    qmode = quantize(mode, params)
    u = _profile_at(qmode, t.x_t).u_omega[0]
    G = charge_matrix_element(t) * mode.omega * (delta_omega / (2 * mode.omega)) * u / _coupling_scale(qmode)
    return CouplingResult(G=float(G), sideband=Sideband.QUASI_STATIC, mode=mode)


def _static_omega(params: CircuitParams, branch: int) -> float:
    constants = derive_constants(params)
    return constants.omega_from_kd(static_root(constants.gamma, branch))


def cross_kerr(G_omega: float, Delta: float, alpha: float) -> float:
    """
    Dispersive qubit-photon shift chi = G^2*alpha/(Delta*(Delta + alpha)), all in rad/s.

    Args:
        G_omega: coupling to the carrier.
        Delta: qubit frequency minus carrier frequency.
        alpha: transmon anharmonicity, -E_C/hbar.
    """
    scale = abs(alpha) if alpha else abs(G_omega)
    if abs(Delta) <= 0.01 * scale or abs(Delta + alpha) <= 0.01 * scale:
        raise ResonanceError(f"cross-Kerr denominators vanish: Delta={Delta:.6g} rad/s, alpha={alpha:.6g} rad/s")
    return G_omega ** 2 * alpha / (Delta * (Delta + alpha))


def carrier_cross_kerr(qmode: QuantizedMode, t: TransmonParams) -> float:
    G_omega = sideband_coupling(qmode, t, Sideband.CARRIER).G
    return cross_kerr(G_omega, t.Omega - qmode.mode.omega, -t.E_C / HBAR)


def _lower_sideband_coupling(params: CircuitParams, constants: DerivedConstants, t: TransmonParams,
                             omega_d: float, amplitude: float, kd: float, branch: int, convention) -> float:
    tone = DriveTone(omega_d=omega_d, delta_EJ=amplitude * params.E_J0)
    mode = mode_at_carrier(constants, tone, branch, kd, convention)
    return sideband_coupling(quantize(mode, params), t, Sideband.MINUS).G


def _solve_amplitude(params: CircuitParams, constants: DerivedConstants, t: TransmonParams, omega_d: float,
                     target: float, kd: float, branch: int, convention) -> float:
    if target == 0:
        return 0.0

    def residual(amplitude):
        return _lower_sideband_coupling(params, constants, t, omega_d, amplitude, kd, branch, convention) - target

    solution = root_scalar(residual, x0=0.05, x1=0.1, method="secant", xtol=1e-12, maxiter=50)
    if not solution.converged:
        raise NonConvergenceError(f"amplitude solve for tone {omega_d / GHZ:.6f} GHz did not converge")
    return float(solution.root)


def calibrate_gate(params: CircuitParams, qubits: Sequence[TransmonParams], target_G: float, delta: float,
                   branch: int = 1, convention=None, max_iterations: Optional[int] = None,
                   tolerance: Optional[float] = None, amplitude_limit: Optional[float] = None) -> GateCalibration:
    """
    Find tone pairs and amplitudes that give every qubit the same sideband coupling target_G.

    Each qubit n gets the pair omega_t = omega_s - delta - Omega_n and omega_p = omega_s - delta + Omega_n,
    both coupling through the lower sideband. omega_s is the carrier shifted by all tones together and
    is found by fixed-point iteration; within one iteration the amplitudes are solved at fixed carrier.
    All couplings are given the sign of the first qubit's coupling at positive amplitude. The p-tone
    sits above the carrier, so its amplitude comes out with the opposite sign to its own t-tone.
    """
    settings = get_settings()
    convention = resolve_convention(convention)
    max_iterations = max_iterations or settings.get("gate.max_iterations", 50)
    tolerance = tolerance or settings.get("gate.carrier_tolerance_kHz", 10.0) * KHZ
    amplitude_limit = amplitude_limit or settings.get("gate.amplitude_limit", 0.5)
    if target_G < 0:
        raise ParameterValidationError("target_G", "target_G must not be negative")
    if not qubits:
        raise ParameterValidationError("qubits", "at least one qubit is required")

    constants = derive_constants(params)
    omega_s = constants.omega_from_kd(static_root(constants.gamma, branch))
    for i, t in enumerate(qubits):
        validate_transmon(t)
        if not t.Omega < omega_s:
            raise ParameterValidationError(f"qubits[{i}].Omega", "qubit frequencies must lie below the carrier")

    first = qubits[0]
    reference = _lower_sideband_coupling(params, constants, first, omega_s - delta - first.Omega, 0.1,
                                         constants.kd_from_omega(omega_s), branch, convention)
    sign = 1.0 if reference >= 0 else -1.0

    for iteration in range(1, max_iterations + 1):
        kd_s = constants.kd_from_omega(omega_s)
        pairs = []
        for t in qubits:
            omega_t = omega_s - delta - t.Omega
            omega_p = omega_s - delta + t.Omega
            if omega_t <= 0:
                raise ParameterValidationError("Omega", f"tone frequency for qubit at {t.Omega / GHZ:g} GHz is not positive")
            amplitudes = []
            for omega_d in (omega_t, omega_p):
                amplitude = _solve_amplitude(params, constants, t, omega_d, sign * target_G, kd_s, branch, convention)
                if abs(amplitude) > amplitude_limit:
                    raise AmplitudeOutOfRangeError(
                        f"tone {omega_d / GHZ:.6f} GHz needs dEJ/EJ0 = {amplitude:.4f}, beyond {amplitude_limit:g}")
                amplitudes.append(amplitude)
            G_t, G_p = (_lower_sideband_coupling(params, constants, t, w, a, kd_s, branch, convention)
                        for w, a in zip((omega_t, omega_p), amplitudes))
            pairs.append(TonePair(Omega=t.Omega, omega_t=omega_t, omega_p=omega_p,
                                  dEJ_t=amplitudes[0] * params.E_J0, dEJ_p=amplitudes[1] * params.E_J0,
                                  G_t=G_t, G_p=G_p))

        tones = [tone for pair in pairs for tone in (DriveTone(pair.omega_t, pair.dEJ_t), DriveTone(pair.omega_p, pair.dEJ_p))]
        omega_next = multi_tone_mode(constants, tones, branch, convention).omega
        change = omega_next - omega_s
        get_logger().info(f"Calibration iteration {iteration}: carrier {omega_s / GHZ:.6f} -> "
                          f"{omega_next / GHZ:.6f} GHz, amplitudes "
                          f"{[round(p.dEJ_t / params.E_J0, 4) for p in pairs]} / "
                          f"{[round(p.dEJ_p / params.E_J0, 4) for p in pairs]}")
        if abs(change) < tolerance:
            achieved = float(np.mean([abs(g) for p in pairs for g in (p.G_t, p.G_p)]))
            return GateCalibration(pairs=tuple(pairs), G=achieved, delta=delta, omega_shifted=omega_s,
                                   iterations=iteration, E_J0=params.E_J0)
        omega_s = omega_next

    raise NonConvergenceError(f"shifted carrier did not converge within {max_iterations} iterations")


def calibration_report(calibration: GateCalibration) -> CalibrationReport:
    tones = calibration.tones
    return CalibrationReport(
        tones_GHz=[tone.omega_d / GHZ for tone in tones],
        dEJ_over_EJ0=[tone.delta_EJ / calibration.E_J0 for tone in tones],
        G_MHz=[g / MHZ for pair in calibration.pairs for g in (pair.G_t, pair.G_p)],
        achieved_G_MHz=calibration.G / MHZ,
        omega_shifted_GHz=calibration.omega_shifted / GHZ,
        delta_MHz=calibration.delta / MHZ,
        qubit_Omega_GHz=[pair.Omega / GHZ for pair in calibration.pairs],
        iterations=calibration.iterations,
    )
