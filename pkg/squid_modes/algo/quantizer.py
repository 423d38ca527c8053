import math
from typing import Optional

import numpy as np
from pydantic import BaseModel

from squid_modes.algo import FF, GHZ, HBAR, KHZ, PHI0
from squid_modes.algo.modesolver import mode_profile
from squid_modes.algo.types import CircuitParams, FloquetMode, QuantizedMode


class ModeRecord(BaseModel):
    branch: int
    kd: float
    omega_GHz: float
    A_plus: float
    A_minus: float
    C_omega_fF: float
    phi_zpf_Wb: float
    kerr_kHz: float
    convention: str
    truncation_order: int = 1
    sideband_amplitudes: Optional[list[float]] = None
    kd_truncation_difference: Optional[float] = None
    # [omega_d_GHz, A_minus, A_plus] per tone when several tones act together
    tone_sidebands: Optional[list[list[float]]] = None


def effective_capacitance(mode: FloquetMode, params: CircuitParams) -> float:
    """C_omega = C_T*d*(1 + sin(2kd)/(2kd)) + C*cos^2(kd); sideband contributions are neglected."""
    kd = mode.kd
    return params.C_T * params.d * (1.0 + math.sin(2 * kd) / (2 * kd)) + params.C * math.cos(kd) ** 2


def _kerr(phi_zpf: float, kd: float, E_J0: float) -> float:
    phase = 2 * math.pi * phi_zpf / PHI0
    return -(E_J0 / (4 * HBAR)) * phase ** 4 * math.cos(kd) ** 4


def kerr_coefficient(qmode: QuantizedMode, params: CircuitParams) -> float:
    """Self-Kerr coefficient (rad/s) of the quartic term of the junction potential."""
    return _kerr(qmode.phi_zpf, qmode.mode.kd, params.E_J0)


def quantize(mode: FloquetMode, params: CircuitParams) -> QuantizedMode:
    C_omega = effective_capacitance(mode, params)
    omega = mode.omega
    phi_zpf = math.sqrt(HBAR / (2 * C_omega * omega))
    return QuantizedMode(
        C_omega=C_omega,
        L_omega=1.0 / (C_omega * omega ** 2),
        phi_zpf=phi_zpf,
        q_zpf=math.sqrt(HBAR * C_omega * omega / 2),
        kerr=_kerr(phi_zpf, mode.kd, params.E_J0),
        mode=mode,
    )


def voltage_prefactors(qmode: QuantizedMode, x) -> tuple:
    """Per-photon voltage amplitudes (V) of the carrier and both sidebands at position x."""
    mode = qmode.mode
    profile = mode_profile(mode, x)
    prefactor = 0.5 * math.sqrt(HBAR / (2 * qmode.C_omega * mode.omega))
    V_omega = prefactor * mode.omega * profile.u_omega
    V_plus = prefactor * mode.omega_plus * mode.A_plus * profile.u_plus
    V_minus = prefactor * mode.omega_minus * mode.A_minus * profile.u_minus
    if np.ndim(x) == 0:
        return float(V_omega[0]), float(V_plus[0]), float(V_minus[0])
    return V_omega, V_plus, V_minus


def mode_record(qmode: QuantizedMode, reference: Optional[FloquetMode] = None) -> ModeRecord:
    mode = qmode.mode
    return ModeRecord(
        branch=mode.branch,
        kd=mode.kd,
        omega_GHz=mode.omega / GHZ,
        A_plus=mode.A_plus,
        A_minus=mode.A_minus,
        C_omega_fF=qmode.C_omega / FF,
        phi_zpf_Wb=qmode.phi_zpf,
        kerr_kHz=qmode.kerr / KHZ,
        convention=mode.convention.value,
        truncation_order=mode.truncation_order,
        sideband_amplitudes=list(mode.amplitudes) if mode.amplitudes is not None else None,
        kd_truncation_difference=(mode.kd - reference.kd) if reference is not None else None,
    )
