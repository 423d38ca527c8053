from squid_modes.algo import GHZ
from squid_modes.algo.circuit import circuit_from_record, derive_constants
from squid_modes.algo.types import DriveTone

THREE_NODE_RECORD = {"d_cm": 1.2, "v_m_per_s": 1.2e8, "impedance_ohm": 50.0, "EJ0_GHz": 715.0, "C_fF": 0.0,
                     "tones": [{"omega_d_GHz": 2.0, "dEJ_over_EJ0": 0.4}]}
SHORT_LINE_RECORD = {**THREE_NODE_RECORD, "d_cm": 0.25, "tones": []}


def three_node_circuit():
    params, tones = circuit_from_record(THREE_NODE_RECORD)
    return params, tones[0], derive_constants(params, tones)


def short_line_circuit():
    params, _ = circuit_from_record(SHORT_LINE_RECORD)
    return params, derive_constants(params)


def tone(params, omega_d_GHz: float, relative: float) -> DriveTone:
    return DriveTone(omega_d=omega_d_GHz * GHZ, delta_EJ=relative * params.E_J0)
