import math
from typing import Iterable, Mapping

from squid_modes.algo import CM, FF, GHZ, HBAR, PHI0_REDUCED
from squid_modes.algo.errors import ParameterValidationError
from squid_modes.algo.types import CircuitParams, DerivedConstants, DriveSet, DriveTone, ValidationReport
from squid_modes.config_loader import get_settings
from squid_modes.log import get_logger

_POSITIVE_FIELDS = ("d", "v", "Z", "E_J0")


def _as_drive_set(tones) -> DriveSet:
    if tones is None:
        return DriveSet()
    if isinstance(tones, DriveSet):
        return tones
    if isinstance(tones, DriveTone):
        return DriveSet((tones,))
    return DriveSet(tuple(tones))


def _parameter_errors(params: CircuitParams, tones: DriveSet) -> list[tuple[str, str]]:
    errors = []
    for name in _POSITIVE_FIELDS:
        value = getattr(params, name)
        if not (value > 0) or not math.isfinite(value):
            errors.append((name, f"{name} must be positive"))
    if not (params.C >= 0):
        errors.append(("C", "C must be non-negative"))
    for i, tone in enumerate(tones):
        if not (tone.omega_d > 0):
            errors.append((f"tones[{i}].omega_d", f"tones[{i}].omega_d must be positive"))
        if params.E_J0 > 0 and abs(tone.delta_EJ) >= params.E_J0:
            errors.append((f"tones[{i}].delta_EJ", "modulation exceeds static Josephson energy"))
    return errors


def validate(params: CircuitParams, tones=None) -> ValidationReport:
    """
    Check a circuit and its drive tones against every parameter invariant.

    Returns a report instead of raising. The neglected SQUID capacitance is only checked when the
    remaining parameters are valid, and a large value is reported as a warning.
    """
    tones = _as_drive_set(tones)
    errors = [message for _, message in _parameter_errors(params, tones)]
    warnings = []
    if not errors and params.C > 0:
        ratio_limit = get_settings().get("validation.capacitance_neglect_ratio", 0.01)
        # upper edge of the fifth odd-mode bracket
        omega_ref = 2.5 * math.pi * params.v / params.d
        ratio = params.C * omega_ref ** 2 * params.L_J
        if ratio > ratio_limit:
            warnings.append(
                f"SQUID capacitance is not negligible: C*omega^2*L_J = {ratio:.3g} > {ratio_limit:g}; "
                f"it is kept in C_omega but not in the boundary condition")
    for warning in warnings:
        get_logger().warning(warning)
    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))


def derive_constants(params: CircuitParams, tones=None) -> DerivedConstants:
    tones = _as_drive_set(tones)
    errors = _parameter_errors(params, tones)
    if errors:
        field, message = errors[0]
        raise ParameterValidationError(field, message)

    L_T = params.Z / params.v
    C_T = 1.0 / (params.Z * params.v)
    L_J = PHI0_REDUCED ** 2 / params.E_J0
    gamma = 2.0 * L_T * params.d / L_J
    gamma_d = tuple(gamma * tone.delta_EJ / (2.0 * params.E_J0) for tone in tones)
    return DerivedConstants(L_T=L_T, C_T=C_T, L_J=L_J, gamma=gamma, gamma_d=gamma_d,
                            d=params.d, v=params.v, E_J0=params.E_J0)


def energy_from_ghz(value_ghz: float) -> float:
    """E/hbar given in GHz to joules."""
    return HBAR * GHZ * value_ghz


def energy_to_ghz(energy: float) -> float:
    return energy / (HBAR * GHZ)


def circuit_from_record(record: Mapping) -> tuple[CircuitParams, DriveSet]:
    """
    Build SI parameters from a configuration record.

    Args:
        record: mapping with keys d_cm, v_m_per_s, impedance_ohm, EJ0_GHz, C_fF and a list `tones`
            of {omega_d_GHz, dEJ_over_EJ0} entries.
    """
    missing = [key for key in ("d_cm", "v_m_per_s", "impedance_ohm", "EJ0_GHz") if key not in record]
    if missing:
        raise ParameterValidationError(missing[0], f"circuit record is missing '{missing[0]}'")
    try:
        params = CircuitParams(
            d=float(record["d_cm"]) * CM,
            v=float(record["v_m_per_s"]),
            Z=float(record["impedance_ohm"]),
            E_J0=energy_from_ghz(float(record["EJ0_GHz"])),
            C=float(record.get("C_fF", 0.0) or 0.0) * FF,
        )
        tones = DriveSet(tuple(
            DriveTone(omega_d=float(t["omega_d_GHz"]) * GHZ,
                      delta_EJ=float(t["dEJ_over_EJ0"]) * params.E_J0)
            for t in (record.get("tones") or [])
        ))
    except (TypeError, KeyError) as e:
        raise ParameterValidationError("circuit", f"malformed circuit record: {e}") from e
    return params, tones


def circuit_to_record(params: CircuitParams, tones: Iterable[DriveTone] = ()) -> dict:
    return {
        "d_cm": params.d / CM,
        "v_m_per_s": params.v,
        "impedance_ohm": params.Z,
        "EJ0_GHz": energy_to_ghz(params.E_J0),
        "C_fF": params.C / FF,
        "tones": [{"omega_d_GHz": t.omega_d / GHZ, "dEJ_over_EJ0": t.delta_EJ / params.E_J0} for t in tones],
    }
