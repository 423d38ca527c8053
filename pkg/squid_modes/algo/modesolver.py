"""
Odd-mode resonances of a resonator with a periodically modulated central SQUID.

The boundary condition at the SQUID couples the carrier wavenumber kd to the sideband wavenumbers
k_m d = kd + m*omega_d*d/v. Truncating at one sideband on each side gives a scalar transcendental
equation for kd; the general solver keeps M sidebands on each side and looks for zeros of the
determinant of the resulting tridiagonal system.

All functions are pure and work on dimensionless wavenumbers; frequencies are in rad/s.
"""
import math
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from squid_modes.algo.errors import (BracketFailureError, ModeSolverError, NoRootInBracketError,
                                     NonConvergedTruncationError, ParameterValidationError,
                                     PoleProximityError, ProfileDomainError, SweepPointError)
from squid_modes.algo.types import (DerivedConstants, DriveTone, FloquetMode, ModeProfile, MultiToneMode,
                                    SidebandConvention, SweepCurve, SweepPoint)
from squid_modes.config_loader import get_settings
from squid_modes.log import get_logger

_EPS = np.finfo(float).eps


def _solver_setting(name: str, default):
    return get_settings().get(f"solver.{name}", default)


def resolve_convention(convention=None) -> SidebandConvention:
    if convention is None:
        convention = _solver_setting("sideband_convention", SidebandConvention.PRINTED.value)
    if isinstance(convention, SidebandConvention):
        return convention
    try:
        return SidebandConvention(str(convention).strip().lower())
    except ValueError:
        allowed = ", ".join(c.value for c in SidebandConvention)
        raise ParameterValidationError("sideband_convention",
                                       f"unknown sideband convention '{convention}', expected one of: {allowed}")


def _branch_index(branch: int) -> int:
    if int(branch) != branch or branch < 1 or branch % 2 == 0:
        raise ParameterValidationError("branch", f"branch must be a positive odd integer, got {branch}")
    return (int(branch) + 1) // 2


def _check_tone(constants: DerivedConstants, tone: DriveTone):
    if not tone.omega_d > 0:
        raise ParameterValidationError("omega_d", "omega_d must be positive")
    if abs(tone.delta_EJ) >= constants.E_J0:
        raise ParameterValidationError("delta_EJ", "modulation exceeds static Josephson energy")


def sideband_denominator(q, gamma: float, convention: SidebandConvention):
    q = np.asarray(q, dtype=float)
    if convention == SidebandConvention.PRINTED:
        return gamma * np.cos(q) + q * np.sin(q)
    return q * np.sin(q) - gamma * np.cos(q)


def _static_function(kd, gamma: float):
    # kd*tan(kd) - gamma multiplied through by cos(kd), free of poles
    return kd * np.sin(kd) - gamma * np.cos(kd)


def static_root(gamma: float, branch: int) -> float:
    n = _branch_index(branch)
    if not gamma > 0:
        raise ParameterValidationError("gamma", "gamma must be positive")
    lo, hi = (n - 1) * math.pi, (n - 0.5) * math.pi
    f_lo, f_hi = _static_function(lo, gamma), _static_function(hi, gamma)
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketFailureError(f"no sign change of kd*tan(kd) - {gamma:g} in ({lo:.6f}, {hi:.6f})")
    kd = brentq(_static_function, lo, hi, args=(gamma,), xtol=_solver_setting("kd_tolerance", 1e-12),
                rtol=4 * _EPS, maxiter=500)
    residual = abs(kd * math.tan(kd) - gamma)
    if residual > _solver_setting("residual_limit", 1e-9) * max(gamma, 1.0):
        raise BracketFailureError(f"static root kd={kd!r} has residual {residual:.3g}")
    return float(kd)


def static_odd_modes(constants: DerivedConstants, n_roots: int) -> list[float]:
    """The first n_roots solutions of kd*tan(kd) = gamma, one per interval ((n-1)pi, (n-1/2)pi)."""
    if n_roots < 1:
        raise ParameterValidationError("n_roots", "n_roots must be at least 1")
    return [static_root(constants.gamma, 2 * n - 1) for n in range(1, n_roots + 1)]


def static_mode(constants: DerivedConstants, branch: int, convention=None) -> FloquetMode:
    kd = static_root(constants.gamma, branch)
    return FloquetMode(branch=branch, kd=kd, omega=constants.omega_from_kd(kd), A_plus=0.0, A_minus=0.0,
                       tone=None, d=constants.d, v=constants.v, convention=resolve_convention(convention))


def _carrier_function(kd, gamma: float, gamma_d: float, s: float, convention: SidebandConvention):
    kd = np.asarray(kd, dtype=float)
    correction = np.zeros_like(kd)
    with np.errstate(divide="ignore", invalid="ignore"):
        for q in (kd + s, kd - s):
            correction = correction + np.cos(q) / sideband_denominator(q, gamma, convention)
    return kd * np.sin(kd) - np.cos(kd) * (gamma + gamma_d ** 2 * correction)


def _split_at_poles(a: float, b: float, pole_functions: Sequence[Callable]) -> list[tuple[float, float]]:
    poles = []
    for pole_function in pole_functions:
        fa, fb = pole_function(a), pole_function(b)
        if np.sign(fa) != np.sign(fb):
            poles.append(brentq(pole_function, a, b, xtol=1e-15, rtol=4 * _EPS))
    edges = [a]
    for p in sorted(poles):
        gap = 1e-12 * max(1.0, abs(p))
        edges.extend([p - gap, p + gap])
    edges.append(b)
    return [(edges[i], edges[i + 1]) for i in range(0, len(edges), 2) if edges[i + 1] > edges[i]]


def _nearest_sign_change(func: Callable, seed: float, lo_limit: float, hi_limit: float,
                         pole_functions: Sequence[Callable] = ()) -> tuple[float, float]:
    """
    Find the sign change of func closest to seed inside (lo_limit, hi_limit).

    The search window grows by solver.bracket_step on each side until a sign change is found.
    Grid cells in which one of pole_functions changes sign are split at the pole, so that a jump
    across a pole is never mistaken for a root.
    """
    step = _solver_setting("scan_step", 5e-4)
    growth = _solver_setting("bracket_step", 0.2)
    width = growth
    while True:
        lo, hi = max(lo_limit, seed - width), min(hi_limit, seed + width)
        n_cells = max(int(math.ceil((hi - lo) / step)), 2)
        grid = np.linspace(lo, hi, n_cells + 1)
        values = func(grid)
        sign_change = np.sign(values[:-1]) != np.sign(values[1:])
        has_pole = np.zeros(n_cells, dtype=bool)
        for pole_function in pole_functions:
            p = pole_function(grid)
            has_pole |= np.sign(p[:-1]) != np.sign(p[1:])

        candidates = [(grid[i], grid[i + 1]) for i in np.flatnonzero(sign_change & ~has_pole)]
        for i in np.flatnonzero(has_pole):
            for a, b in _split_at_poles(grid[i], grid[i + 1], pole_functions):
                if np.sign(func(a)) != np.sign(func(b)):
                    candidates.append((a, b))
        if candidates:
            return min(candidates, key=lambda ab: abs(0.5 * (ab[0] + ab[1]) - seed))
        if lo <= lo_limit and hi >= hi_limit:
            raise NoRootInBracketError(
                f"no root in ({lo_limit:.6f}, {hi_limit:.6f}) around seed kd={seed:.6f}")
        get_logger().debug(f"Expanding root bracket around kd={seed:.6f} to half-width {width + growth:.2f}")
        width += growth


def _branch_limits(branch: int) -> tuple[float, float]:
    n = _branch_index(branch)
    return max((n - 1) * math.pi, 1e-9), (n + 1) * math.pi


def _check_poles(kd: float, denominators: Iterable[float]):
    threshold = _solver_setting("pole_threshold", 1e-3)
    for denominator in denominators:
        if abs(denominator) < threshold:
            raise PoleProximityError(
                f"sideband denominator {denominator:.3g} at kd={kd:.9f} is below {threshold:g}: "
                f"a sideband is resonant with another mode and the truncation is invalid",
                kd=kd, denominator=float(denominator))


def sideband_amplitudes(constants: DerivedConstants, tone: DriveTone, kd: float,
                        convention=None) -> tuple[float, float]:
    """Sideband amplitude ratios (A_plus, A_minus) of a carrier at a fixed kd."""
    convention = resolve_convention(convention)
    gamma_d = constants.gamma_d_for(tone)
    if gamma_d == 0:
        return 0.0, 0.0
    s = constants.shift(tone.omega_d)
    d_plus = float(sideband_denominator(kd + s, constants.gamma, convention))
    d_minus = float(sideband_denominator(kd - s, constants.gamma, convention))
    _check_poles(kd, (d_plus, d_minus))
    numerator = gamma_d * math.cos(kd)
    return numerator / d_plus, numerator / d_minus


def mode_at_carrier(constants: DerivedConstants, tone: DriveTone, branch: int, kd: float,
                    convention=None) -> FloquetMode:
    convention = resolve_convention(convention)
    A_plus, A_minus = sideband_amplitudes(constants, tone, kd, convention)
    return FloquetMode(branch=branch, kd=kd, omega=constants.omega_from_kd(kd), A_plus=A_plus, A_minus=A_minus,
                       tone=tone, d=constants.d, v=constants.v, convention=convention)


def _carrier_residual(kd: float, value: float) -> float:
    # the scalar equation divided back by sin(kd) (or cos(kd) near multiples of pi)
    return abs(value) / max(abs(math.sin(kd)), abs(math.cos(kd)))


def floquet_mode(constants: DerivedConstants, tone: DriveTone, branch: int, convention=None,
                 seed: Optional[float] = None) -> FloquetMode:
    """
    Solve the single-sideband truncation for one drive tone.

    Args:
        constants: dimensionless circuit constants.
        tone: modulation tone; its delta_EJ may be negative.
        branch: odd-mode index 1, 3, 5, ...
        convention: sideband denominator convention, defaults to solver.sideband_convention.
        seed: starting kd for the bracket search, defaults to the static root (used for continuation).

    Raises:
        PoleProximityError: a sideband denominator is close to zero at the root.
        NoRootInBracketError: no root between the neighbouring static intervals.
    """
    convention = resolve_convention(convention)
    _check_tone(constants, tone)
    gamma = constants.gamma
    gamma_d = constants.gamma_d_for(tone)
    s = constants.shift(tone.omega_d)
    kd0 = static_root(gamma, branch)
    if gamma_d == 0:
        return mode_at_carrier(constants, tone, branch, kd0, convention)

    def func(kd):
        return _carrier_function(kd, gamma, gamma_d, s, convention)

    pole_functions = (lambda kd: sideband_denominator(kd + s, gamma, convention),
                      lambda kd: sideband_denominator(kd - s, gamma, convention))
    lo_limit, hi_limit = _branch_limits(branch)
    a, b = _nearest_sign_change(func, kd0 if seed is None else seed, lo_limit, hi_limit, pole_functions)
    kd = float(brentq(lambda k: float(func(k)), a, b, xtol=_solver_setting("kd_tolerance", 1e-12),
                      rtol=4 * _EPS, maxiter=500))
    mode = mode_at_carrier(constants, tone, branch, kd, convention)

    residual = _carrier_residual(kd, float(func(kd)))
    if residual > _solver_setting("residual_limit", 1e-9) * max(gamma, 1.0):
        raise BracketFailureError(f"carrier root kd={kd!r} has residual {residual:.3g}")
    get_logger().debug(f"Branch {branch}: kd {kd0:.9f} -> {kd:.9f}, A+={mode.A_plus:.6g}, A-={mode.A_minus:.6g}")
    return mode


def sideband_matrix(kd, gamma: float, gamma_d: float, s: float, M: int, convention: SidebandConvention):
    """
    The (2M+1)-row tridiagonal system acting on phi(omega + m*omega_d), m = -M..M.

    Accepts a scalar kd or a 1-d array of kd values, in which case a stack of matrices is returned.
    """
    kd = np.atleast_1d(np.asarray(kd, dtype=float))
    m = np.arange(-M, M + 1)
    q = kd[:, None] + m[None, :] * s
    diag = np.where(m[None, :] == 0, _static_function(q, gamma), sideband_denominator(q, gamma, convention))
    size = 2 * M + 1
    T = np.zeros((len(kd), size, size))
    idx = np.arange(size)
    T[:, idx, idx] = diag
    # row i couples to its neighbours through the cosine of the neighbour's wavenumber
    T[:, idx[:-1], idx[1:]] = -gamma_d * np.cos(q[:, 1:])
    T[:, idx[1:], idx[:-1]] = -gamma_d * np.cos(q[:, :-1])
    return T


def floquet_mode_general(constants: DerivedConstants, tone: DriveTone, branch: int, M: int,
                         convention=None, seed: Optional[float] = None) -> FloquetMode:
    if M < 1:
        raise ParameterValidationError("M", "truncation order M must be at least 1")
    convention = resolve_convention(convention)
    _check_tone(constants, tone)
    gamma = constants.gamma
    gamma_d = constants.gamma_d_for(tone)
    s = constants.shift(tone.omega_d)
    kd0 = static_root(gamma, branch)
    center = M

    if gamma_d == 0:
        amplitudes = np.zeros(2 * M + 1)
        amplitudes[center] = 1.0
        return FloquetMode(branch=branch, kd=kd0, omega=constants.omega_from_kd(kd0), A_plus=0.0, A_minus=0.0,
                           tone=tone, d=constants.d, v=constants.v, convention=convention,
                           truncation_order=M, amplitudes=tuple(amplitudes))

    def det(kd):
        return np.linalg.det(sideband_matrix(kd, gamma, gamma_d, s, M, convention))

    lo_limit, hi_limit = _branch_limits(branch)
    a, b = _nearest_sign_change(det, kd0 if seed is None else seed, lo_limit, hi_limit)
    kd = float(brentq(lambda k: float(det(k)[0]), a, b, xtol=_solver_setting("kd_tolerance", 1e-12),
                      rtol=4 * _EPS, maxiter=500))

    T = sideband_matrix(kd, gamma, gamma_d, s, M, convention)[0]
    sides = [i for i in range(2 * M + 1) if i != center]
    _check_poles(kd, T[sides, sides])
    phi_sides = np.linalg.solve(T[np.ix_(sides, sides)], -T[sides, center])
    amplitudes = np.insert(phi_sides, center, 1.0)

    residual = _carrier_residual(kd, float(T[center, center] + T[center, sides] @ phi_sides))
    if residual > _solver_setting("residual_limit", 1e-9) * max(gamma, 1.0):
        raise BracketFailureError(f"truncated system root kd={kd!r} has residual {residual:.3g}")

    limit = _solver_setting("truncation_limit", 0.1)
    outer = max(abs(amplitudes[0]), abs(amplitudes[-1]))
    if outer > limit:
        raise NonConvergedTruncationError(
            f"outermost sideband amplitude {outer:.3g} exceeds {limit:g} at M={M}; increase the truncation order")

    return FloquetMode(branch=branch, kd=kd, omega=constants.omega_from_kd(kd),
                       A_plus=float(amplitudes[center + 1]), A_minus=float(amplitudes[center - 1]),
                       tone=tone, d=constants.d, v=constants.v, convention=convention,
                       truncation_order=M, amplitudes=tuple(float(a) for a in amplitudes))


def _profile(kd: float, d: float, x: np.ndarray, sign: np.ndarray) -> np.ndarray:
    return sign * np.cos((kd / d) * (sign * d - x))


def mode_profile(mode: FloquetMode, x_grid) -> ModeProfile:
    """Spatial mode functions u(x) = sign(x)*cos(k*(sign(x)*d - x)); x = 0 is taken on the right of the SQUID."""
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if np.any(np.abs(x) > mode.d * (1 + 1e-12)):
        raise ProfileDomainError(f"profile positions must lie in [-{mode.d:g}, {mode.d:g}] m")
    sign = np.where(x >= 0, 1.0, -1.0)
    return ModeProfile(x=x,
                       u_omega=_profile(mode.kd, mode.d, x, sign),
                       u_plus=_profile(mode.kd_plus, mode.d, x, sign),
                       u_minus=_profile(mode.kd_minus, mode.d, x, sign))


def drive_sweep(constants: DerivedConstants, omega_d: float, amplitudes: Sequence[float], branch: int,
                convention=None, strict: bool = True) -> SweepCurve:
    """
    Carrier frequency versus relative modulation amplitude dEJ/EJ0.

    Every solve is seeded with the previous root. With strict=False a failed point is recorded with
    its error text and the continuation resumes from the last good root.
    """
    convention = resolve_convention(convention)
    for amplitude in amplitudes:
        if not 0.0 <= amplitude <= 0.5:
            raise ParameterValidationError("amplitudes", f"sweep amplitude {amplitude:g} outside [0, 0.5]")
    seed = None
    points = []
    for amplitude in amplitudes:
        tone = DriveTone(omega_d=omega_d, delta_EJ=amplitude * constants.E_J0)
        try:
            mode = floquet_mode(constants, tone, branch, convention, seed=seed)
        except ModeSolverError as e:
            if strict:
                raise SweepPointError(amplitude, e) from e
            get_logger().warning(f"Sweep point dEJ/EJ0={amplitude:g} on branch {branch} failed: {e}")
            points.append(SweepPoint(amplitude=amplitude, omega=float("nan"), kd=float("nan"), error=str(e)))
            continue
        seed = mode.kd
        points.append(SweepPoint(amplitude=amplitude, omega=mode.omega, kd=mode.kd))
    return SweepCurve(branch=branch, omega_d=omega_d, points=tuple(points))


def multi_tone_mode(constants: DerivedConstants, tones: Iterable[DriveTone], branch: int,
                    convention=None) -> MultiToneMode:
    """
    Superpose several simultaneous tones.

    The carrier shift is the sum of the single-tone shifts; each tone's sidebands are then
    evaluated at the shifted carrier.
    """
    convention = resolve_convention(convention)
    tones = tuple(tones)
    kd0 = static_root(constants.gamma, branch)
    kd = kd0
    for tone in tones:
        kd += floquet_mode(constants, tone, branch, convention).kd - kd0
    modes = tuple(mode_at_carrier(constants, tone, branch, kd, convention) for tone in tones)
    return MultiToneMode(branch=branch, kd=kd, omega=constants.omega_from_kd(kd), static_kd=kd0, modes=modes)
