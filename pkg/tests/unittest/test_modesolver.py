import math

import numpy as np
import pytest
from scipy.optimize import brentq

from squid_modes.algo import GHZ, MHZ
from squid_modes.algo import modesolver
from squid_modes.algo.circuit import circuit_from_record, derive_constants
from squid_modes.algo.errors import (ModeSolverError, NonConvergedTruncationError, ParameterValidationError,
                                     PoleProximityError, ProfileDomainError, SweepPointError)
from squid_modes.algo.modesolver import (drive_sweep, floquet_mode, floquet_mode_general, mode_profile,
                                        multi_tone_mode, sideband_amplitudes, sideband_matrix, static_mode,
                                        static_odd_modes, static_root)
from squid_modes.algo.types import DriveTone, SidebandConvention
from squid_modes.config_loader import set_setting
from tests.unittest.helpers import THREE_NODE_RECORD, short_line_circuit, three_node_circuit, tone


class TestStaticRoots:
    def test_third_mode_of_three_node_example(self):
        _, _, constants = three_node_circuit()
        assert static_root(constants.gamma, 3) == pytest.approx(4.60744, abs=2e-5)

    def test_first_mode_of_short_resonator(self):
        _, constants = short_line_circuit()
        kd = static_root(constants.gamma, 1)
        assert kd == pytest.approx(1.4163, abs=5e-4)
        assert constants.omega_from_kd(kd) / GHZ == pytest.approx(10.82, abs=0.03)

    def test_roots_lie_in_their_intervals(self):
        _, _, constants = three_node_circuit()
        roots = static_odd_modes(constants, 4)
        for n, kd in enumerate(roots, start=1):
            assert (n - 1) * math.pi < kd < (n - 0.5) * math.pi
            assert kd * math.tan(kd) == pytest.approx(constants.gamma, rel=1e-9)

    @pytest.mark.parametrize("branch", [0, 2, -1])
    def test_even_or_non_positive_branch_is_rejected(self, branch):
        with pytest.raises(ParameterValidationError):
            static_root(10.0, branch)


class TestFloquetMode:
    def test_three_node_mode(self):
        _, drive, constants = three_node_circuit()
        mode = floquet_mode(constants, drive, 3)
        assert mode.kd == pytest.approx(4.614, abs=0.005)
        assert mode.omega / GHZ == pytest.approx(7.343, abs=0.008)
        assert mode.A_plus == pytest.approx(-0.0225, abs=2e-3)
        assert mode.A_minus == pytest.approx(0.0195, abs=2e-3)
        assert 0.01 <= abs(mode.A_plus) <= 0.05
        assert 0.01 <= abs(mode.A_minus) <= 0.05

    def test_eliminated_convention_pulls_the_carrier_down(self):
        _, drive, constants = three_node_circuit()
        mode = floquet_mode(constants, drive, 3, SidebandConvention.ELIMINATED)
        assert mode.convention == SidebandConvention.ELIMINATED
        assert mode.kd == pytest.approx(4.5988, abs=2e-3)
        assert mode.kd < static_root(constants.gamma, 3)

    def test_no_drive_reproduces_static_mode(self):
        params, drive, constants = three_node_circuit()
        mode = floquet_mode(constants, DriveTone(drive.omega_d, 0.0), 3)
        assert mode.kd == static_root(constants.gamma, 3)
        assert mode.A_plus == 0.0
        assert mode.A_minus == 0.0

    def test_sidebands_are_odd_in_the_modulation(self):
        params, drive, constants = three_node_circuit()
        up = floquet_mode(constants, drive, 3)
        down = floquet_mode(constants, DriveTone(drive.omega_d, -drive.delta_EJ), 3)
        assert down.kd == pytest.approx(up.kd, abs=1e-12)
        assert down.A_plus == pytest.approx(-up.A_plus, rel=1e-9)
        assert down.A_minus == pytest.approx(-up.A_minus, rel=1e-9)

    def test_fixed_carrier_amplitudes_match_solution(self):
        _, drive, constants = three_node_circuit()
        mode = floquet_mode(constants, drive, 3)
        A_plus, A_minus = sideband_amplitudes(constants, drive, mode.kd)
        assert A_plus == pytest.approx(mode.A_plus)
        assert A_minus == pytest.approx(mode.A_minus)

    def test_sideband_frequencies(self):
        _, drive, constants = three_node_circuit()
        mode = floquet_mode(constants, drive, 1)
        assert mode.omega_plus == pytest.approx(mode.omega + drive.omega_d)
        assert mode.omega_minus == pytest.approx(mode.omega - drive.omega_d)
        assert mode.kd_minus == pytest.approx(mode.kd - constants.shift(drive.omega_d))

    def test_resonant_sideband_is_reported(self):
        _, drive, constants = three_node_circuit()
        s = constants.shift(drive.omega_d)
        # q*tan(q) = -gamma makes the printed upper-sideband denominator vanish
        q = brentq(lambda q: constants.gamma * math.cos(q) + q * math.sin(q), math.pi / 2, math.pi)
        with pytest.raises(PoleProximityError) as e:
            sideband_amplitudes(constants, drive, q - s)
        assert abs(e.value.denominator) < 1e-3

    def test_mode_solver_errors_exit_with_solver_code(self):
        assert PoleProximityError("x", 1.0, 0.0).exit_code == 2
        assert ParameterValidationError("d", "x").exit_code == 1


class TestGeneralTruncation:
    def test_single_sideband_matches_closed_form_on_random_circuits(self):
        rng = np.random.default_rng(20240611)
        compared = 0
        for _ in range(50):
            record = {**THREE_NODE_RECORD, "d_cm": rng.uniform(0.2, 1.5), "tones": []}
            params, _ = circuit_from_record(record)
            constants = derive_constants(params)
            drive = tone(params, rng.uniform(0.5, 6.0), rng.uniform(0.01, 0.4) * rng.choice([-1.0, 1.0]))
            branch = int(rng.choice([1, 3, 5]))
            try:
                closed = floquet_mode(constants, drive, branch)
                general = floquet_mode_general(constants, drive, branch, 1)
            except (PoleProximityError, NonConvergedTruncationError):
                continue
            except ModeSolverError:
                continue
            assert abs(general.kd - closed.kd) < 1e-9
            assert general.A_plus == pytest.approx(closed.A_plus, rel=1e-6, abs=1e-12)
            assert general.A_minus == pytest.approx(closed.A_minus, rel=1e-6, abs=1e-12)
            compared += 1
        assert compared >= 25

    def test_higher_order_changes_root_only_slightly(self):
        _, drive, constants = three_node_circuit()
        first = floquet_mode(constants, drive, 3)
        second = floquet_mode_general(constants, drive, 3, 2)
        assert second.truncation_order == 2
        assert len(second.amplitudes) == 5
        assert second.amplitudes[2] == 1.0
        assert abs(second.kd - first.kd) < 5e-4

    @pytest.mark.parametrize("convention", [SidebandConvention.PRINTED, SidebandConvention.ELIMINATED])
    def test_root_converges_with_truncation_order(self, convention):
        _, drive, constants = three_node_circuit()
        kd = [floquet_mode_general(constants, drive, 3, M, convention=convention).kd for M in (1, 2, 3)]
        first_step, second_step = abs(kd[1] - kd[0]), abs(kd[2] - kd[1])
        assert first_step < 5e-4
        assert second_step < 5e-5
        assert second_step < first_step

    def test_tight_truncation_limit_is_enforced(self):
        _, drive, constants = three_node_circuit()
        set_setting("solver.truncation_limit", 1e-6)
        with pytest.raises(NonConvergedTruncationError):
            floquet_mode_general(constants, drive, 3, 2)

    def test_matrix_batches_over_kd(self):
        _, drive, constants = three_node_circuit()
        stack = sideband_matrix(np.array([4.5, 4.6, 4.7]), constants.gamma, 8.0, 1.25, 2,
                                SidebandConvention.PRINTED)
        assert stack.shape == (3, 5, 5)
        single = sideband_matrix(4.6, constants.gamma, 8.0, 1.25, 2, SidebandConvention.PRINTED)[0]
        np.testing.assert_allclose(stack[1], single)
        assert single[0, 2] == 0.0


class TestModeProfile:
    def test_profile_is_odd_with_unit_ends(self):
        _, drive, constants = three_node_circuit()
        mode = floquet_mode(constants, drive, 3)
        x = np.linspace(0.0, constants.d, 11)[1:]
        right = mode_profile(mode, x)
        left = mode_profile(mode, -x)
        np.testing.assert_allclose(left.u_omega, -right.u_omega, atol=1e-12)
        np.testing.assert_allclose(left.u_plus, -right.u_plus, atol=1e-12)
        assert right.u_omega[-1] == pytest.approx(1.0)
        assert right.u_minus[-1] == pytest.approx(1.0)
        assert left.u_omega[-1] == pytest.approx(-1.0)

    def test_junction_point_belongs_to_the_right(self):
        _, drive, constants = three_node_circuit()
        mode = floquet_mode(constants, drive, 3)
        assert mode_profile(mode, 0.0).u_omega[0] == pytest.approx(math.cos(mode.kd))

    def test_outside_positions_are_rejected(self):
        _, drive, constants = three_node_circuit()
        with pytest.raises(ProfileDomainError):
            mode_profile(static_mode(constants, 1), [1.01 * constants.d])


class TestDriveSweep:
    def test_third_branch_shift_is_of_order_ten_megahertz(self):
        _, drive, constants = three_node_circuit()
        curve = drive_sweep(constants, drive.omega_d, np.linspace(0.0, 0.4, 41), 3)
        assert not curve.failed
        shifts = np.diff(curve.omegas)
        assert np.all(shifts >= -1e-6 * MHZ) or np.all(shifts <= 1e-6 * MHZ)
        span = (curve.omegas.max() - curve.omegas.min()) / MHZ
        assert 5.0 <= span <= 20.0

    def test_two_zero_amplitudes_give_identical_rows(self):
        _, drive, constants = three_node_circuit()
        curve = drive_sweep(constants, drive.omega_d, [0.0, 0.0], 3)
        assert curve.points[0] == curve.points[1]

    def test_amplitude_range_is_checked(self):
        _, drive, constants = three_node_circuit()
        with pytest.raises(ParameterValidationError):
            drive_sweep(constants, drive.omega_d, [0.0, 0.6], 3)

    def test_failed_point_is_recorded_when_not_strict(self, monkeypatch):
        _, drive, constants = three_node_circuit()
        solve = modesolver.floquet_mode

        def flaky(constants, tone, branch, convention=None, seed=None):
            if abs(tone.delta_EJ / constants.E_J0 - 0.2) < 1e-9:
                raise PoleProximityError("resonant sideband", 4.6, 0.0)
            return solve(constants, tone, branch, convention, seed=seed)

        monkeypatch.setattr(modesolver, "floquet_mode", flaky)
        curve = drive_sweep(constants, drive.omega_d, [0.1, 0.2, 0.3], 3, strict=False)
        assert len(curve.failed) == 1
        assert curve.failed[0].amplitude == pytest.approx(0.2)
        assert math.isnan(curve.points[1].omega)
        assert math.isfinite(curve.points[2].omega)

        with pytest.raises(SweepPointError) as e:
            drive_sweep(constants, drive.omega_d, [0.1, 0.2], 3)
        assert e.value.amplitude == pytest.approx(0.2)

    def test_continuation_is_continuous_over_random_circuits(self):
        rng = np.random.default_rng(20240611)
        _, reference = short_line_circuit()
        amplitudes = np.linspace(0.0, 0.4, 41)
        compared = 0
        for _ in range(20):
            gamma = rng.uniform(5.0, 100.0)
            record = {**THREE_NODE_RECORD, "d_cm": 0.25 * gamma / reference.gamma, "tones": []}
            params, _ = circuit_from_record(record)
            constants = derive_constants(params)
            s = rng.uniform(0.1, 2.0)
            omega_d = s * constants.v / constants.d
            curve = drive_sweep(constants, omega_d, amplitudes, 1, strict=False)
            if curve.failed:
                continue
            largest = 0.0
            for point in curve.points[1:]:
                drive = DriveTone(omega_d=omega_d, delta_EJ=point.amplitude * constants.E_J0)
                mode = floquet_mode(constants, drive, 1, seed=point.kd)
                largest = max(largest, abs(mode.A_plus), abs(mode.A_minus))
            if largest > 0.15:
                continue
            kd = np.array([p.kd for p in curve.points])
            assert np.abs(np.diff(kd)).max() < 0.05
            compared += 1
        assert compared >= 5


class TestMultiTone:
    def test_single_tone_equals_floquet_mode(self):
        _, drive, constants = three_node_circuit()
        combined = multi_tone_mode(constants, [drive], 3)
        single = floquet_mode(constants, drive, 3)
        assert combined.kd == pytest.approx(single.kd, abs=1e-12)
        assert combined.modes[0].A_plus == pytest.approx(single.A_plus)

    def test_shifts_add(self):
        params, drive, constants = three_node_circuit()
        other = tone(params, 3.0, 0.2)
        kd0 = static_root(constants.gamma, 3)
        combined = multi_tone_mode(constants, [drive, other], 3)
        expected = kd0 + (floquet_mode(constants, drive, 3).kd - kd0) + (floquet_mode(constants, other, 3).kd - kd0)
        assert combined.kd == pytest.approx(expected, abs=1e-12)
        assert combined.static_kd == kd0
        assert [m.kd for m in combined.modes] == [combined.kd, combined.kd]
