import math
from dataclasses import replace

import numpy as np
import pytest

from squid_modes.algo import FF, MHZ, NS
from squid_modes.algo.circuit import circuit_from_record, derive_constants
from squid_modes.algo.errors import CFLViolationError, ParameterValidationError
from squid_modes.algo.modesolver import static_mode, static_root
from squid_modes.algo.tdoracle import LCChain, chain_normal_modes, oracle_record, simulate_chain, verify_mode
from squid_modes.algo.types import SidebandConvention
from squid_modes.log import get_logger
from tests.unittest.helpers import THREE_NODE_RECORD, three_node_circuit, tone


def static_chain(params, n_cells=100):
    constants = derive_constants(params)
    chain = LCChain(params, None, n_cells)
    return chain, chain.state_from_mode(static_mode(constants, 3))


class TestLCChain:
    def test_courant_limit(self):
        params, _, _ = three_node_circuit()
        dx = params.d / 100
        with pytest.raises(CFLViolationError):
            LCChain(params, None, 100, dt=1.01 * dx / params.v)

    def test_too_few_cells(self):
        params, _, _ = three_node_circuit()
        with pytest.raises(ParameterValidationError):
            LCChain(params, None, 1)

    @pytest.mark.parametrize("C_fF", [0.0, 10.0])
    def test_energy_is_conserved_for_static_junction(self, C_fF):
        params, _, _ = three_node_circuit()
        chain, state = static_chain(replace(params, C=C_fF * FF))
        start = chain.energy(state)
        end = chain.energy(chain.advance(state, 1000))
        assert start > 0
        assert end == pytest.approx(start, rel=1e-9)

    def test_time_reversal_recovers_initial_state(self):
        params, _, _ = three_node_circuit()
        chain, state = static_chain(params)
        n_steps = 500
        back = chain.advance(chain.advance(state, n_steps).reversed(), n_steps - 1)
        scale = np.abs(state.phi_right).max()
        assert np.abs(back.phi_right - state.phi_right).max() <= 1e-8 * scale
        assert np.abs(back.phi_left - state.phi_left).max() <= 1e-8 * scale

    def test_initial_shape_is_odd_about_the_junction(self):
        params, _, _ = three_node_circuit()
        _, state = static_chain(params)
        np.testing.assert_allclose(state.phi_left, -state.phi_right)
        assert state.junction_jump == pytest.approx(2 * state.phi_right[0])


class TestChainNormalModes:
    def test_second_order_convergence_to_static_root(self):
        params, _, constants = three_node_circuit()
        exact = constants.omega_from_kd(static_root(constants.gamma, 3))

        def error(n_cells):
            modes = chain_normal_modes(params, n_cells)
            return abs(modes[np.argmin(np.abs(modes - exact))] - exact)

        ratio = error(50) / error(100)
        assert 3.0 <= ratio <= 5.0

    def test_weak_junction_leaves_two_open_lines(self):
        params, _ = circuit_from_record({**THREE_NODE_RECORD, "EJ0_GHz": 1e-6})
        modes = chain_normal_modes(params, 100)
        half_wave = math.pi * params.v / params.d
        assert modes[0] == pytest.approx(0.0, abs=1e-3 * half_wave)
        assert modes[2] == pytest.approx(half_wave, rel=2e-3)
        assert modes[3] == pytest.approx(half_wave, rel=2e-3)


class TestSimulateChain:
    def test_requires_fine_grid(self):
        params, drive, constants = three_node_circuit()
        with pytest.raises(ParameterValidationError):
            simulate_chain(params, drive, static_mode(constants, 3), 1 * NS, n_cells=50)

    def test_sample_point_outside_resonator(self):
        params, drive, constants = three_node_circuit()
        with pytest.raises(ParameterValidationError):
            simulate_chain(params, drive, static_mode(constants, 3), 1 * NS, n_cells=100, x_sample=2 * params.d)

    def test_records_flux_series(self):
        params, drive, constants = three_node_circuit()
        series = simulate_chain(params, drive, static_mode(constants, 3), 1 * NS, n_cells=100, record_every=5)
        assert len(series.t) == len(series.phi) == int(round(1 * NS / series.final_state.dt)) // 5
        assert series.x_sample == pytest.approx(0.5 * params.d)
        assert series.sample_interval == pytest.approx(5 * series.final_state.dt)


class TestVerifyMode:
    def test_unmodulated_mode_matches_chain(self):
        params, _, _ = three_node_circuit()
        report = verify_mode(params, tone(params, 2.0, 0.0), 3, n_cells=100, T=30 * NS, record_every=4)
        assert abs(report.freq_error) / MHZ < 5.0
        assert report.A_plus_error == 0.0
        assert report.A_minus_error == 0.0
        record = oracle_record(report, 100, report.series.final_state.dt, 30 * NS)
        assert record.omega_GHz == pytest.approx(7.3330, abs=2e-3)
        assert record.duration_ns == pytest.approx(30.0)

    @staticmethod
    def _warnings_during(func):
        messages = []
        handler = get_logger().add(lambda m: messages.append(m.record["message"]), level="WARNING")
        try:
            result = func()
        finally:
            get_logger().remove(handler)
        return result, messages

    def test_printed_convention_warns_about_sideband_signs(self):
        params, drive, _ = three_node_circuit()
        _, messages = self._warnings_during(
            lambda: verify_mode(params, drive, 3, n_cells=100, T=30 * NS, convention=SidebandConvention.PRINTED,
                                record_every=4))
        assert any("opposite sign" in m and "eliminated" in m for m in messages)

    def test_eliminated_convention_does_not_warn(self):
        params, drive, _ = three_node_circuit()
        _, messages = self._warnings_during(
            lambda: verify_mode(params, drive, 3, n_cells=100, T=30 * NS,
                                convention=SidebandConvention.ELIMINATED, record_every=4))
        assert not any("opposite sign" in m for m in messages)

    def test_reversed_modulation_flips_measured_sidebands(self):
        params, drive, _ = three_node_circuit()
        reversed_drive = replace(drive, delta_EJ=-drive.delta_EJ)
        forward = verify_mode(params, drive, 3, n_cells=100, T=30 * NS,
                              convention=SidebandConvention.ELIMINATED, record_every=4)
        backward = verify_mode(params, reversed_drive, 3, n_cells=100, T=30 * NS,
                               convention=SidebandConvention.ELIMINATED, record_every=4)
        assert backward.mode.A_plus == pytest.approx(-forward.mode.A_plus, rel=1e-9)
        assert backward.mode.A_minus == pytest.approx(-forward.mode.A_minus, rel=1e-9)
        assert forward.A_plus_oracle * backward.A_plus_oracle < 0
        assert forward.A_minus_oracle * backward.A_minus_oracle < 0
        assert abs(backward.A_plus_oracle) == pytest.approx(abs(forward.A_plus_oracle), rel=0.25)
        assert abs(backward.A_minus_oracle) == pytest.approx(abs(forward.A_minus_oracle), rel=0.25)
