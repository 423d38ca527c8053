import math
from dataclasses import replace

import numpy as np
import pytest

from squid_modes.algo import FF, HBAR, KHZ
from squid_modes.algo.modesolver import floquet_mode, floquet_mode_general
from squid_modes.algo.quantizer import (effective_capacitance, kerr_coefficient, mode_record, quantize,
                                        voltage_prefactors)
from tests.unittest.helpers import three_node_circuit


class TestQuantize:
    def test_three_node_mode_constants(self):
        params, drive, constants = three_node_circuit()
        qmode = quantize(floquet_mode(constants, drive, 3), params)
        assert qmode.C_omega == pytest.approx(2.0419e-12, rel=1e-3)
        assert qmode.phi_zpf == pytest.approx(2.365e-17, rel=2e-3)
        assert qmode.kerr / (2 * math.pi) == pytest.approx(-423.0, rel=0.02)
        assert kerr_coefficient(qmode, params) == qmode.kerr

    def test_kerr_does_not_depend_on_modulation_sign(self):
        params, drive, constants = three_node_circuit()
        reversed_drive = replace(drive, delta_EJ=-drive.delta_EJ)
        forward = quantize(floquet_mode(constants, drive, 3), params)
        backward = quantize(floquet_mode(constants, reversed_drive, 3), params)
        assert backward.mode.A_plus == pytest.approx(-forward.mode.A_plus, rel=1e-9)
        assert backward.kerr == pytest.approx(forward.kerr, rel=1e-9)

    def test_zero_point_products(self):
        params, drive, constants = three_node_circuit()
        qmode = quantize(floquet_mode(constants, drive, 3), params)
        omega = qmode.mode.omega
        assert qmode.phi_zpf * qmode.q_zpf == pytest.approx(HBAR / 2)
        assert qmode.L_omega * qmode.C_omega * omega ** 2 == pytest.approx(1.0)

    def test_squid_capacitance_adds_at_the_junction(self):
        params, drive, constants = three_node_circuit()
        mode = floquet_mode(constants, drive, 3)
        loaded = type(params)(d=params.d, v=params.v, Z=params.Z, E_J0=params.E_J0, C=5 * FF)
        difference = effective_capacitance(mode, loaded) - effective_capacitance(mode, params)
        assert difference == pytest.approx(5 * FF * math.cos(mode.kd) ** 2)


class TestVoltagePrefactors:
    def test_scalar_and_array_positions_agree(self):
        params, drive, constants = three_node_circuit()
        qmode = quantize(floquet_mode(constants, drive, 3), params)
        x = np.array([-0.5 * params.d, 0.1 * params.d, params.d])
        V_omega, V_plus, V_minus = voltage_prefactors(qmode, x)
        assert voltage_prefactors(qmode, float(x[1])) == pytest.approx((V_omega[1], V_plus[1], V_minus[1]))
        # sidebands scale with their amplitude and frequency
        mode = qmode.mode
        assert V_plus[2] / V_omega[2] == pytest.approx(mode.A_plus * mode.omega_plus / mode.omega)


class TestModeRecord:
    def test_record_units(self):
        params, drive, constants = three_node_circuit()
        qmode = quantize(floquet_mode(constants, drive, 3), params)
        record = mode_record(qmode)
        assert record.branch == 3
        assert record.omega_GHz == pytest.approx(7.343, abs=0.008)
        assert record.C_omega_fF == pytest.approx(2041.9, rel=1e-3)
        assert record.kerr_kHz == pytest.approx(qmode.kerr / KHZ)
        assert record.convention == "printed"
        assert record.kd_truncation_difference is None

    def test_truncation_difference_is_reported(self):
        params, drive, constants = three_node_circuit()
        first = floquet_mode(constants, drive, 3)
        second = floquet_mode_general(constants, drive, 3, 2)
        record = mode_record(quantize(second, params), reference=first)
        assert record.truncation_order == 2
        assert len(record.sideband_amplitudes) == 5
        assert abs(record.kd_truncation_difference) < 5e-4
