import math

import numpy as np

from squid_modes.algo import GHZ, MHZ, NS
from squid_modes.algo.coupling import calibrate_gate, calibration_report, carrier_cross_kerr
from squid_modes.algo.dynamics import GateMetrics, gate_config_echo, run_gate
from squid_modes.algo.errors import ParameterValidationError
from squid_modes.algo.modesolver import static_mode
from squid_modes.algo.quantizer import quantize
from squid_modes.algo.types import GateCalibration, GateConfig, Trajectory
from squid_modes.config_loader import get_settings
from squid_modes.log import get_logger
from squid_modes.tools.experiment_base import ExperimentBase, load_circuit, load_transmon, section


class GateExperiment(ExperimentBase):
    """Calibrate the tone pairs of the two-qubit gate, integrate the master equation and report the metrics."""
    name = "gate"
    description = "Bichromatic two-qubit gate through the modulated resonator"

    def add_arguments(self, parser):
        parser.add_argument("--lossless", action="store_true", default=None,
                            help="no resonator decay and infinite qubit lifetimes")
        parser.add_argument("--no-kerr", action="store_true", dest="no_kerr", default=None,
                            help="drop the qubit-photon cross-Kerr term")
        parser.add_argument("--T1", type=float, help="qubit T1 in microseconds, applied to every qubit")
        parser.add_argument("--T2", type=float, help="qubit T2 in microseconds, applied to every qubit")
        parser.add_argument("--kappa", type=float, help="resonator decay rate in MHz (2pi x kappa)")
        parser.add_argument("--G", type=float, help="target sideband coupling in MHz")
        parser.add_argument("--delta", type=float, help="gate detuning in MHz")
        parser.add_argument("--N", type=int, help="Fock cutoff")
        parser.add_argument("--dt", type=float, help="integrator step in ns")
        parser.add_argument("--t-final", type=float, dest="t_final", help="run duration in ns, 0 = 2pi/delta")

    def apply_arguments(self, args):
        if args.lossless:
            self.override("gate.lossless", True)
        if args.no_kerr:
            self.override("gate.include_kerr", False)
        self.override("gate.kappa_MHz", args.kappa)
        self.override("gate.target_G_MHz", args.G)
        self.override("gate.delta_MHz", args.delta)
        self.override("gate.fock_cutoff", args.N)
        self.override("gate.dt_ns", args.dt)
        self.override("gate.t_final_ns", args.t_final)
        if args.T1 is not None or args.T2 is not None:
            qubits = [dict(q) for q in section("gate").get("qubits", [])]
            for qubit in qubits:
                if args.T1 is not None:
                    qubit["T1_us"] = args.T1
                if args.T2 is not None:
                    qubit["T2_us"] = args.T2
            self.override("gate.qubits", qubits)

    def gate_config(self, calibration: GateCalibration, chi: float, qubits) -> GateConfig:
        settings = get_settings()
        lossless = bool(settings.get("gate.lossless", False))
        t_final = float(settings.get("gate.t_final_ns", 0.0) or 0.0) * NS
        return GateConfig(
            G=calibration.G,
            delta=calibration.delta,
            chi=chi,
            kappa=0.0 if lossless else float(settings.get("gate.kappa_MHz", 0.0)) * MHZ,
            T1=tuple(math.inf if lossless else q.T1 for q in qubits),
            T2=tuple(math.inf if lossless else q.T2 for q in qubits),
            N=int(settings.get("gate.fock_cutoff", 10)),
            include_kerr=bool(settings.get("gate.include_kerr", True)),
            t_final=t_final or None,
            dt=float(settings.get("gate.dt_ns", 0.05)) * NS,
            snapshot_every=int(settings.get("gate.snapshot_every", 10)),
        )

    async def _run(self):
        settings = get_settings()
        branch = int(settings.get("gate.branch", 1))
        records = section("gate").get("qubits", [])
        if len(records) != 2:
            raise ParameterValidationError("gate.qubits", "the gate needs exactly two qubits")
        params, _, constants = load_circuit()
        qubits = [load_transmon(record) for record in records]

        calibration = calibrate_gate(params, qubits, float(settings.get("gate.target_G_MHz", 2.5)) * MHZ,
                                     float(settings.get("gate.delta_MHz", 10.0)) * MHZ, branch)
        report = calibration_report(calibration)
        self.write_table("gate_tones", ("qubit_Omega_GHz", "tone_GHz", "dEJ_over_EJ0", "G_MHz"),
                         [(pair.Omega / GHZ, omega / GHZ, dEJ / params.E_J0, G / MHZ)
                          for pair in calibration.pairs
                          for omega, dEJ, G in ((pair.omega_t, pair.dEJ_t, pair.G_t), (pair.omega_p, pair.dEJ_p, pair.G_p))])

        # qubits are dispersive with the unmodulated carrier; the gate uses their mean shift
        carrier = quantize(static_mode(constants, branch), params)
        chis = [carrier_cross_kerr(carrier, t) for t in qubits]
        chi = float(np.mean(chis))
        get_logger().info(f"Cross-Kerr shifts {[round(c / MHZ, 4) for c in chis]} MHz, using {chi / MHZ:.4f} MHz")

        cfg = self.gate_config(calibration, chi, qubits)
        trajectory = run_gate(cfg)
        self.write_table("gate_trajectory",
                         ("t_ns", "n_photon", "rho_gggg", "rho_eeee", "im_rho_eegg", "concurrence",
                          "concurrence_shortcut", "fidelity", "fidelity_phase_fixed"),
                         _trajectory_rows(trajectory))
        metrics = GateMetrics(
            fidelity=float(trajectory.fidelity[-1]),
            fidelity_phase_fixed=float(trajectory.fidelity_phase_fixed[-1]),
            concurrence_wootters=float(trajectory.concurrence[-1]),
            concurrence_shortcut=float(trajectory.concurrence_shortcut[-1]),
            n_photon_final=float(trajectory.n_photon[-1]),
            achieved_G_MHz=calibration.G / MHZ,
            delta_MHz=calibration.delta / MHZ,
            chi_MHz=chi / MHZ,
            gate_time_ns=cfg.duration / NS,
            max_trace_error=trajectory.max_trace_error,
            max_hermiticity_error=trajectory.max_hermiticity_error,
            min_eigenvalue=trajectory.min_eigenvalue,
            config=gate_config_echo(cfg),
            integrator={"method": "rk4", "dt_ns": cfg.dt / NS, "snapshot_every": cfg.snapshot_every,
                        "steps": int(round(cfg.duration / cfg.dt))},
            tones=report.model_dump(),
        )
        get_logger().info(f"Gate finished: fidelity {metrics.fidelity:.4f}, concurrence "
                          f"{metrics.concurrence_wootters:.4f}, <n> = {metrics.n_photon_final:.2e}")
        self.write_record("gate_metrics", metrics)
        return metrics


def _trajectory_rows(trajectory: Trajectory):
    return [(t / NS, n, gg, ee, im, c, cs, f, fp) for t, n, gg, ee, im, c, cs, f, fp in
            zip(trajectory.times, trajectory.n_photon, trajectory.rho_gggg, trajectory.rho_eeee,
                trajectory.im_rho_eegg, trajectory.concurrence, trajectory.concurrence_shortcut,
                trajectory.fidelity, trajectory.fidelity_phase_fixed)]
