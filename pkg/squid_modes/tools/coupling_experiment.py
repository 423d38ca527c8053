import numpy as np

from squid_modes.algo import GHZ, MHZ
from squid_modes.algo.coupling import carrier_cross_kerr, quasi_static_coupling, sideband_coupling, validate_transmon
from squid_modes.algo.errors import ModeSolverError, ParameterValidationError, ResonanceError
from squid_modes.algo.modesolver import floquet_mode, static_mode
from squid_modes.algo.quantizer import quantize
from squid_modes.algo.types import DriveTone, Sideband, TransmonParams
from squid_modes.config_loader import get_settings
from squid_modes.log import get_logger
from squid_modes.tools.experiment_base import ExperimentBase, load_circuit, load_transmon, section


def _frequencies(value) -> list[float]:
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    elif not isinstance(value, (list, tuple)):
        value = [value]
    return [float(v) for v in value]


class CouplingExperiment(ExperimentBase):
    """
    Lower-sideband coupling of a transmon against modulation amplitude, full Floquet treatment next
    to the quasi-static estimate, one table per modulation frequency.
    """
    name = "coupling"
    description = "Sideband coupling strength versus modulation amplitude"

    def add_arguments(self, parser):
        parser.add_argument("--branch", type=int, help="odd mode index")
        parser.add_argument("--omega-d", type=str, dest="omega_d", help="comma separated modulation frequencies in GHz")
        parser.add_argument("--amp-min", type=float, dest="amp_min")
        parser.add_argument("--amp-max", type=float, dest="amp_max")
        parser.add_argument("--steps", type=int)

    def apply_arguments(self, args):
        self.override("coupling.branch", args.branch)
        if args.omega_d is not None:
            self.override("coupling.omega_d_GHz", _frequencies(args.omega_d))
        self.override("coupling.amp_min", args.amp_min)
        self.override("coupling.amp_max", args.amp_max)
        self.override("coupling.steps", args.steps)

    def _transmon_for(self, omega_carrier: float, omega_d: float) -> TransmonParams:
        settings = get_settings()
        resonant = omega_carrier - omega_d
        configured = section("transmon").get("Omega_GHz")
        if settings.get("coupling.enforce_resonance", True) or configured in (None, ""):
            transmon = load_transmon({}, Omega=resonant)
        else:
            transmon = load_transmon({})
            mismatch = abs(transmon.Omega - resonant)
            if mismatch > float(settings.get("coupling.resonance_warning_MHz", 50.0)) * MHZ:
                get_logger().warning(f"Transmon at {transmon.Omega / GHZ:.4f} GHz is detuned by "
                                     f"{mismatch / MHZ:.1f} MHz from the lower sideband {resonant / GHZ:.4f} GHz")
        validate_transmon(transmon)
        return transmon

    async def _run(self):
        settings = get_settings()
        branch = int(settings.get("coupling.branch", 1))
        steps = int(settings.get("coupling.steps", 41))
        if steps < 2:
            raise ParameterValidationError("coupling.steps", "a curve needs at least 2 steps")
        amplitudes = np.linspace(float(settings.get("coupling.amp_min", 0.0)),
                                 float(settings.get("coupling.amp_max", 0.4)), steps)
        frequencies = _frequencies(settings.get("coupling.omega_d_GHz", [6.0, 0.5]))
        params, _, constants = load_circuit()
        static = static_mode(constants, branch)

        def curve(omega_d_GHz: float):
            omega_d = omega_d_GHz * GHZ
            transmon = self._transmon_for(static.omega, omega_d)
            rows, seed = [], None
            for amplitude in amplitudes:
                tone = DriveTone(omega_d=omega_d, delta_EJ=amplitude * params.E_J0)
                G_qs = quasi_static_coupling(params, tone, transmon, branch).G
                try:
                    mode = floquet_mode(constants, tone, branch, seed=seed)
                except ModeSolverError as e:
                    get_logger().warning(f"Coupling point dEJ/EJ0={amplitude:g} at {omega_d_GHz:g} GHz failed: {e}")
                    rows.append((amplitude, float("nan"), G_qs / MHZ, float("nan"), str(e)))
                    continue
                seed = mode.kd
                G_full = sideband_coupling(quantize(mode, params), transmon, Sideband.MINUS).G
                rows.append((amplitude, G_full / MHZ, G_qs / MHZ, mode.omega / GHZ, ""))
            try:
                chi = carrier_cross_kerr(quantize(static, params), transmon)
            except ResonanceError as e:
                get_logger().warning(f"No cross-Kerr estimate at {omega_d_GHz:g} GHz: {e}")
                chi = None
            return omega_d_GHz, transmon, rows, chi

        results = await self.gather_limited(curve, frequencies)
        summary = []
        for omega_d_GHz, transmon, rows, chi in results:
            self.write_table(f"coupling_omega_d_{omega_d_GHz:g}GHz",
                             ("dEJ_over_EJ0", "G_full_MHz", "G_qs_MHz", "omega_GHz", "error"), rows)
            summary.append({"omega_d_GHz": omega_d_GHz, "transmon_Omega_GHz": transmon.Omega / GHZ,
                            "chi_MHz": chi / MHZ if chi is not None else None})
        self.write_record("coupling_summary", {"branch": branch, "carrier_GHz": static.omega / GHZ,
                                               "curves": summary})
        return results
