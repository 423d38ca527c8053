import numpy as np

from squid_modes.algo import GHZ, MHZ
from squid_modes.algo.errors import ParameterValidationError
from squid_modes.algo.modesolver import drive_sweep, static_root
from squid_modes.algo.types import SweepCurve
from squid_modes.config_loader import get_settings
from squid_modes.log import get_logger
from squid_modes.tools.experiment_base import ExperimentBase, load_circuit


def _branch_list(value) -> list[int]:
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    return [int(v) for v in value]


class SweepExperiment(ExperimentBase):
    """Carrier frequency of several branches against the modulation amplitude, one table per branch."""
    name = "sweep"
    description = "Drive-amplitude sweep of the carrier frequency"

    def add_arguments(self, parser):
        parser.add_argument("--omega-d", type=float, dest="omega_d", help="modulation frequency in GHz")
        parser.add_argument("--amp-min", type=float, dest="amp_min", help="smallest dEJ/EJ0")
        parser.add_argument("--amp-max", type=float, dest="amp_max", help="largest dEJ/EJ0")
        parser.add_argument("--steps", type=int, help="number of amplitudes, at least 2")
        parser.add_argument("--branches", type=str, help="comma separated odd mode indices")

    def apply_arguments(self, args):
        self.override("sweep.omega_d_GHz", args.omega_d)
        self.override("sweep.amp_min", args.amp_min)
        self.override("sweep.amp_max", args.amp_max)
        self.override("sweep.steps", args.steps)
        if args.branches is not None:
            self.override("sweep.branches", _branch_list(args.branches))

    async def _run(self):
        settings = get_settings()
        steps = int(settings.get("sweep.steps", 41))
        if steps < 2:
            raise ParameterValidationError("sweep.steps", "a sweep needs at least 2 steps")
        amplitudes = np.linspace(float(settings.get("sweep.amp_min", 0.0)),
                                 float(settings.get("sweep.amp_max", 0.4)), steps)
        omega_d = float(settings.get("sweep.omega_d_GHz", 2.0)) * GHZ
        branches = _branch_list(settings.get("sweep.branches", [1, 3, 5]))
        _, _, constants = load_circuit()

        def sweep(branch: int) -> SweepCurve:
            return drive_sweep(constants, omega_d, amplitudes, branch, strict=False)

        curves = await self.gather_limited(sweep, branches)
        for curve in curves:
            static_omega = constants.omega_from_kd(static_root(constants.gamma, curve.branch))
            rows = [(p.amplitude, p.omega / GHZ, p.kd, (p.omega - static_omega) / MHZ, p.error)
                    for p in curve.points]
            self.write_table(f"sweep_branch{curve.branch}",
                             ("dEJ_over_EJ0", "omega_GHz", "kd", "shift_MHz", "error"), rows)
            good = curve.omegas[np.isfinite(curve.omegas)]
            span = (good.max() - good.min()) / MHZ if good.size else float("nan")
            get_logger().info(f"Branch {curve.branch}: {len(curve.points) - len(curve.failed)} points solved, "
                              f"carrier span 2pi x {span:.3f} MHz")
        return curves
