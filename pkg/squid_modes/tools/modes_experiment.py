import numpy as np

from squid_modes.algo import CM, GHZ
from squid_modes.algo.modesolver import (floquet_mode, floquet_mode_general, mode_profile, multi_tone_mode,
                                        static_mode)
from squid_modes.algo.quantizer import mode_record, quantize
from squid_modes.config_loader import get_settings
from squid_modes.log import get_logger
from squid_modes.tools.experiment_base import ExperimentBase, load_circuit


class ModesExperiment(ExperimentBase):
    """Solve one odd mode of the configured circuit and write its record and spatial profile."""
    name = "modes"
    description = "Floquet mode of the modulated resonator: record JSON and profile table"

    def add_arguments(self, parser):
        parser.add_argument("--branch", type=int, help="odd mode index 1, 3, 5, ...")
        parser.add_argument("--M", type=int, help="sideband truncation order, 1 uses the closed form")

    def apply_arguments(self, args):
        self.override("modes.branch", args.branch)
        self.override("modes.truncation_order", args.M)

    async def _run(self):
        settings = get_settings()
        branch = int(settings.get("modes.branch", 3))
        M = int(settings.get("modes.truncation_order", 1))
        params, tones, constants = load_circuit()

        reference = None
        tone_sidebands = None
        if len(tones) == 0:
            mode = static_mode(constants, branch)
        elif len(tones) == 1:
            mode = floquet_mode(constants, tones[0], branch)
            if M > 1:
                reference = mode
                mode = floquet_mode_general(constants, tones[0], branch, M)
        else:
            if M > 1:
                get_logger().warning("Several tones are combined with the single-sideband truncation; M is ignored")
            combined = multi_tone_mode(constants, tones, branch)
            mode = combined.modes[0]
            tone_sidebands = [[m.omega_d / GHZ, m.A_minus, m.A_plus] for m in combined.modes]

        qmode = quantize(mode, params)
        record = mode_record(qmode, reference)
        if tone_sidebands is not None:
            record.tone_sidebands = tone_sidebands
        get_logger().info(f"Branch {branch}: kd = {mode.kd:.6f}, omega = 2pi x {mode.omega / GHZ:.6f} GHz, "
                          f"A+ = {mode.A_plus:+.5f}, A- = {mode.A_minus:+.5f}")
        self.write_record("modes_mode", record)

        n_points = int(settings.get("modes.profile_points", 401))
        x = np.linspace(-params.d, params.d, n_points)
        profile = mode_profile(mode, x)
        rows = [(xi / CM, u, up, um) for xi, u, up, um in
                zip(profile.x, profile.u_omega, profile.u_plus, profile.u_minus)]
        self.write_table("modes_profile", ("x_cm", "u_omega", "u_plus", "u_minus"), rows)
        return record
