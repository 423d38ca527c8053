import shlex

from squid_modes.algo import EXIT_BAD_INPUT, EXIT_OK
from squid_modes.algo.errors import SquidModesError
from squid_modes.algo.utils import update_settings_from_args
from squid_modes.log import get_logger
from squid_modes.tools.coupling_experiment import CouplingExperiment
from squid_modes.tools.gate_experiment import GateExperiment
from squid_modes.tools.modes_experiment import ModesExperiment
from squid_modes.tools.oracle_experiment import OracleExperiment
from squid_modes.tools.sweep_experiment import SweepExperiment

command2class = {
    "modes": ModesExperiment,
    "sweep": SweepExperiment,
    "coupling": CouplingExperiment,
    "gate": GateExperiment,
    "oracle": OracleExperiment,
}

commands = list(command2class.keys())


class SquidAgent:
    async def handle_request(self, request) -> int:
        """
        Run one command and return its exit code.

        The request is a command line such as "gate --lossless" or its token list. Dotted settings
        overrides (--gate.delta_MHz=12) are applied first; the remaining tokens go to the command.
        """
        if isinstance(request, str):
            action, *args = shlex.split(request)
        else:
            action, *args = request
        command = [action, *args]

        action = action.lstrip("/").lower()
        if action not in command2class:
            get_logger().error(f"Unknown command: {action}")
            return EXIT_BAD_INPUT

        with get_logger().contextualize(command=action):
            try:
                args = update_settings_from_args(args)
                await command2class[action](args=args, command=command).run()
            except SquidModesError as e:
                get_logger().error(f"{action} failed ({type(e).__name__}): {e}")
                return e.exit_code
            except (FileNotFoundError, ValueError) as e:
                get_logger().error(f"{action} rejected its input: {e}")
                return EXIT_BAD_INPUT
        return EXIT_OK
