import argparse
import asyncio
import os
import sys

from squid_modes.agent.squid_agent import SquidAgent, commands
from squid_modes.algo import EXIT_BAD_INPUT
from squid_modes.algo.utils import get_version
from squid_modes.config_loader import get_settings, load_config_file, preset_path, set_setting
from squid_modes.log import LoggingFormat, get_logger, setup_logger

log_level = os.environ.get("LOG_LEVEL", "INFO")
setup_logger(log_level)


def set_parser():
    parser = argparse.ArgumentParser(description='Modes, couplings and gates of a SQUID-modulated resonator', usage=
    """\
    Usage: squid-modes [--config PATH] [--preset NAME] [--out DIR] [--format csv|json] <command> [<args>].
    For example:
    - squid-modes --preset three_node modes --branch 3
    - squid-modes --preset amplitude_sweep sweep --branches 1,3,5
    - squid-modes --preset transmon_coupling coupling --omega-d 6.0,0.5
    - squid-modes --preset two_qubit_gate gate --lossless --no-kerr
    - squid-modes --preset three_node oracle --cells 400
    - squid-modes --config out/gate_manifest.json   (replay a previous run)

    Supported commands:
    - modes - Solve a Floquet mode, write its quantized record and spatial profile.

    - sweep - Carrier frequency against modulation amplitude for several branches.

    - coupling - Lower-sideband coupling of a transmon, full and quasi-static.

    - gate - Calibrate the two-qubit gate tones and integrate the master equation.

    - oracle - Verify a mode against a time-domain simulation of the discretised line.

    Configuration:
    To edit any parameter from 'configuration.toml', add --<section>.<key>=<value> after the command.
    For example: 'squid-modes --preset two_qubit_gate gate --gate.delta_MHz=12 --gate.fock_cutoff=15'
    """)
    parser.add_argument('--version', action='version', version=f'squid-modes {get_version()}')
    parser.add_argument('--config', type=str, default=None, help='TOML, YAML or JSON configuration, or a run manifest')
    parser.add_argument('--preset', type=str, default=None, help='bundled parameter preset, e.g. three_node')
    parser.add_argument('--out', type=str, default=None, help='output directory')
    parser.add_argument('--format', type=str, default=None, choices=['csv', 'json'], help='table format')
    parser.add_argument('command', type=str, nargs='?', default=None, choices=commands)
    parser.add_argument('rest', nargs=argparse.REMAINDER, default=[])
    return parser


def run_command(command_line: str) -> int:
    return run(inargs=command_line.split())


def run(inargs=None, args=None) -> int:
    parser = set_parser()
    if not args:
        args = parser.parse_args(inargs)

    try:
        if args.preset:
            load_config_file(preset_path(args.preset))
        replay = load_config_file(args.config) if args.config else None
    except (FileNotFoundError, ValueError) as e:
        get_logger().error(str(e))
        return EXIT_BAD_INPUT
    if args.out:
        set_setting("config.output_dir", args.out)
    if args.format:
        set_setting("config.output_format", args.format)

    settings = get_settings()
    level = os.environ.get("LOG_LEVEL") or settings.get("config.log_level", "INFO")
    setup_logger(level, LoggingFormat(str(settings.get("config.log_format", "CONSOLE")).upper()))

    if args.command:
        request = [args.command] + args.rest
    elif replay:
        get_logger().info(f"Replaying '{' '.join(replay)}' from {args.config}")
        request = list(replay)
    else:
        parser.print_help()
        return EXIT_BAD_INPUT

    async def inner():
        return await asyncio.create_task(SquidAgent().handle_request(request))

    return asyncio.run(inner())


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
