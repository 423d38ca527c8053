import argparse
import asyncio
import math
import time
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import BaseModel

from squid_modes.algo import CM, GHZ, HBAR, US
from squid_modes.algo.circuit import circuit_from_record, derive_constants, energy_from_ghz, validate
from squid_modes.algo.coupling import transmon_charging_energy
from squid_modes.algo.errors import ParameterValidationError
from squid_modes.algo.types import CircuitParams, DerivedConstants, DriveSet, TransmonParams
from squid_modes.algo.utils import get_max_workers, get_version, write_csv, write_json
from squid_modes.config_loader import get_settings, set_setting, settings_snapshot
from squid_modes.log import get_logger


class RunManifest(BaseModel):
    command: list[str]
    config: dict
    outputs: list[str]
    duration_s: float
    version: str


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterValidationError("arguments", f"{self.prog}: {message}")


def section(name: str) -> dict:
    value = get_settings().get(name)
    if value is None:
        return {}
    return value.to_dict() if hasattr(value, "to_dict") else dict(value)


def _optional(value) -> Optional[float]:
    if value is None or (isinstance(value, str) and not value.strip()):
        return None
    return float(value)


def _lifetime(value) -> float:
    value = _optional(value)
    return math.inf if value is None else value * US


def load_circuit() -> tuple[CircuitParams, DriveSet, DerivedConstants]:
    """Circuit parameters from the [circuit] section, validated, with their derived constants."""
    params, tones = circuit_from_record(section("circuit"))
    report = validate(params, tones)
    if not report.ok:
        raise ParameterValidationError("circuit", "; ".join(report.errors))
    return params, tones, derive_constants(params, tones)


def load_transmon(record: dict, Omega: Optional[float] = None) -> TransmonParams:
    """
    Transmon from a record in configuration units, filling gaps from the [transmon] section.

    Omega, when given, overrides the configured frequency. A missing charging energy is derived
    from Omega and the E_J/E_C ratio.
    """
    merged = {**section("transmon"), **{k: v for k, v in record.items() if v is not None}}
    if Omega is None:
        Omega_GHz = _optional(merged.get("Omega_GHz"))
        if Omega_GHz is None:
            raise ParameterValidationError("transmon.Omega_GHz", "the transmon frequency is not configured")
        Omega = Omega_GHz * GHZ
    ratio = float(merged.get("ratio", 80.0))
    E_C_GHz = _optional(merged.get("E_C_GHz"))
    E_C = energy_from_ghz(E_C_GHz) if E_C_GHz is not None else transmon_charging_energy(Omega, ratio)
    d = float(section("circuit")["d_cm"]) * CM
    return TransmonParams(ratio=ratio, E_C=E_C, beta=float(merged.get("beta", 2.0 / 3.0)), Omega=Omega,
                          x_t=float(merged.get("x_t_over_d", 0.1)) * d, T1=_lifetime(merged.get("T1_us")),
                          T2=_lifetime(merged.get("T2_us")), n_g=float(merged.get("n_g", 0.0) or 0.0))


def transmon_alpha(t: TransmonParams) -> float:
    return -t.E_C / HBAR


class ExperimentBase:
    """
    Shared plumbing of the commands: flag parsing, output writing and the run manifest.

    Subclasses set `name`, add their flags in `add_arguments`, write parsed flags back into the
    settings in `apply_arguments` and do the work in `_run`.
    """
    name = "experiment"
    description = ""

    def __init__(self, args: Optional[Sequence[str]] = None, command: Optional[Sequence[str]] = None):
        self.args = self.set_parser().parse_args(list(args or []))
        self.command = list(command) if command is not None else [self.name, *(args or [])]
        self.apply_arguments(self.args)
        self.out_dir = Path(get_settings().get("config.output_dir", "out"))
        self.fmt = str(get_settings().get("config.output_format", "csv")).lower()
        if self.fmt not in ("csv", "json"):
            raise ParameterValidationError("config.output_format", f"unsupported output format '{self.fmt}'")
        self.outputs: list[Path] = []

    def set_parser(self) -> argparse.ArgumentParser:
        parser = ArgumentParser(prog=f"squid-modes {self.name}", description=self.description)
        self.add_arguments(parser)
        return parser

    def add_arguments(self, parser: argparse.ArgumentParser):
        pass

    def apply_arguments(self, args: argparse.Namespace):
        pass

    @staticmethod
    def override(key: str, value: Any):
        if value is not None:
            set_setting(key, value)
            get_logger().debug(f"Flag sets {key} = {value!r}")

    async def run(self):
        start = time.perf_counter()
        get_logger().info(f"Running {self.name}, outputs in {self.out_dir}")
        await self._run()
        manifest = RunManifest(command=self.command, config=settings_snapshot(),
                               outputs=[str(p) for p in self.outputs],
                               duration_s=time.perf_counter() - start, version=get_version())
        path = write_json(self.out_dir / f"{self.name}_manifest.json", manifest)
        get_logger().info(f"{self.name} finished in {manifest.duration_s:.2f} s, manifest {path}")
        get_logger().bind(manifest=manifest.model_dump(mode="json")).info(f"{self.name} run manifest")
        return manifest

    async def _run(self):
        raise NotImplementedError

    async def gather_limited(self, func, items: Sequence) -> list:
        """Run func over items in worker threads, at most SQUIDMODES_THREADS at a time, preserving order."""
        semaphore = asyncio.Semaphore(get_max_workers())

        async def limited(item):
            async with semaphore:
                return await asyncio.to_thread(func, item)

        return list(await asyncio.gather(*(limited(item) for item in items)))

    def write_table(self, stem: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        """A table is a CSV file, or with the json format a list of row objects."""
        if self.fmt == "json":
            path = write_json(self.out_dir / f"{stem}.json", [dict(zip(header, row)) for row in rows])
        else:
            path = write_csv(self.out_dir / f"{stem}.csv", header, rows)
        self.outputs.append(path)
        return path

    def write_record(self, stem: str, record: Any) -> Path:
        path = write_json(self.out_dir / f"{stem}.json", record)
        self.outputs.append(path)
        return path
