from squid_modes.algo import GHZ, NS
from squid_modes.algo.errors import ParameterValidationError
from squid_modes.algo.tdoracle import oracle_record, verify_mode
from squid_modes.config_loader import get_settings
from squid_modes.tools.experiment_base import ExperimentBase, load_circuit


class OracleExperiment(ExperimentBase):
    """Check a solved mode against the time-domain LC chain and write the sampled flux trace and its spectrum."""
    name = "oracle"
    description = "Time-domain verification of a Floquet mode"

    def add_arguments(self, parser):
        parser.add_argument("--branch", type=int, help="odd mode index")
        parser.add_argument("--M", type=int, help="sideband truncation order of the compared mode")
        parser.add_argument("--cells", type=int, help="LC cells per half of the resonator")
        parser.add_argument("--duration", type=float, help="simulated time in ns")

    def apply_arguments(self, args):
        self.override("oracle.branch", args.branch)
        self.override("oracle.truncation_order", args.M)
        self.override("oracle.n_cells", args.cells)
        self.override("oracle.duration_ns", args.duration)

    async def _run(self):
        settings = get_settings()
        params, tones, _ = load_circuit()
        if len(tones) != 1:
            raise ParameterValidationError("circuit.tones", "the oracle compares a mode driven by exactly one tone")
        n_cells = int(settings.get("oracle.n_cells", 400))
        duration = float(settings.get("oracle.duration_ns", 60.0)) * NS
        report = verify_mode(params, tones[0], int(settings.get("oracle.branch", 3)), n_cells=n_cells, T=duration,
                             truncation_order=int(settings.get("oracle.truncation_order", 1)))

        series = report.series
        self.write_table("oracle_trace", ("t_ns", "phi_sample"),
                         [(t / NS, phi) for t, phi in zip(series.t, series.phi)])
        spectrum = report.spectrum
        self.write_table("oracle_spectrum", ("f_GHz", "re", "im", "abs"),
                         [(w / GHZ, a.real, a.imag, abs(a)) for w, a in zip(spectrum.omegas, spectrum.amplitudes)])
        record = oracle_record(report, n_cells, series.final_state.dt, duration)
        self.write_record("oracle_record", record)
        return record
