import asyncio
import json

import pytest

from squid_modes.agent.squid_agent import SquidAgent
from squid_modes.algo import EXIT_BAD_INPUT, EXIT_OK
from squid_modes.cli import run


class TestCli:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as e:
            run(["--version"])
        assert e.value.code == 0
        assert capsys.readouterr().out.startswith("squid-modes")

    def test_modes_writes_record_profile_and_manifest(self, tmp_path):
        assert run(["--preset", "three_node", "--out", str(tmp_path), "modes"]) == EXIT_OK
        record = json.loads((tmp_path / "modes_mode.json").read_text())
        assert record["branch"] == 3
        assert record["kd"] == pytest.approx(4.61517, abs=5e-5)
        profile = (tmp_path / "modes_profile.csv").read_text().splitlines()
        assert profile[0] == "x_cm,u_omega,u_plus,u_minus"
        assert len(profile) == 402
        manifest = json.loads((tmp_path / "modes_manifest.json").read_text())
        assert manifest["command"] == ["modes"]
        assert manifest["config"]["circuit"]["d_cm"] == 1.2

    def test_json_format(self, tmp_path):
        assert run(["--preset", "transmon_coupling", "--out", str(tmp_path), "--format", "json", "modes", "--branch", "1"]) == EXIT_OK
        rows = json.loads((tmp_path / "modes_profile.json").read_text())
        assert set(rows[0]) == {"x_cm", "u_omega", "u_plus", "u_minus"}

    def test_manifest_replay_is_deterministic(self, tmp_path):
        assert run(["--preset", "three_node", "--out", str(tmp_path), "modes", "--M", "2"]) == EXIT_OK
        first = (tmp_path / "modes_mode.json").read_bytes()
        (tmp_path / "modes_mode.json").unlink()
        assert run(["--config", str(tmp_path / "modes_manifest.json")]) == EXIT_OK
        assert (tmp_path / "modes_mode.json").read_bytes() == first

    def test_invalid_parameters(self, tmp_path):
        assert run(["--out", str(tmp_path), "modes", "--branch", "2"]) == EXIT_BAD_INPUT
        assert run(["--out", str(tmp_path), "modes", "--unknown-flag"]) == EXIT_BAD_INPUT
        assert run(["--out", str(tmp_path), "modes", "--circuit.EJ0_GHz=-5"]) == EXIT_BAD_INPUT

    def test_missing_config(self, tmp_path):
        assert run(["--config", str(tmp_path / "absent.toml"), "modes"]) == EXIT_BAD_INPUT

    def test_no_command(self, capsys):
        assert run([]) == EXIT_BAD_INPUT


class TestSquidAgent:
    def test_unknown_command(self):
        assert asyncio.run(SquidAgent().handle_request("review --pr 1")) == EXIT_BAD_INPUT

    def test_string_request(self, tmp_path):
        request = f"modes --branch 1 --config.output_dir={tmp_path}"
        assert asyncio.run(SquidAgent().handle_request(request)) == EXIT_OK
        assert (tmp_path / "modes_mode.json").is_file()


class TestCommands:
    def test_sweep(self, tmp_path):
        assert run(["--preset", "amplitude_sweep", "--out", str(tmp_path), "sweep", "--steps", "3", "--branches", "1,3"]) == EXIT_OK
        lines = (tmp_path / "sweep_branch3.csv").read_text().splitlines()
        assert lines[0] == "dEJ_over_EJ0,omega_GHz,kd,shift_MHz,error"
        assert len(lines) == 4
        assert lines[1].startswith("0,")
        assert (tmp_path / "sweep_branch1.csv").is_file()
        assert not (tmp_path / "sweep_branch5.csv").exists()

    def test_sweep_needs_two_steps(self, tmp_path):
        assert run(["--preset", "amplitude_sweep", "--out", str(tmp_path), "sweep", "--steps", "1"]) == EXIT_BAD_INPUT

    def test_coupling(self, tmp_path):
        args = ["--preset", "transmon_coupling", "--out", str(tmp_path), "coupling", "--omega-d", "6.0", "--steps", "3"]
        assert run(args) == EXIT_OK
        lines = (tmp_path / "coupling_omega_d_6GHz.csv").read_text().splitlines()
        assert lines[0] == "dEJ_over_EJ0,G_full_MHz,G_qs_MHz,omega_GHz,error"
        assert len(lines) == 4
        summary = json.loads((tmp_path / "coupling_summary.json").read_text())
        assert summary["curves"][0]["transmon_Omega_GHz"] == pytest.approx(10.82 - 6.0, abs=0.01)
        assert summary["curves"][0]["chi_MHz"] < 0

    def test_oracle_needs_one_tone(self, tmp_path):
        assert run(["--preset", "two_qubit_gate", "--out", str(tmp_path), "oracle"]) == EXIT_BAD_INPUT

    def test_lossless_gate(self, tmp_path):
        args = ["--preset", "two_qubit_gate", "--out", str(tmp_path), "gate", "--lossless", "--no-kerr",
                "--N", "8", "--dt", "0.1"]
        assert run(args) == EXIT_OK
        tones = (tmp_path / "gate_tones.csv").read_text().splitlines()
        assert tones[0] == "qubit_Omega_GHz,tone_GHz,dEJ_over_EJ0,G_MHz"
        assert len(tones) == 5
        metrics = json.loads((tmp_path / "gate_metrics.json").read_text())
        assert metrics["fidelity"] >= 0.995
        assert metrics["n_photon_final"] < 1e-3
        assert metrics["gate_time_ns"] == pytest.approx(100.0, rel=1e-6)
        assert metrics["config"]["kappa_MHz"] == 0.0
        assert metrics["integrator"]["steps"] == 1000
        trajectory = (tmp_path / "gate_trajectory.csv").read_text().splitlines()
        assert trajectory[0].startswith("t_ns,n_photon,")
