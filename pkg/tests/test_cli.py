import json
import subprocess
import sys

import pytest

from lowq_cavity import cli

SPLIT_SWEEP_ARGS = ["sweep", "--g", "0.5", "--gamma", "0.01", "--from", "-3", "--to", "3", "--points", "601"]


def run_cli(args, cwd=None, env=None):
    return subprocess.run([sys.executable, "-m", "lowq_cavity", *args], capture_output=True, text=True,
                          cwd=cwd, env=env)


class TestParseConfig:
    def test_split_resonance_sweep(self):
        cfg = cli.parse_config(SPLIT_SWEEP_ARGS)
        assert cfg.command == "sweep"
        assert (cfg.detuning_from, cfg.detuning_to, cfg.n_points) == (-3.0, 3.0, 601)
        p = cfg.cavities[0]
        assert (p.g, p.gamma, p.kappa, p.omega_c, p.omega_0) == (0.5, 0.01, 1.0, 0.0, 0.0)
        assert cfg.fmt == "csv"

    def test_points_validation_names_field(self):
        with pytest.raises(cli.UsageError, match="n_points"):
            cli.parse_config(["sweep", "--from", "-1", "--to", "1", "--points", "1"])

    def test_missing_required(self):
        with pytest.raises(cli.UsageError, match="missing required.*points"):
            cli.parse_config(["sweep", "--from", "-1", "--to", "1"])

    def test_malformed_number(self):
        with pytest.raises(cli.UsageError, match="malformed number for 'g'"):
            cli.parse_config(SPLIT_SWEEP_ARGS + ["--g", "half"])

    def test_unknown_command(self):
        with pytest.raises(cli.UsageError, match="invalid choice"):
            cli.parse_config(["teleport"])

    def test_complex_inputs(self):
        cfg = cli.parse_config(["transfer-photon", "--x", "0.6", "--y", "0.8i"])
        assert cfg.coefficients == (0.6, 0.8j)

    def test_unnormalized_inputs(self):
        with pytest.raises(cli.UsageError, match="not normalized"):
            cli.parse_config(["transfer-photon", "--x", "1", "--y", "1"])
        cfg = cli.parse_config(["transfer-photon", "--x", "1", "--y", "1", "--normalize"])
        assert abs(cfg.coefficients[0] - 2**-0.5) < 1e-15

    def test_per_cavity_lists(self):
        cfg = cli.parse_config(["entangle2", "--mode", "exact", "--g", "0.5,0.4"])
        assert [p.g for p in cfg.cavities] == [0.5, 0.4]
        with pytest.raises(cli.UsageError, match="'g' needs 1 or 2"):
            cli.parse_config(["entangle2", "--g", "0.5,0.4,0.3"])

    def test_config_file_and_precedence(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("# split-resonance sweep\nfrom = -3\nto: 3\npoints = 11\ng = 0.25\n")
        cfg = cli.parse_config(["sweep", "--config", str(conf), "--points", "21"])
        assert cfg.n_points == 21
        assert cfg.cavities[0].g == 0.25

    def test_config_file_unknown_key(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("points = 3\ncoupling = 0.5\n")
        with pytest.raises(cli.UsageError, match="unknown config key 'coupling'"):
            cli.parse_config(["sweep", "--config", str(conf)])

    def test_config_file_missing(self, tmp_path):
        with pytest.raises(cli.UsageError, match="cannot read config file"):
            cli.parse_config(["sweep", "--config", str(tmp_path / "nope")])

    def test_invalid_cavity(self):
        with pytest.raises(cli.UsageError, match="kappa"):
            cli.parse_config(SPLIT_SWEEP_ARGS + ["--kappa", "0"])

    def test_montecarlo_defaults(self):
        cfg = cli.parse_config(["montecarlo"])
        assert cfg.budget.detector_factor == 1e-4 and cfg.n_trials == 1_000_000


class TestRun:
    def test_sweep_csv_rows(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert cli.main(SPLIT_SWEEP_ARGS + ["--output", str(out)]) == 0
        lines = out.read_text().split("\n")
        assert lines[0] == "detuning_over_kappa,abs_r_atom,phase_r_atom,abs_r_empty,phase_r_empty"
        assert lines[-1] == "" and len(lines) - 2 == 601

    def test_sweep_json(self, tmp_path):
        out = tmp_path / "sweep.json"
        assert cli.main(SPLIT_SWEEP_ARGS + ["--format", "json", "--output", str(out)]) == 0
        assert len(json.loads(out.read_text())) == 601

    def test_entangle2_report(self, tmp_path, capsys):
        out = tmp_path / "e2.json"
        assert cli.main(["entangle2", "--output", str(out)]) == 0
        report = json.loads(out.read_text())
        assert [b["outcome"] for b in report["branches"]] == ["h", "v"]
        for b in report["branches"]:
            assert b["probability"] == pytest.approx(0.5, abs=1e-12)
            assert b["fidelity"] == pytest.approx(1.0, abs=1e-12)
        summary = capsys.readouterr().out
        assert summary.count("\n") == 1 and "entangle2" in summary

    def test_entangle3_shots(self, tmp_path):
        out = tmp_path / "e3.json"
        assert cli.main(["entangle3", "--mode", "exact", "--shots", "500", "--seed", "3", "--output", str(out)]) == 0
        report = json.loads(out.read_text())
        assert sum(report["counts"].values()) == 500
        assert {b["outcome"] for b in report["branches"]} == {"plus", "minus"}

    def test_transfer_reports(self, tmp_path):
        for cmd in (["transfer-photon", "--x", "0.6", "--y", "0.8"], ["transfer-atom", "--alpha1", "1", "--beta1", "0"]):
            out = tmp_path / "t.json"
            assert cli.main(cmd + ["--output", str(out)]) == 0
            branches = json.loads(out.read_text())["branches"]
            assert len(branches) == 4
            assert all(b["probability"] == pytest.approx(0.25, abs=1e-12) for b in branches)
            assert all(b["fidelity"] == pytest.approx(1, abs=1e-12) for b in branches)
            assert all(b["correction"] for b in branches)

    def test_transfer_csv(self, tmp_path):
        out = tmp_path / "t.csv"
        assert cli.main(["transfer-photon", "--x", "1", "--y", "0", "--format", "csv", "--output", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "outcome,probability,fidelity,correction" and len(lines) == 5

    def test_montecarlo(self, tmp_path):
        out = tmp_path / "mc.json"
        assert cli.main(["montecarlo", "--trials", "20000", "--output", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["p_success"] == pytest.approx(9.02776e-5, rel=1e-12)
        assert report["n_trials"] == 20000 and report["seed"] == 0

    def test_montecarlo_csv(self, tmp_path):
        out = tmp_path / "mc.csv"
        assert cli.main(["montecarlo", "--trials", "100", "--format", "csv", "--output", str(out)]) == 0
        header, row = out.read_text().splitlines()
        assert header.split(",")[0] == "p_success" and row.startswith("9.02776e-05")

    def test_stdout_output(self, capsys):
        assert cli.main(["entangle2", "--output", "-"]) == 0
        assert json.loads(capsys.readouterr().out)["command"] == "entangle2"

    def test_output_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
        assert cli.main(["entangle2"]) == 0
        assert (tmp_path / "entangle2.json").exists()

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert cli.main(["entangle2", "--output", str(blocker / "sub" / "r.json")]) == 1
        captured = capsys.readouterr()
        assert "cannot write report" in captured.err and captured.out == ""


class TestExitStatus:
    def test_empty_arguments(self):
        proc = run_cli([])
        assert proc.returncode == 2
        assert "usage:" in proc.stderr and proc.stdout == ""

    @pytest.mark.parametrize(
        "args, message",
        [
            (["sweep", "--from", "-1", "--to", "1", "--points", "1"], "n_points"),
            (["sweep", "--from", "-1", "--to", "1"], "missing required"),
            (["sweep", "--from", "x", "--to", "1", "--points", "3"], "malformed number"),
            (["bogus"], "invalid choice"),
        ],
    )
    def test_usage_errors(self, args, message):
        proc = run_cli(args)
        assert proc.returncode == 2
        assert message in proc.stderr and proc.stdout == ""

    def test_help(self):
        proc = run_cli(["sweep", "--help"])
        assert proc.returncode == 0 and "--points" in proc.stdout


@pytest.mark.parametrize(
    "args",
    [
        SPLIT_SWEEP_ARGS,
        ["entangle2", "--mode", "exact"],
        ["entangle3", "--shots", "100", "--seed", "9"],
        ["transfer-photon", "--x", "0.6", "--y", "0.8j"],
        ["transfer-atom", "--alpha1", "0.6", "--beta1", "0.8", "--mode", "exact"],
        ["montecarlo", "--trials", "50000", "--seed", "4"],
    ],
)
def test_byte_identical_reruns(tmp_path, args):
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli.main(args + ["--output", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
