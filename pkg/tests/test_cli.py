"""Tests for the evidence-plane command line."""

import logging

import pytest

from evidence_plane import __version__
from evidence_plane.cli import build_parser, configure_logging, debug_from_env, main
from evidence_plane.errors import EXIT_CONFIG, EXIT_DATA, EXIT_OK

RUN_CFG = """\
seed = 3
dataset.kind = gaussian
dataset.samples_per_class = 120
model.kind = linear
training.epochs = 1
estimation.k = 3
analysis.vote_n_values = 1
analysis.vote_groups_per_class = 10
"""


class TestParser:
    """Tests for argument parsing."""

    def test_run_with_overrides(self):
        args = build_parser().parse_args(["run", "x.cfg", "--seed", "4", "--out", "runs/y"])
        assert (args.command, args.config, args.seed, args.out) == ("run", "x.cfg", 4, "runs/y")

    def test_sweep_sides(self):
        args = build_parser().parse_args(["oracle", "binary-image-sweep", "--sides", "4,6"])
        assert args.sides == [4, 6]
        assert args.n_per_class == 10_000
        assert args.k == "auto"

    def test_sweep_fixed_k(self):
        args = build_parser().parse_args(["oracle", "binary-image-sweep", "--k", "100"])
        assert args.k == "100"

    def test_bad_sides(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["oracle", "binary-image-sweep", "--sides", "4,x"])

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out


class TestLogging:
    """Tests for logging setup."""

    @pytest.mark.parametrize("value,expected", [("true", True), ("1", True), ("YES", True), ("", False), ("no", False)])
    def test_debug_env(self, monkeypatch, value, expected):
        monkeypatch.setenv("EVIDENCE_PLANE_DEBUG", value)
        assert debug_from_env() is expected

    def test_verbose_sets_debug(self, monkeypatch):
        monkeypatch.delenv("EVIDENCE_PLANE_DEBUG", raising=False)
        configure_logging(verbose=True)
        assert logging.getLogger().level == logging.DEBUG
        configure_logging(verbose=False)
        assert logging.getLogger().level == logging.INFO


class TestCommands:
    """Tests for main() dispatch and exit codes."""

    def test_run(self, write_config, tmp_path):
        out = tmp_path / "run"
        assert main(["run", str(write_config(RUN_CFG)), "--out", str(out)]) == EXIT_OK
        assert (out / "trajectory.csv").exists()

    def test_run_invalid_config(self, write_config, tmp_path):
        path = write_config("seed = 1\n")
        assert main(["run", str(path), "--out", str(tmp_path / "x")]) == EXIT_CONFIG

    def test_suite(self, write_config, tmp_path, capsys):
        write_config(RUN_CFG, "one.cfg")
        assert main(["suite", str(tmp_path), "--out", str(tmp_path / "suite")]) == EXIT_OK
        assert capsys.readouterr().out.strip().endswith("summary.csv")

    def test_suite_without_configs(self, tmp_path):
        assert main(["suite", str(tmp_path)]) == EXIT_CONFIG

    def test_plots_missing_run(self, tmp_path):
        assert main(["plots", str(tmp_path / "nothing")]) == EXIT_DATA

    def test_plots_after_run(self, write_config, tmp_path):
        out = tmp_path / "run"
        main(["run", str(write_config(RUN_CFG)), "--out", str(out)])
        (out / "region.tsv").unlink()
        assert main(["plots", str(out)]) == EXIT_OK
        assert (out / "region.tsv").exists()


class TestOracleCommands:
    """Tests for the oracle subcommands."""

    def test_exact_binary_image_kl(self, capsys):
        assert main(["oracle", "binary-image-kl", "--d", "3", "--p", "0.5"]) == EXIT_OK
        header, row = capsys.readouterr().out.strip().splitlines()
        assert header.split("\t") == ["d", "p", "kl_bits", "standard_error", "method", "samples"]
        fields = row.split("\t")
        assert float(fields[2]) == 0.0
        assert fields[4] == "exact"

    def test_monte_carlo_binary_image_kl(self, capsys):
        assert main(["oracle", "binary-image-kl", "--d", "4", "--p", "0.2", "--mc", "5000"]) == EXIT_OK
        fields = capsys.readouterr().out.strip().splitlines()[1].split("\t")
        assert fields[4] == "monte_carlo"
        assert float(fields[3]) > 0
        assert fields[5] == "5000"

    def test_invalid_flip_probability(self):
        assert main(["oracle", "binary-image-kl", "--d", "3", "--p", "1.5"]) != EXIT_OK

    def test_gaussian_envelope(self, capsys):
        assert main(["oracle", "gaussian-envelope", "--shift", "1.0", "--points", "1"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "alpha\tbeta_star\tdiagonal"
        alpha, beta, diagonal = map(float, lines[1].split("\t"))
        assert alpha == diagonal == 0.5
        assert beta == pytest.approx(0.158655, abs=1e-6)

    def test_binary_image_sweep(self, capsys):
        argv = ["oracle", "binary-image-sweep", "--sides", "3", "--n-per-class", "300", "--p", "0.2"]
        assert main(argv) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "d\tanalytic_bits\tanalytic_se\tknn_bits"
        assert lines[1].split("\t")[0] == "3"
