"""
End-to-end tests of the gpc-bench command line.
"""

import csv
import os
import subprocess
import sys

import pytest

import gpc_posterior
from gpc_posterior.bench_cli import EXIT_OK, EXIT_USAGE, main

TINY = [
    "--set", "n_dims=2",
    "--set", "mesh_elems=16",
    "--set", "n_list=4,8,16",
    "--set", "m_list=50,100,200",
    "--set", "mc_replicates=2",
    "--set", "density_samples=200",
    "--set", "quad_nodes=6",
    "--set", "candidate_degree=8",
]

CONVERGE_FILES = (
    "rates.csv",
    "density_errors.csv",
    "forward_tail.csv",
    "forward_coefficients.csv",
    "theta_terms.csv",
    "theta_diagnostics.csv",
    "posterior_summary.csv",
)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


pytestmark = pytest.mark.integration


class TestForwardCommand:
    """Tests for the forward subcommand."""

    def test_writes_solution_and_observations(self, tmp_path):
        assert main(["forward", "--out", str(tmp_path)] + TINY) == EXIT_OK
        solution = read_rows(tmp_path / "solution.csv")
        assert solution[0] == ["node", "x", "p_y0", "p_truth", "config_hash"]
        assert len(solution) == 16
        observations = read_rows(tmp_path / "observations.csv")
        assert len(observations) == 4
        assert len({row[-1] for row in solution[1:] + observations[1:]}) == 1

    def test_self_check(self, tmp_path, capsys):
        assert main(["forward", "--self-check", "--out", str(tmp_path)] + TINY) == EXIT_OK
        assert "FE self-check: order in h" in capsys.readouterr().out
        rows = read_rows(tmp_path / "self_check.csv")
        assert [r[0] for r in rows[1:]] == ["16", "32", "64", "128"]

    def test_malformed_config(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("n_dims = 2\nn_dims two\n", encoding="utf-8")
        assert main(["forward", "--config", str(config), "--out", str(tmp_path)]) == EXIT_USAGE
        err = capsys.readouterr().err
        assert "configuration error" in err
        assert "Line 2" in err
        assert not os.path.exists(tmp_path / "solution.csv")

    def test_missing_config(self, tmp_path):
        assert main(["forward", "--config", str(tmp_path / "nope.cfg")]) == EXIT_USAGE

    def test_directory_config(self, tmp_path, capsys):
        assert main(["forward", "--config", str(tmp_path), "--out", str(tmp_path / "out")]) == EXIT_USAGE
        assert "configuration error" in capsys.readouterr().err

    def test_undecodable_config(self, tmp_path, capsys):
        config = tmp_path / "latin.cfg"
        config.write_bytes(b"\xff\xfe")
        assert main(["forward", "--config", str(config), "--out", str(tmp_path)]) == EXIT_USAGE
        assert "not valid UTF-8" in capsys.readouterr().err

    def test_negative_seed(self, tmp_path, capsys):
        assert main(["forward", "--seed", "-5", "--out", str(tmp_path)] + TINY) == EXIT_USAGE
        assert "must be non-negative" in capsys.readouterr().err
        assert not os.path.exists(tmp_path / "solution.csv")

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["plot"])
        assert exc_info.value.code == EXIT_USAGE


class TestStudyCommands:
    """Tests for converge and cost-compare."""

    def test_converge(self, tmp_path, capsys):
        assert main(["converge", "--out", str(tmp_path)] + TINY) == EXIT_OK
        for name in CONVERGE_FILES:
            assert (tmp_path / name).exists(), name
        rates = read_rows(tmp_path / "rates.csv")
        assert rates[0] == ["N", "K_N", "support_theta", "err_Z", "err_mean_L2", "dropped_mass",
                            "wall_time", "config_hash"]
        assert [r[0] for r in rates[1:]] == ["4", "8", "16"]
        assert "slope legendre_tail" in capsys.readouterr().out

    def test_converge_sweep(self, tmp_path):
        args = ["converge", "--sweep-J", "--out", str(tmp_path), "--set", "j_sweep=1,2"] + TINY
        assert main(args) == EXIT_OK
        rows = read_rows(tmp_path / "sweep_j.csv")
        assert [r[0] for r in rows[1:]] == ["1", "2"]

    def test_cost_compare(self, tmp_path, capsys):
        assert main(["cost-compare", "--out", str(tmp_path)] + TINY) == EXIT_OK
        cost = read_rows(tmp_path / "cost.csv")
        assert [r[0] for r in cost[1:]] == ["mc"] * 3 + ["gpc"] * 3
        assert len(read_rows(tmp_path / "cost_fit.csv")) == 3
        assert "slope mc" in capsys.readouterr().out

    def test_empty_m_list(self, tmp_path):
        args = ["cost-compare", "--out", str(tmp_path)] + TINY + ["--set", "m_list="]
        assert main(args) == EXIT_USAGE
        assert not os.path.exists(tmp_path / "cost.csv")

    def test_converge_byte_identical(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["converge", "--out", str(first)] + TINY) == EXIT_OK
        assert main(["converge", "--out", str(second)] + TINY) == EXIT_OK
        for name in CONVERGE_FILES:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_seed_changes_hash(self, tmp_path):
        assert main(["forward", "--out", str(tmp_path / "a")] + TINY) == EXIT_OK
        assert main(["forward", "--seed", "7", "--out", str(tmp_path / "b")] + TINY) == EXIT_OK
        hash_a = read_rows(tmp_path / "a" / "solution.csv")[1][-1]
        hash_b = read_rows(tmp_path / "b" / "solution.csv")[1][-1]
        assert hash_a != hash_b


def test_module_entry_point(tmp_path):
    """python -m gpc_posterior runs the same command line."""
    src_dir = os.path.dirname(os.path.dirname(gpc_posterior.__file__))
    env = dict(os.environ, PYTHONPATH=os.pathsep.join([src_dir, os.environ.get("PYTHONPATH", "")]))
    result = subprocess.run(
        [sys.executable, "-m", "gpc_posterior", "forward", "--out", str(tmp_path)] + TINY,
        env=env, capture_output=True, text=True,
    )
    assert result.returncode == EXIT_OK, result.stderr
    assert (tmp_path / "solution.csv").exists()
