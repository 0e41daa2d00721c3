"""Tests for the command-line front end."""

import argparse
import json
from pathlib import Path

import pandas as pd
import pytest

from src.uncertain_clt.cli import main, noise_from_label, parse_int_list, parse_matrix
from src.uncertain_clt.core.errors import ConfigError


def run(problem_yaml: Path, out: Path, *args: str) -> int:
    """Run one subcommand against the sample file, writing into ``out``."""
    command, *rest = args
    return main([command, "--spec", str(problem_yaml), "--out", str(out), *rest])


def read_json(path: Path) -> dict[str, object]:
    """Load a JSON report."""
    data: dict[str, object] = json.loads(path.read_text())
    return data


def test_parse_int_list() -> None:
    """Test comma lists of positive integers."""
    assert parse_int_list("8,32, 128") == [8, 32, 128]
    with pytest.raises(argparse.ArgumentTypeError):
        parse_int_list("0,4")
    with pytest.raises(argparse.ArgumentTypeError):
        parse_int_list("a")


def test_parse_matrix() -> None:
    """Test ';'-separated rows."""
    assert parse_matrix("1,0;0,3") == [[1.0, 0.0], [0.0, 3.0]]
    assert parse_matrix("2") == [[2.0]]
    with pytest.raises(argparse.ArgumentTypeError):
        parse_matrix("1,2;3")


def test_noise_labels() -> None:
    """Test noise labels with and without parameters."""
    assert noise_from_label("gauss_hermite:3", 1).order == 3
    assert noise_from_label("gauss_hermite", 2).order == 7
    assert noise_from_label("two_point:3", 1).points == [[3.0], [-1.0 / 3.0]]
    with pytest.raises(ConfigError):
        noise_from_label("cauchy", 1)


def test_g_eval(problem_yaml: Path, tmp_path: Path) -> None:
    """Test G(1) = 1/2 sigma_hi^2 = 2 for the band [1, 2]."""
    assert run(problem_yaml, tmp_path, "g-eval", "--matrix", "1") == 0
    report = read_json(tmp_path / "convex_g_eval.json")
    assert report["value"] == pytest.approx(2.0)
    assert report["argmax_index"] == 1
    assert report["candidates"] == pytest.approx([0.5, 2.0])


def test_solve_dp_writes_results(problem_yaml: Path, tmp_path: Path) -> None:
    """Test solve-dp writes the report, the value slices and the policy."""
    assert run(problem_yaml, tmp_path, "solve-dp", "--n", "4") == 0
    report = read_json(tmp_path / "convex_dp_n4.json")
    assert report["value"] == pytest.approx(4.0, abs=1e-9)
    assert report["solver"] == "dp"
    for name in ("convex_dp_n4_values", "convex_dp_n4_policy"):
        assert (tmp_path / f"{name}.csv").exists()
        assert (tmp_path / f"{name}.meta.json").exists()


def test_simulate_with_stored_policy(problem_yaml: Path, tmp_path: Path) -> None:
    """Test a policy written by solve-dp drives the simulation."""
    assert run(problem_yaml, tmp_path, "solve-dp", "--n", "4") == 0
    policy = tmp_path / "convex_dp_n4_policy.csv"
    code = run(problem_yaml, tmp_path, "simulate", "--n", "4", "--policy", str(policy), "--paths", "4000")
    assert code == 0
    report = read_json(tmp_path / "convex_simulate_feedback_n4.json")
    config = report["config"]
    assert isinstance(config, dict)
    assert config["simulation"]["seed"] == 7


def test_simulate_policy_wrong_n(problem_yaml: Path, tmp_path: Path) -> None:
    """Test a stored policy for another n exits with 1."""
    assert run(problem_yaml, tmp_path, "solve-dp", "--n", "4") == 0
    policy = tmp_path / "convex_dp_n4_policy.csv"
    assert run(problem_yaml, tmp_path, "simulate", "--n", "3", "--policy", str(policy)) == 1


def test_simulate_matrix_outside_set(problem_yaml: Path, tmp_path: Path) -> None:
    """Test a fixed matrix outside the set exits with 1."""
    code = run(
        problem_yaml, tmp_path, "simulate", "--n", "2", "--strategy", "fixed_matrix", "--matrix", "3"
    )
    assert code == 1


def test_solve_pde(problem_yaml: Path, tmp_path: Path) -> None:
    """Test solve-pde reports v(0, 0) = 4 for x^2."""
    assert run(problem_yaml, tmp_path, "solve-pde", "--pde-spacing", "0.2") == 0
    report = read_json(tmp_path / "convex_pde.json")
    assert report["value"] == pytest.approx(4.0, abs=1e-6)
    assert (tmp_path / "convex_pde_values.csv").exists()


def test_solve_pde_unstable_dt(problem_yaml: Path, tmp_path: Path) -> None:
    """Test a dt above the CFL bound exits with 1."""
    assert run(problem_yaml, tmp_path, "solve-pde", "--pde-spacing", "0.2", "--dt", "0.5") == 1


def test_converge(problem_yaml: Path, tmp_path: Path) -> None:
    """Test converge writes the report and the table."""
    assert run(problem_yaml, tmp_path, "converge", "--n", "2,4", "--pde-spacing", "0.4") == 0
    assert (tmp_path / "convex_converge.json").exists()
    assert (tmp_path / "convex_converge.csv").exists()


def test_noise_study(problem_yaml: Path, tmp_path: Path) -> None:
    """Test two lattice laws give the same value 4 and pass."""
    code = run(problem_yaml, tmp_path, "noise-study", "--n", "1,2", "--noises", "rademacher,two_point:2")
    assert code == 0
    report = read_json(tmp_path / "convex_noise_study.json")
    assert report["passed"] is True


def test_invariance_identity(problem_yaml: Path, tmp_path: Path) -> None:
    """Test O = I in 1-d trivially passes."""
    assert run(problem_yaml, tmp_path, "invariance", "--n", "2,4") == 0
    assert (tmp_path / "convex_invariance.csv").exists()


def test_invariance_non_orthogonal(problem_yaml: Path, tmp_path: Path) -> None:
    """Test a non-orthogonal O exits with 1."""
    assert run(problem_yaml, tmp_path, "invariance", "--n", "2", "--orthogonal", "2") == 1


def test_oracle(problem_yaml: Path, tmp_path: Path) -> None:
    """Test the oracle table is written."""
    assert run(problem_yaml, tmp_path, "oracle", "--n", "1,2") == 0
    assert (tmp_path / "convex_oracle.csv").exists()


def test_consistency(problem_yaml: Path, tmp_path: Path) -> None:
    """Test the residual table is written."""
    assert run(problem_yaml, tmp_path, "consistency", "--n", "16,64", "--points", "2") == 0
    assert (tmp_path / "convex_consistency.csv").exists()


def test_euler(problem_yaml: Path, tmp_path: Path) -> None:
    """Test the Euler comparison report and table."""
    assert run(problem_yaml, tmp_path, "euler", "--n", "4", "--paths", "2000") == 0
    assert (tmp_path / "convex_euler.json").exists()
    assert (tmp_path / "convex_euler.csv").exists()


def test_missing_spec_exits_2(tmp_path: Path) -> None:
    """Test configuration errors exit with 2."""
    assert main(["solve-dp", "--spec", str(tmp_path / "absent.yaml")]) == 2


def test_invalid_yaml_exits_2(tmp_path: Path) -> None:
    """Test a malformed problem file exits with 2."""
    path = tmp_path / "bad.yaml"
    path.write_text("uncertainty: [\n")
    assert main(["g-eval", "--spec", str(path), "--matrix", "1"]) == 2


def test_bad_arguments_exit_2(problem_yaml: Path) -> None:
    """Test argparse rejects a non-positive step count."""
    with pytest.raises(SystemExit) as excinfo:
        main(["solve-dp", "--spec", str(problem_yaml), "--n", "0"])
    assert excinfo.value.code == 2


def write_problem(tmp_path: Path, payoff: str, simulation: str = "") -> Path:
    """Band [1, 2] with Rademacher noise and the given payoff block."""
    path = tmp_path / "problem.yaml"
    path.write_text(
        "name: custom\n"
        "uncertainty:\n"
        "  kind: scalar_interval\n"
        "  sigma_lo: 1.0\n"
        "  sigma_hi: 2.0\n"
        "noise:\n"
        "  kind: rademacher\n"
        f"payoff:\n{payoff}"
        "grid:\n"
        "  half_width: 12.0\n"
        "pde:\n"
        "  spacing: 0.2\n"
        f"{simulation}"
    )
    return path


@pytest.mark.parametrize("command", ["solve-dp", "solve-pde"])
def test_payoff_bound_too_small_exits_1(command: str, tmp_path: Path) -> None:
    """Test an explicit bound below max |f| exits with 1 for both solvers."""
    path = write_problem(tmp_path, "  kind: cosine\n  bound: 0.5\n")
    assert run(path, tmp_path, command, "--n", "4") == 1
    assert not (tmp_path / "custom_dp_n4.json").exists()
    assert not (tmp_path / "custom_pde.json").exists()


def test_simulate_without_seed(tmp_path: Path) -> None:
    """Test a missing seed is generated and echoed in the report."""
    path = write_problem(tmp_path, "  kind: quadratic\n")
    code = run(
        path, tmp_path, "simulate", "--n", "2", "--strategy", "fixed_matrix", "--matrix", "2", "--paths", "1000"
    )
    assert code == 0
    report = read_json(tmp_path / "custom_simulate_fixed_matrix_n2.json")
    config = report["config"]
    assert isinstance(config, dict)
    seed = config["simulation"]["seed"]
    assert isinstance(seed, int)
    assert seed >= 0


def test_consistency_fixed_and_drifting(problem_yaml: Path, tmp_path: Path) -> None:
    """Test the residual table holds rows for both point sequences."""
    code = run(
        problem_yaml, tmp_path, "consistency", "--n", "16,64", "--points", "2", "--alpha", "0.5", "--beta", "0.5"
    )
    assert code == 0
    frame = pd.read_csv(tmp_path / "convex_consistency.csv")
    assert set(frame["sequence"]) == {"fixed", "drifting"}


def test_results_listing_and_lookup(problem_yaml: Path, tmp_path: Path) -> None:
    """Test stored reports and tables can be listed and printed back."""
    assert run(problem_yaml, tmp_path, "solve-dp", "--n", "4") == 0
    assert main(["results", "--out", str(tmp_path)]) == 0
    assert main(["results", "--out", str(tmp_path), "--name", "convex_dp_n4"]) == 0
    assert main(["results", "--out", str(tmp_path), "--name", "convex_dp_n4_policy"]) == 0
    assert main(["results", "--out", str(tmp_path), "--name", "absent"]) == 1
