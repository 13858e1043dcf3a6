"""Tests for configuration parsing, the experiment runner, and the CLI."""

import math
import subprocess
import sys

import numpy as np
import pytest

from stepadapt.config import ConfigError, parse_config, resolved_items
from stepadapt.runner import run_experiment


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "stepadapt", *args],
        capture_output=True, text=True, cwd=cwd,
    )


MINIMAL = "algorithm=oneplusone\nobjective=sphere\nn=10\nseed=7\n"


class TestParseConfig:
    def test_minimal_defaults(self):
        config = parse_config(MINIMAL)
        assert config.mode == "trajectory"
        assert config.x0 == () and config.x0_fill == 0.8
        assert config.sigma0 == 1.0
        assert config.max_evals == 10 ** 6
        assert config.replicates == 1
        assert np.array_equal(config.initial_x(), np.full(10, 0.8))

    def test_comma_population_autofilled(self):
        config = parse_config("algorithm=xnes\nobjective=sphere\nn=10\nseed=1\n")
        assert config.algorithm_params["p"] == 10

    def test_sa_tau_autofilled(self):
        config = parse_config("algorithm=sa\nobjective=sphere\nn=16\nseed=1\n")
        assert config.algorithm_params["tau"] == pytest.approx(0.25)

    def test_negative_sigma0_names_key(self):
        with pytest.raises(ConfigError, match="sigma0 must be positive"):
            parse_config(MINIMAL + "sigma0=-1\n")

    def test_unknown_key_names_line(self):
        with pytest.raises(ConfigError, match="line 5"):
            parse_config(MINIMAL + "sneaky=1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(MINIMAL + "n=11\n")

    def test_garbage_line_rejected(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_config("algorithm=oneplusone\nwhat is this\n")

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_config("algorithm=oneplusone\nobjective=sphere\nn=4\n")

    def test_overrides_apply_after_file(self):
        config = parse_config(MINIMAL, overrides=["sigma0=2.5", "sigma0=3.5"])
        assert config.sigma0 == 3.5

    def test_vector_x0(self):
        config = parse_config("algorithm=sa\nobjective=sphere\nn=3\nseed=1\n"
                              "x0=1,2,3\n")
        assert np.array_equal(config.initial_x(), [1.0, 2.0, 3.0])
        with pytest.raises(ConfigError, match="x0"):
            parse_config("algorithm=sa\nobjective=sphere\nn=3\nseed=1\nx0=1,2\n")

    def test_scalar_x_star_fill(self):
        config = parse_config(MINIMAL + "objective.x_star=1.5\n")
        assert np.array_equal(config.reference_point(), np.full(10, 1.5))

    def test_unknown_objective_rejected(self):
        with pytest.raises(ConfigError, match="objective"):
            parse_config("algorithm=sa\nobjective=rastrigin\nn=3\nseed=1\n")

    def test_constant_sigma_mode_rules(self):
        config = parse_config("objective=sphere\nn=4\nseed=1\n"
                              "mode=constant-sigma\n")
        assert config.algorithm == "constant"
        with pytest.raises(ConfigError, match="constant"):
            parse_config("algorithm=csa\nobjective=sphere\nn=4\nseed=1\n"
                         "mode=constant-sigma\n")

    def test_si_check_needs_no_algorithm(self):
        config = parse_config("objective=sphere\nn=4\nseed=1\nmode=si-check\n")
        assert config.algorithm is None

    def test_resolved_items_round_trip(self):
        config = parse_config(MINIMAL + "sigma0=1e-6\ntarget_f=1e-18\n")
        text = "\n".join(f"{k}={v}" for k, v in resolved_items(config))
        again = parse_config(text)
        assert again.sigma0 == config.sigma0
        assert again.target_f == config.target_f
        assert again.algorithm_params == config.algorithm_params


class TestRunner:
    def base_config(self, extra=""):
        return parse_config(
            MINIMAL + "sigma0=1e-6\nmax_evals=4000\nreplicates=2\n"
            "target_f=1e-18\nfigures=false\n" + extra
        )

    def test_trajectory_writes_expected_files(self, tmp_path):
        result = run_experiment(self.base_config(), tmp_path)
        assert result.exit_code == 0
        assert len(result.trace_paths) == 2
        for path in result.trace_paths:
            lines = path.read_text().splitlines()
            assert lines[0].startswith("# ")
            assert "seed=7" in lines[0]
            assert lines[1] == "t,evals,x_norm,sigma,z_norm,log_eta"
        assert result.summary_path.exists()
        assert result.figure_path is None

    def test_trace_floats_round_trip(self, tmp_path):
        result = run_experiment(self.base_config(), tmp_path)
        table = np.genfromtxt(result.trace_paths[0], delimiter=",", names=True,
                              skip_header=1)
        # 17 significant digits survive the text round trip bit-exactly
        sigma = table["sigma"]
        assert sigma[0] == 1e-6
        assert np.all(np.isfinite(sigma))
        assert table["z_norm"][5] == pytest.approx(
            table["x_norm"][5] / sigma[5], rel=1e-16)

    def test_reruns_are_byte_identical(self, tmp_path):
        config = self.base_config()
        a = run_experiment(config, tmp_path / "a")
        b = run_experiment(config, tmp_path / "b")
        for pa, pb in zip(a.trace_paths, b.trace_paths):
            assert pa.read_bytes() == pb.read_bytes()
        assert a.summary_path.read_bytes() == b.summary_path.read_bytes()

    def test_replicates_use_distinct_streams(self, tmp_path):
        result = run_experiment(self.base_config(), tmp_path)
        assert (result.trace_paths[0].read_bytes()
                != result.trace_paths[1].read_bytes())

    def test_require_target_exit_code(self, tmp_path):
        config = self.base_config("require_target=true\n")
        assert run_experiment(config, tmp_path / "ok").exit_code == 0
        hopeless = parse_config(
            MINIMAL + "sigma0=1e-6\nmax_evals=50\nreplicates=1\n"
            "target_f=1e-18\nrequire_target=true\nfigures=false\n"
        )
        assert run_experiment(hopeless, tmp_path / "miss").exit_code == 2

    def test_normalized_chain_mode(self, tmp_path):
        config = parse_config(
            "algorithm=oneplusone\nobjective=sphere\nn=5\nseed=3\n"
            "mode=normalized-chain\nmax_evals=3000\nfigures=false\n"
        )
        result = run_experiment(config, tmp_path)
        table = np.genfromtxt(result.trace_paths[0], delimiter=",", names=True,
                              skip_header=1)
        assert np.isnan(table["x_norm"][1:]).all()
        assert np.isfinite(table["z_norm"]).all()
        assert math.isfinite(result.summaries[0]["cr"])

    def test_cr_estimate_mode_reports_interval(self, tmp_path):
        config = parse_config(
            "algorithm=oneplusone\nobjective=sphere\nn=5\nseed=3\n"
            "mode=cr-estimate\nmax_evals=5000\nfigures=false\n"
        )
        result = run_experiment(config, tmp_path)
        summary = result.summaries[0]
        assert summary["cr"] > 0
        assert summary["cr_half_width"] > 0

    def test_invariance_suite_mode(self, tmp_path):
        config = parse_config(
            "algorithm=oneplusone\nobjective=sphere\nn=4\nseed=5\n"
            "mode=invariance-suite\nhorizon=200\nfigures=false\n"
        )
        result = run_experiment(config, tmp_path)
        assert result.exit_code == 0
        text = result.report_path.read_text()
        assert text.count("pass") == 7  # 3 monotone + translation + 3 scales

    def test_si_check_mode(self, tmp_path):
        config = parse_config(
            "objective=arctan∘sphere\nn=4\nseed=5\nmode=si-check\n"
            "si_trials=200\nfigures=false\n"
        )
        result = run_experiment(config, tmp_path)
        assert result.exit_code == 0
        assert "consistent" in result.report_path.read_text()

    def test_constant_sigma_fast_path_reaches_target(self, tmp_path):
        config = parse_config(
            "objective=sphere\nn=10\nseed=11\nmode=constant-sigma\n"
            "sigma0=1e-3\nmax_evals=100000\ntarget_f=1e-6\nfigures=false\n"
        )
        result = run_experiment(config, tmp_path)
        evals = result.summaries[0]["evals_to_target"]
        assert 300 <= evals <= 50_000

    def test_constant_sigma_generic_path_on_other_objectives(self, tmp_path):
        # a shifted sphere cannot use the compiled kernel; the generic
        # pipeline must produce the same qualitative behavior
        config = parse_config(
            "objective=sphere\nobjective.x_star=0.05\nn=10\nseed=11\n"
            "mode=constant-sigma\nsigma0=1e-3\nmax_evals=30000\n"
            "target_f=1e-6\nfigures=false\n"
        )
        result = run_experiment(config, tmp_path)
        evals = result.summaries[0]["evals_to_target"]
        assert 300 <= evals <= 30_000

    def test_figures_rendered_when_enabled(self, tmp_path):
        config = parse_config(MINIMAL + "max_evals=300\nsigma0=1e-2\n")
        result = run_experiment(config, tmp_path)
        assert result.figure_path is not None and result.figure_path.exists()
        assert result.figure_path.stat().st_size > 1000


class TestCli:
    def test_exit_zero_and_outputs(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(MINIMAL + "sigma0=1e-6\nmax_evals=3000\n"
                       "target_f=1e-18\nfigures=false\n")
        out = tmp_path / "out"
        proc = run_cli("--config", str(cfg), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert (out / "trace_000.csv").exists()
        assert (out / "summary.csv").exists()
        assert "evals_to_target" in proc.stdout

    def test_config_error_exit_one(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(MINIMAL + "sigma0=-2\n")
        proc = run_cli("--config", str(cfg), "--out", str(tmp_path / "o"))
        assert proc.returncode == 1
        assert "sigma0" in proc.stderr

    def test_missing_config_file_exit_one(self, tmp_path):
        proc = run_cli("--config", str(tmp_path / "absent.cfg"))
        assert proc.returncode == 1

    def test_pure_set_invocation(self, tmp_path):
        proc = run_cli(
            "--out", str(tmp_path / "o"), "--seed", "3",
            "--set", "algorithm=oneplusone", "--set", "objective=sphere",
            "--set", "n=5", "--set", "max_evals=200",
            "--set", "figures=false",
        )
        assert proc.returncode == 0, proc.stderr

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(MINIMAL + "max_evals=100\nfigures=false\n")
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_cli("--config", str(cfg), "--out", str(a))
        run_cli("--config", str(cfg), "--out", str(b), "--seed", "99")
        ta = (a / "trace_000.csv").read_text()
        tb = (b / "trace_000.csv").read_text()
        assert "seed=7" in ta and "seed=99" in tb
        assert ta != tb

    def test_target_miss_exit_two(self, tmp_path):
        proc = run_cli(
            "--out", str(tmp_path / "o"), "--seed", "3",
            "--set", "algorithm=oneplusone", "--set", "objective=sphere",
            "--set", "n=5", "--set", "max_evals=50",
            "--set", "sigma0=1e-6", "--set", "target_f=1e-30",
            "--set", "require_target=true", "--set", "figures=false",
        )
        assert proc.returncode == 2

    def test_internal_invariant_violation_exit_three(self, tmp_path,
                                                     monkeypatch):
        from stepadapt import InternalInvariantError
        from stepadapt import cli as cli_module

        def boom(config, out_dir):
            raise InternalInvariantError("step-size multiplier 0.0")

        monkeypatch.setattr(cli_module, "run_experiment", boom)
        code = cli_module.main([
            "--out", str(tmp_path / "o"), "--seed", "1",
            "--set", "algorithm=oneplusone", "--set", "objective=sphere",
            "--set", "n=3",
        ])
        assert code == 3

    def test_mode_flag(self, tmp_path):
        proc = run_cli(
            "--out", str(tmp_path / "o"), "--seed", "3",
            "--mode", "si-check",
            "--set", "objective=sphere", "--set", "n=4",
            "--set", "si_trials=100",
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "o" / "si_report.csv").exists()
