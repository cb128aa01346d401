"""CLI surface: parsing, exit codes, CSV output, determinism."""

import subprocess
import sys

import pytest

from updating_queues import cli
from updating_queues.cli import (CLIError, RunConfig, emit_table, parse_args,
                                 parse_delta_grid, parse_perturbation, run)


def invoke(argv, capsys):
    """Parse + run in-process; returns (code, stdout, stderr)."""
    try:
        code = run(parse_args(argv))
    except CLIError as exc:
        sys.stderr.write(f"error: {exc}\n")
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


class TestGridParsing:
    def test_colon_syntax_inclusive(self):
        grid = parse_delta_grid("0.6:3.0:0.2")
        assert len(grid) == 13
        assert grid[0] == pytest.approx(0.6)
        assert grid[-1] == pytest.approx(3.0, abs=1e-12)

    def test_comma_list(self):
        assert parse_delta_grid("0.5,1.0,2.0") == (0.5, 1.0, 2.0)

    def test_single_point_range(self):
        assert parse_delta_grid("1.0:1.0:0.5") == (1.0,)

    @pytest.mark.parametrize("bad", ["", "1.0:0.5:0.2", "0.5:1.0:0",
                                     "a:b:c", "0.5:1.0", "-1.0,2.0"])
    def test_rejects_malformed(self, bad):
        with pytest.raises(CLIError):
            parse_delta_grid(bad)


class TestPerturbationParsing:
    def test_scalar(self):
        assert parse_perturbation("0.25") == 0.25

    def test_vector(self):
        assert parse_perturbation("0.01,-0.01,0.01") == [0.01, -0.01, 0.01]

    def test_rejects_garbage(self):
        with pytest.raises(CLIError):
            parse_perturbation("a,b")


class TestParseArgs:
    def test_defaults(self):
        cfg = parse_args(["amplitude", "--delta", "1.0"])
        assert isinstance(cfg, RunConfig)
        p = cfg.params
        assert (p.lam, p.mu, p.theta, p.n, p.delta) == (10.0, 1.0, 1.0, 2, 1.0)

    def test_missing_delta_rejected(self):
        with pytest.raises(CLIError):
            parse_args(["amplitude"])

    def test_table_requires_grid(self):
        with pytest.raises(CLIError):
            parse_args(["table"])

    def test_config_file_with_flag_override(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("lambda = 8\nn = 4\ndelta = 2.0  # comment\n")
        cfg = parse_args(["amplitude", "--config", str(cfg_file), "--n", "6"])
        assert cfg.params.lam == 8.0
        assert cfg.params.n == 6          # flag wins
        assert cfg.params.delta == 2.0    # file fills the gap

    def test_config_unknown_key_rejected(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("wavelength = 8\n")
        with pytest.raises(CLIError):
            parse_args(["amplitude", "--delta", "1", "--config", str(cfg_file)])

    def test_invalid_params_exit_code(self):
        with pytest.raises(CLIError) as err:
            parse_args(["amplitude", "--delta", "-1.0"])
        assert err.value.code == 2


class TestAmplitudeCommand:
    def test_two_queue_console(self, capsys):
        code, out, _ = invoke(["amplitude", "--lambda", "10", "--mu", "1",
                               "--theta", "1", "--n", "2", "--delta", "1.0"],
                              capsys)
        assert code == 0
        assert out.splitlines() == ["fixed-point 2.2609", "linear 2.3092",
                                    "quadratic 2.3062"]

    def test_method_filter(self, capsys):
        code, out, _ = invoke(["amplitude", "--delta", "1.0", "--method",
                               "linear"], capsys)
        assert code == 0
        assert out == "linear 2.3092\n"

    def test_odd_console(self, capsys):
        code, out, _ = invoke(["amplitude", "--n", "3", "--delta", "1.5"],
                              capsys)
        assert code == 0
        assert out.splitlines() == ["nonlinear-1 1.3793", "linear-1 1.4267",
                                    "nonlinear-2 2.7587", "linear-2 2.8534"]

    def test_csv_output_full_precision(self, tmp_path, capsys):
        out_file = tmp_path / "amp.csv"
        code, _, _ = invoke(["amplitude", "--delta", "1.0", "--out",
                             str(out_file)], capsys)
        assert code == 0
        lines = out_file.read_text().splitlines()
        assert lines[0] == "method,amplitude"
        value = float(lines[1].split(",")[1])
        assert abs(value - 2.260895930849178) < 1e-12

    def test_unknown_method(self, capsys):
        code, _, err = invoke(["amplitude", "--delta", "1.0", "--method",
                               "cubic"], capsys)
        assert code == 2
        assert "error" in err


class TestCriticalDelayCommand:
    def test_console_three_decimals(self, capsys):
        code, out, _ = invoke(["critical-delay", "--lambda", "10", "--mu",
                               "1", "--theta", "1", "--n", "3"], capsys)
        assert code == 0
        assert out == "0.619\n"

    def test_no_finite_threshold(self, capsys):
        code, out, _ = invoke(["critical-delay", "--lambda", "2", "--n", "2"],
                              capsys)
        assert code == 0
        assert out == "no finite threshold\n"


class TestTableCommand:
    def test_console_four_decimals(self, capsys):
        code, out, _ = invoke(["table", "--n", "2", "--delta-grid",
                               "0.6:1.0:0.2"], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "Delta,FixedPoint,Linear,Quadratic"
        assert lines[1] == "0.6000,1.2253,1.4555,1.4522"
        assert lines[3] == "1.0000,2.2609,2.3092,2.3062"

    def test_odd_header(self, capsys):
        code, out, _ = invoke(["table", "--n", "3", "--delta-grid", "1.5,1.7"],
                              capsys)
        assert code == 0
        assert out.splitlines()[0] == \
            "Delta,Nonlinear1,Linear1,Nonlinear2,Linear2"

    def test_empty_grid_exits_2(self, capsys):
        code, _, err = invoke(["table", "--n", "2", "--delta-grid",
                               "2.0:1.0:0.5"], capsys)
        assert code == 2
        assert "error" in err

    def test_branch_transition_warning(self, capsys):
        code, out, err = invoke(["table", "--n", "8", "--delta-grid",
                                 "2.2:4.6:0.2"], capsys)
        assert code == 0
        assert "real-root branch at delta=3.8" in err
        assert len(out.splitlines()) == 14

    def test_no_warning_without_transition(self, capsys):
        code, _, err = invoke(["table", "--n", "4", "--delta-grid",
                               "0.9:1.3:0.2"], capsys)
        assert code == 0
        assert err == ""

    def test_row_failure_empty_cell_exit_3(self, capsys, monkeypatch):
        from updating_queues.amplitude_nd import OddAmplitudeResult

        real = cli.odd_solve

        def flaky(p, cfg=None):
            res = real(p, cfg)
            if abs(p.delta - 1.7) < 1e-9:
                return OddAmplitudeResult(
                    L1=res.L1, U1=res.U1, L2=res.L2, U2=res.U2, A1=res.A1,
                    A2=res.A2, method="newton", converged=False,
                    iterations=res.iterations, residual=1.0)
            return res

        monkeypatch.setattr(cli, "odd_solve", flaky)
        code, out, err = invoke(["table", "--n", "3", "--delta-grid",
                                 "1.5,1.7,1.9"], capsys)
        assert code == 3
        assert "did not converge" in err
        lines = out.splitlines()
        # failed row keeps delta and the linear cells, drops the others
        cells = lines[2].split(",")
        assert cells[0] == "1.7000"
        assert cells[1] == "" and cells[3] == ""
        assert cells[2] != "" and cells[4] != ""
        assert all(len(line.split(",")) == 5 for line in lines)

    def test_emit_table_programmatic_flags(self):
        from updating_queues import ModelParams
        p = ModelParams(lam=10, mu=1, theta=1, n=8, delta=2.2)
        grid = [round(2.2 + 0.2 * k, 10) for k in range(13)]
        sweep = emit_table(p, grid)
        assert sweep.flags == tuple(d >= 3.8 for d in grid)
        assert not sweep.failed


class TestSimulateCommand:
    def test_stdout_schema(self, capsys):
        code, out, _ = invoke(["simulate", "--n", "2", "--delta", "0.5",
                               "--horizon", "2", "--samples-per-interval",
                               "4"], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "t,q1,q2"
        assert lines[1].startswith("0.0,5.01,4.99")
        assert len(lines) == 1 + 1 + 4 * 4  # header, t=0, 4 intervals x 4

    def test_png_next_to_csv(self, tmp_path, capsys):
        out_file = tmp_path / "traj.csv"
        code, _, _ = invoke(["simulate", "--n", "2", "--delta", "0.5",
                             "--horizon", "5", "--out", str(out_file)],
                            capsys)
        assert code == 0
        assert out_file.exists()
        png = tmp_path / "traj.png"
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_seed_perturbation_vector(self, capsys):
        code, out, _ = invoke(["simulate", "--n", "4", "--delta", "1.0",
                               "--horizon", "1", "--seed-perturbation",
                               "0.01,-0.01,0.01,-0.01"], capsys)
        assert code == 0
        first = out.splitlines()[1].split(",")
        assert [float(x) for x in first[1:]] == [2.51, 2.49, 2.51, 2.49]

    def test_vector_length_mismatch_exits_2(self, capsys):
        code, _, err = invoke(["simulate", "--n", "3", "--delta", "1.0",
                               "--horizon", "1", "--seed-perturbation",
                               "0.01,-0.01"], capsys)
        assert code == 2
        assert "error" in err

    def test_unwritable_path_exits_4(self, capsys):
        code, _, err = invoke(["simulate", "--n", "2", "--delta", "0.5",
                               "--horizon", "2", "--out",
                               "/nonexistent-dir/x.csv"], capsys)
        assert code == 4
        assert "error" in err


class TestCompareCommand:
    def test_two_queue_agreement(self, capsys):
        code, out, _ = invoke(["compare", "--n", "2", "--delta", "0.7"],
                              capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == ("queue,empirical,analytic,abs_error,"
                            "equilibrium,bar_low,bar_high,note")
        for line in lines[1:]:
            cells = line.split(",")
            assert abs(float(cells[3])) <= 1e-3
            assert float(cells[4]) == pytest.approx(5.0)

    def test_decayed_queue_flagged(self, capsys):
        code, out, err = invoke(["compare", "--n", "3", "--delta", "1.5",
                                 "--horizon", "900", "--burn-in", "750"],
                                capsys)
        assert code == 0
        lines = out.splitlines()[1:]
        notes = [line.split(",")[-1] for line in lines]
        assert notes.count("decayed") == 1
        assert "decayed" in err

    def test_balanced_clusters_with_alternating_start(self, capsys):
        code, out, _ = invoke(["compare", "--n", "4", "--delta", "3.0",
                               "--seed-perturbation", "0.01,-0.01,0.01,-0.01"],
                              capsys)
        assert code == 0
        for line in out.splitlines()[1:]:
            assert abs(float(line.split(",")[3])) <= 1e-3


class TestDeterminism:
    def test_table_csv_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            code, _, _ = invoke(["table", "--n", "2", "--delta-grid",
                                 "0.6:3.0:0.2", "--out", str(path)], capsys)
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_simulate_outputs_byte_identical(self, tmp_path, capsys):
        paths = [tmp_path / "r1.csv", tmp_path / "r2.csv"]
        for path in paths:
            invoke(["simulate", "--n", "2", "--delta", "0.5", "--horizon",
                    "10", "--out", str(path)], capsys)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        png = [p.with_suffix(".png") for p in paths]
        assert png[0].read_bytes() == png[1].read_bytes()


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "updating_queues", "critical-delay",
             "--n", "3"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout == "0.619\n"

    def test_argparse_usage_error(self):
        proc = subprocess.run(
            [sys.executable, "-m", "updating_queues", "amplitude",
             "--delta", "1.0", "--bogus"], capture_output=True, text=True)
        assert proc.returncode == 2
