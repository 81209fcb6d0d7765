import numpy as np
import pytest

from nkdelib import load_landscape
from nkdelib.cli import main, parse_schedule, read_config_file
from nkdelib.deliberation import AlphaSchedule


def run_cli(*argv):
    return main(list(argv))


SWEEP_ARGS = (
    "sweep-alpha", "--n", "8", "--k", "3", "--m", "3", "--t-max", "40",
    "--runs", "20", "--alphas", "0.0,0.4,1.0", "--seed", "5",
)


class TestParseSchedule:
    def test_bare_float_is_constant(self):
        assert parse_schedule("0.3") == AlphaSchedule.constant(0.3)

    def test_constant_prefix(self):
        assert parse_schedule("constant:0.8") == AlphaSchedule.constant(0.8)

    def test_linear(self):
        assert parse_schedule("linear:0:1") == AlphaSchedule.linear(0.0, 1.0)

    def test_piecewise(self):
        sched = parse_schedule("piecewise:1=0.0,500=0.5")
        assert sched.breakpoints == ((1, 0.0), (500, 0.5))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            parse_schedule("cosine:0:1")


class TestConfigFile:
    def test_parse_and_comments(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("# experiment setup\nn = 8\nk=3  # rugged\n\nm=4\n")
        values = read_config_file(cfg)
        assert values == {"n": "8", "k": "3", "m": "4"}

    def test_malformed_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n 8\n")
        with pytest.raises(ValueError):
            read_config_file(cfg)

    def test_file_values_used_and_flags_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=6\nk=0\nm=1\nt_max=5\nseed=1\n")
        assert run_cli("run", "--config", str(cfg)) == 0
        out1 = capsys.readouterr().out
        assert "distinct_solutions=1" in out1
        # flag overrides file: m=2 now
        assert run_cli("run", "--config", str(cfg), "--m", "2") == 0
        out2 = capsys.readouterr().out
        assert "distinct_solutions=1" in out2  # k=0 still single-peaked


class TestRunCommand:
    def test_single_agent_summary(self, capsys):
        assert run_cli("run", "--m", "1", "--n", "4", "--k", "0", "--seed", "1") == 0
        out = capsys.readouterr().out
        assert "distinct_solutions=1" in out
        assert "terminated_by=consensus" in out

    def test_stdout_deterministic(self, capsys):
        args = ("run", "--n", "8", "--k", "3", "--m", "3", "--t-max", "30", "--seed", "9")
        assert run_cli(*args) == 0
        first = capsys.readouterr().out
        assert run_cli(*args) == 0
        assert capsys.readouterr().out == first

    def test_trace_output_written(self, tmp_path, capsys):
        trace_path = tmp_path / "trace.csv"
        assert run_cli(
            "run", "--n", "6", "--k", "2", "--m", "2", "--t-max", "10",
            "--seed", "3", "--trace-output", str(trace_path),
        ) == 0
        lines = trace_path.read_text().splitlines()
        assert lines[0].startswith("#")
        assert any(l.startswith("round,") for l in lines)


class TestSweepCommand:
    def test_csvs_written_with_headers(self, tmp_path, capsys):
        prefix = str(tmp_path / "s")
        assert run_cli(*SWEEP_ARGS, "--output", prefix) == 0
        runs_lines = (tmp_path / "s_runs.csv").read_text().splitlines()
        agg_lines = (tmp_path / "s_aggregate.csv").read_text().splitlines()
        assert runs_lines[0].startswith("# command=sweep-alpha")
        header = next(l for l in runs_lines if not l.startswith("#"))
        assert header.startswith("condition_label,k,w,alpha_spec,run_index,seed,")
        agg_header = next(l for l in agg_lines if not l.startswith("#"))
        assert agg_header.startswith("condition_label,k,w,alpha_spec,runs,mean_")
        data = [l for l in runs_lines if not l.startswith("#")][1:]
        assert len(data) == 3 * 20  # conditions x runs

    def test_byte_identical_across_invocations_and_workers(self, tmp_path, capsys):
        p1, p2, p3 = (str(tmp_path / x) for x in "abc")
        assert run_cli(*SWEEP_ARGS, "--workers", "1", "--output", p1) == 0
        assert run_cli(*SWEEP_ARGS, "--workers", "1", "--output", p2) == 0
        assert run_cli(*SWEEP_ARGS, "--workers", "2", "--output", p3) == 0
        ref_runs = (tmp_path / "a_runs.csv").read_bytes()
        ref_agg = (tmp_path / "a_aggregate.csv").read_bytes()
        for prefix in "bc":
            assert (tmp_path / f"{prefix}_runs.csv").read_bytes() == ref_runs
            assert (tmp_path / f"{prefix}_aggregate.csv").read_bytes() == ref_agg

    def test_full_precision_round_trip(self, tmp_path, capsys):
        import csv as csvmod

        prefix = str(tmp_path / "s")
        assert run_cli(*SWEEP_ARGS, "--output", prefix) == 0
        with open(tmp_path / "s_aggregate.csv") as fh:
            rows = [r for r in csvmod.reader(l for l in fh if not l.startswith("#"))]
        header, data = rows[0], rows[1:]
        mean_col = header.index("mean_distinct_solutions")
        assert len(data) == 3
        for row in data:
            assert row[0].startswith("k=3,w=0.0,alpha=")
            assert repr(float(row[mean_col])) == row[mean_col]


class TestCompareCommand:
    def test_outputs_and_comparison_header(self, tmp_path, capsys):
        prefix = str(tmp_path / "cmp")
        assert run_cli(
            "compare-schedules", "--n", "8", "--k", "3", "--m", "3",
            "--t-max", "40", "--runs", "16", "--seed", "4",
            "--schedule-a", "linear:0:1", "--schedule-b", "constant:0.5",
            "--output", prefix,
        ) == 0
        agg = (tmp_path / "cmp_aggregate.csv").read_text()
        assert "# comparison: a=A:linear(0.0,1.0);b=B:0.5" in agg
        out = capsys.readouterr().out
        assert "diff=" in out and "p=" in out

    def test_byte_identical(self, tmp_path, capsys):
        args = (
            "compare-schedules", "--n", "8", "--k", "3", "--m", "3",
            "--t-max", "40", "--runs", "16", "--seed", "4",
        )
        assert run_cli(*args, "--output", str(tmp_path / "x")) == 0
        assert run_cli(*args, "--output", str(tmp_path / "y")) == 0
        assert (tmp_path / "x_runs.csv").read_bytes() == (tmp_path / "y_runs.csv").read_bytes()
        assert (
            (tmp_path / "x_aggregate.csv").read_bytes()
            == (tmp_path / "y_aggregate.csv").read_bytes()
        )


class TestDumpCommand:
    def test_dump_and_reload(self, tmp_path, capsys):
        out = tmp_path / "land.json"
        assert run_cli(
            "dump-landscape", "--n", "6", "--k", "2", "--seed", "9", "--output", str(out)
        ) == 0
        land = load_landscape(out)
        assert land.n == 6 and land.k == 2 and land.seed == 9
        from nkdelib import build_nk_landscape

        rebuilt = build_nk_landscape(6, 2, "random", 9)
        assert np.array_equal(land.contribution_tables, rebuilt.contribution_tables)


class TestExitCodes:
    def test_unknown_flag_is_config_error(self, capsys):
        assert run_cli("sweep-alpha", "--frobnicate", "1") == 2

    def test_unknown_subcommand(self, capsys):
        assert run_cli("anneal") == 2

    def test_invalid_parameter_combination(self, capsys):
        assert run_cli("run", "--n", "4", "--k", "9", "--seed", "1") == 2
        assert "configuration error" in capsys.readouterr().err

    def test_unwritable_output_path(self, tmp_path, capsys):
        missing_dir = tmp_path / "no" / "such" / "dir" / "out"
        code = run_cli(*SWEEP_ARGS, "--runs", "2", "--output", str(missing_dir))
        assert code == 3
        assert "i/o error" in capsys.readouterr().err
