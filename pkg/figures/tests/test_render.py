import csv
from pathlib import Path

import numpy as np
import pytest

from nkdelib_figures import EmptyInputError, FigureSpec, SchemaError, render
from nkdelib_figures.cli import main as cli_main

DATA = Path(__file__).parent / "data"
SWEEP = DATA / "sweep_aggregate.csv"
SCHEDULES = DATA / "schedules_aggregate.csv"
REAL_SWEEP = DATA / "real_sweep_aggregate.csv"
REAL_SCHEDULES = DATA / "real_schedules_aggregate.csv"


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def band_bounds(poly, xs):
    """(lo, hi) per x read back from a fill_between polygon."""
    verts = poly.get_paths()[0].vertices
    lows, highs = [], []
    for x in xs:
        ys = verts[verts[:, 0] == x, 1]
        lows.append(ys.min())
        highs.append(ys.max())
    return lows, highs


def line_layer(fig):
    ax = fig.axes[0]
    return [
        (tuple(line.get_xdata()), tuple(line.get_ydata())) for line in ax.get_lines()
    ]


class TestAlphaCurve:
    def test_renders_and_roundtrips_exactly(self, tmp_path):
        out = tmp_path / "curve.png"
        fig = render(FigureSpec(str(SWEEP), "alpha_curve", str(out), facet="k"))
        assert out.stat().st_size > 0

        rows = read_rows(SWEEP)
        ax = fig.axes[0]
        lines = ax.get_lines()
        polys = ax.collections
        assert len(lines) == 2 and len(polys) == 2  # one per k in {1, 5}
        for line, poly, k in zip(lines, polys, ("1", "5")):
            expected = [r for r in rows if r["k"] == k]
            expected.sort(key=lambda r: float(r["alpha_spec"]))
            xs = [float(r["alpha_spec"]) for r in expected]
            assert list(line.get_xdata()) == xs
            assert list(line.get_ydata()) == [
                float(r["mean_distinct_solutions"]) for r in expected
            ]
            lows, highs = band_bounds(poly, xs)
            assert lows == [float(r["ci_low"]) for r in expected]
            assert highs == [float(r["ci_high"]) for r in expected]

    def test_axis_labels(self, tmp_path):
        fig = render(FigureSpec(str(SWEEP), "alpha_curve", str(tmp_path / "c.png")))
        ax = fig.axes[0]
        assert ax.get_xlabel() == "integration parameter α"
        assert ax.get_ylabel() == "number of solutions discovered"

    def test_input_not_modified(self, tmp_path):
        before = SWEEP.read_bytes()
        render(FigureSpec(str(SWEEP), "alpha_curve", str(tmp_path / "c.png")))
        assert SWEEP.read_bytes() == before

    def test_identical_input_identical_data_layer(self, tmp_path):
        spec1 = FigureSpec(str(SWEEP), "alpha_curve", str(tmp_path / "a.png"))
        spec2 = FigureSpec(str(SWEEP), "alpha_curve", str(tmp_path / "b.png"))
        assert line_layer(render(spec1)) == line_layer(render(spec2))

    def test_single_condition_renders(self, tmp_path):
        single = tmp_path / "single.csv"
        rows = SWEEP.read_text().splitlines()
        header = [l for l in rows if not l.startswith("#")][0]
        data = [l for l in rows if not l.startswith("#")][1]
        single.write_text(header + "\n" + data + "\n")
        fig = render(FigureSpec(str(single), "alpha_curve", str(tmp_path / "s.png")))
        line = fig.axes[0].get_lines()[0]
        assert len(line.get_xdata()) == 1

    def test_real_primary_output_renders(self, tmp_path):
        fig = render(FigureSpec(str(REAL_SWEEP), "alpha_curve", str(tmp_path / "r.png")))
        assert len(fig.axes[0].get_lines()) == 2  # k in {1, 3}

    def test_facet_w(self, tmp_path):
        # the fixture holds a single w value, so faceting by w gives one line
        fig = render(FigureSpec(str(SWEEP), "alpha_curve", str(tmp_path / "w.png"), facet="w"))
        assert len(fig.axes[0].get_lines()) == 1

    def test_non_numeric_alpha_spec_rejected(self, tmp_path):
        fig_spec = FigureSpec(str(SCHEDULES), "alpha_curve", str(tmp_path / "x.png"))
        with pytest.raises(SchemaError):
            render(fig_spec)


class TestScheduleComparison:
    def test_bar_heights_and_whiskers_roundtrip(self, tmp_path):
        # Hand-written means 3.0 vs 4.0 must be read back from the data layer.
        out = tmp_path / "bars.svg"
        fig = render(
            FigureSpec(str(SCHEDULES), "schedule_comparison", str(out), facet="k")
        )
        assert out.stat().st_size > 0
        ax = fig.axes[0]
        heights = sorted(p.get_height() for p in ax.patches)
        assert heights == [3.0, 4.0]
        segments = [seg for coll in ax.collections for seg in coll.get_segments()]
        bounds = sorted((float(seg[0][1]), float(seg[1][1])) for seg in segments)
        rows = sorted(
            (float(r["ci_low"]), float(r["ci_high"])) for r in read_rows(SCHEDULES)
        )
        assert bounds == rows

    def test_y_axis_label(self, tmp_path):
        fig = render(
            FigureSpec(str(SCHEDULES), "schedule_comparison", str(tmp_path / "b.png"))
        )
        assert fig.axes[0].get_ylabel() == "number of solutions discovered"

    def test_real_primary_output_renders(self, tmp_path):
        fig = render(
            FigureSpec(str(REAL_SCHEDULES), "schedule_comparison", str(tmp_path / "r.png"))
        )
        assert len(fig.axes[0].patches) == 2

    def test_group_labels_follow_facet(self, tmp_path):
        fig = render(
            FigureSpec(str(SCHEDULES), "schedule_comparison", str(tmp_path / "g.png"))
        )
        labels = [t.get_text() for t in fig.axes[0].get_xticklabels()]
        assert labels == ["k=5"]


class TestDiagnostics:
    def test_missing_column_named(self, tmp_path):
        broken = tmp_path / "broken.csv"
        lines = [l for l in SWEEP.read_text().splitlines() if not l.startswith("#")]
        header = lines[0].replace(",ci_high", ",ci_hi")
        broken.write_text("\n".join([header] + lines[1:]) + "\n")
        with pytest.raises(SchemaError, match="ci_high"):
            render(FigureSpec(str(broken), "alpha_curve", str(tmp_path / "x.png")))

    def test_empty_data_distinct_diagnostic(self, tmp_path):
        empty = tmp_path / "empty.csv"
        header = [l for l in SWEEP.read_text().splitlines() if not l.startswith("#")][0]
        empty.write_text(header + "\n")
        with pytest.raises(EmptyInputError, match="no data rows"):
            render(FigureSpec(str(empty), "alpha_curve", str(tmp_path / "x.png")))

    def test_headerless_file(self, tmp_path):
        blank = tmp_path / "blank.csv"
        blank.write_text("# just a comment\n")
        with pytest.raises(EmptyInputError):
            render(FigureSpec(str(blank), "alpha_curve", str(tmp_path / "x.png")))

    def test_bad_kind_and_facet(self, tmp_path):
        with pytest.raises(ValueError):
            FigureSpec(str(SWEEP), "pie", str(tmp_path / "x.png"))
        with pytest.raises(ValueError):
            FigureSpec(str(SWEEP), "alpha_curve", str(tmp_path / "x.png"), facet="m")


def test_a8_both_kinds_roundtrip_fixture(tmp_path):
    """Acceptance: both chart kinds render from a fixture aggregate CSV and
    the plotted data layer round-trips its means and CI bounds exactly."""
    curve = render(FigureSpec(str(SWEEP), "alpha_curve", str(tmp_path / "a.png")))
    bars = render(FigureSpec(str(SCHEDULES), "schedule_comparison", str(tmp_path / "b.png")))

    sweep_rows = read_rows(SWEEP)
    curve_ok = True
    ax = curve.axes[0]
    for line, poly, k in zip(ax.get_lines(), ax.collections, ("1", "5")):
        expected = sorted(
            (r for r in sweep_rows if r["k"] == k), key=lambda r: float(r["alpha_spec"])
        )
        xs = [float(r["alpha_spec"]) for r in expected]
        lows, highs = band_bounds(poly, xs)
        curve_ok &= list(line.get_ydata()) == [
            float(r["mean_distinct_solutions"]) for r in expected
        ]
        curve_ok &= lows == [float(r["ci_low"]) for r in expected]
        curve_ok &= highs == [float(r["ci_high"]) for r in expected]

    sched_rows = read_rows(SCHEDULES)
    bars_ax = bars.axes[0]
    heights = sorted(float(p.get_height()) for p in bars_ax.patches)
    bars_ok = heights == sorted(float(r["mean_distinct_solutions"]) for r in sched_rows)
    segments = [seg for coll in bars_ax.collections for seg in coll.get_segments()]
    bounds = sorted((float(s[0][1]), float(s[1][1])) for s in segments)
    bars_ok &= bounds == sorted(
        (float(r["ci_low"]), float(r["ci_high"])) for r in sched_rows
    )

    ok = bool(curve_ok and bars_ok)
    print(f"ACCEPTANCE A8 figure rendering: {'PASS' if ok else 'FAIL'} - "
          f"curve roundtrip={bool(curve_ok)} bars roundtrip={bool(bars_ok)}")
    assert ok


class TestCli:
    def test_success(self, tmp_path, capsys):
        out = tmp_path / "fig.png"
        code = cli_main(
            ["--input", str(SWEEP), "--kind", "alpha_curve", "--output", str(out)]
        )
        assert code == 0
        assert out.stat().st_size > 0

    def test_both_kinds_via_cli(self, tmp_path):
        assert cli_main(
            ["--input", str(SWEEP), "--kind", "alpha_curve",
             "--output", str(tmp_path / "a.png")]
        ) == 0
        assert cli_main(
            ["--input", str(SCHEDULES), "--kind", "schedule_comparison",
             "--output", str(tmp_path / "b.png")]
        ) == 0

    def test_schema_error_exit_2(self, tmp_path, capsys):
        broken = tmp_path / "broken.csv"
        broken.write_text("condition_label,k\nx,1\n")
        code = cli_main(
            ["--input", str(broken), "--kind", "alpha_curve", "--output", str(tmp_path / "x.png")]
        )
        assert code == 2
        assert "missing required column" in capsys.readouterr().err

    def test_missing_input_exit_2(self, tmp_path, capsys):
        code = cli_main(
            ["--input", str(tmp_path / "nope.csv"), "--kind", "alpha_curve",
             "--output", str(tmp_path / "x.png")]
        )
        assert code == 2

    def test_unknown_flag_exit_2(self, capsys):
        assert cli_main(["--frobnicate"]) == 2

    def test_unwritable_output_exit_3(self, tmp_path, capsys):
        code = cli_main(
            ["--input", str(SWEEP), "--kind", "alpha_curve",
             "--output", str(tmp_path / "missing" / "dir" / "x.png")]
        )
        assert code == 3
