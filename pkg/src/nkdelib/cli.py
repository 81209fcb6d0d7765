"""Command-line front end: single runs, sweeps, schedule comparisons, dumps.

Output files are deterministic byte-for-byte for a given configuration and
master seed, regardless of worker count: every file starts with comment
lines echoing the effective configuration, floats are written with full
round-trip precision, and row order is fixed by (condition, run index).

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

from .deliberation import (
    AlphaSchedule,
    DeliberationParams,
    run_deliberation,
    write_trace_csv,
)
from .experiments import (
    Condition,
    ExperimentResult,
    ExperimentSpec,
    compare_schedules,
    derive_run_seed,
    run_batch,
    sweep_alpha,
)
from .landscape import build_beliefs, build_nk_landscape, dump_landscape
from .metrics import summarize_run

RUNS_COLUMNS = (
    "condition_label", "k", "w", "alpha_spec", "run_index", "seed",
    "distinct_solutions", "dm_value", "dm_value_normalized",
    "consensus_round", "rounds_executed",
)
AGGREGATE_COLUMNS = (
    "condition_label", "k", "w", "alpha_spec", "runs",
    "mean_distinct_solutions", "sd_distinct_solutions", "ci_low", "ci_high",
    "mean_dm_value_normalized", "mean_consensus_round",
)


def _fmt(value) -> str:
    """CSV cell format: full-precision floats, empty cell for None."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_schedule(text: str) -> AlphaSchedule:
    """Parse a schedule spec: '0.5', 'constant:0.5', 'linear:0:1',
    'piecewise:1=0.0,500=0.5'."""
    text = text.strip()
    if ":" not in text:
        return AlphaSchedule.constant(float(text))
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind == "constant":
        return AlphaSchedule.constant(float(rest))
    if kind == "linear":
        parts = rest.split(":")
        if len(parts) != 2:
            raise ValueError(f"linear schedule needs start:end, got {text!r}")
        return AlphaSchedule.linear(float(parts[0]), float(parts[1]))
    if kind == "piecewise":
        points = []
        for item in rest.split(","):
            r, _, v = item.partition("=")
            points.append((int(r), float(v)))
        return AlphaSchedule.piecewise(points)
    raise ValueError(f"unknown schedule kind in {text!r}")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def read_config_file(path: str) -> dict[str, str]:
    """Flat key=value text with # comments and blank lines."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


# Keys that never influence simulation results; keeping them out of the
# header echo preserves byte-identical outputs across worker counts and
# output locations.
_NON_SEMANTIC_KEYS = frozenset({"output", "trace_output", "workers"})


class _Config:
    """Resolves each option as: explicit flag > config file > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_values = read_config_file(args.config) if args.config else {}
        self.effective: dict[str, object] = {}

    def get(self, key: str, default, convert):
        flag_value = getattr(self.args, key, None)
        if flag_value is not None:
            value = flag_value
        elif key in self.file_values:
            value = convert(self.file_values[key])
        else:
            value = default
        self.effective[key] = value
        return value

    def header_lines(self, command: str) -> tuple[str, ...]:
        lines = [f"command={command}"]
        for key in sorted(self.effective):
            if key in _NON_SEMANTIC_KEYS:
                continue
            value = self.effective[key]
            if isinstance(value, AlphaSchedule):
                value = value.describe()
            elif isinstance(value, list):
                value = ",".join(_fmt(v) for v in value)
            lines.append(f"{key}={_fmt(value)}")
        return tuple(lines)


def _add_common_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file; flags override it")
    parser.add_argument("--n", type=int, help="number of binary components")
    parser.add_argument("--k", type=int, help="dependencies per component")
    parser.add_argument("--m", type=int, help="number of agents")
    parser.add_argument("--t-max", dest="t_max", type=int, help="maximum rounds")
    parser.add_argument("--d", type=int, help="local-search radius")
    parser.add_argument("--w", type=float, help="divergence weight in [0, 1]")
    parser.add_argument(
        "--policy", choices=("unconditional", "self_interested"), help="integration policy"
    )
    parser.add_argument(
        "--neighbor-scheme", dest="neighbor_scheme", choices=("random", "adjacent")
    )
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nkdelib",
        description="Multiagent deliberation on NK fitness landscapes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a single deliberation run")
    _add_common_params(p_run)
    p_run.add_argument("--alpha-schedule", dest="alpha_schedule", help="e.g. 0.5 or linear:0:1")
    p_run.add_argument(
        "--no-stop-on-consensus",
        dest="stop_on_consensus",
        action="store_const",
        const=False,
        default=None,
    )
    p_run.add_argument(
        "--count-initial-positions",
        dest="count_initial_positions",
        action="store_const",
        const=True,
        default=None,
    )
    p_run.add_argument("--trace-output", dest="trace_output", help="write the round trace CSV here")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep-alpha", help="sweep constant alpha over a (k, alpha) grid")
    _add_common_params(p_sweep)
    p_sweep.add_argument(
        "--alphas",
        type=_parse_floats,
        help="comma-separated alpha grid, default 0.0..1.0 by 0.1",
    )
    p_sweep.add_argument(
        "--k-values",
        dest="k_values",
        type=_parse_ints,
        help="comma-separated k grid, default --k",
    )
    p_sweep.add_argument("--runs", type=int, help="runs per condition")
    p_sweep.add_argument("--pairing", choices=("common_random_numbers", "independent"))
    p_sweep.add_argument("--workers", type=int, help="worker processes (default: machine cores)")
    p_sweep.add_argument("--output", help="output prefix, writes <prefix>_runs.csv etc.")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cmp = sub.add_parser("compare-schedules", help="paired comparison of two alpha schedules")
    _add_common_params(p_cmp)
    p_cmp.add_argument("--schedule-a", dest="schedule_a", help="e.g. linear:0:1")
    p_cmp.add_argument("--schedule-b", dest="schedule_b", help="e.g. constant:0.5")
    p_cmp.add_argument("--runs", type=int, help="paired runs")
    p_cmp.add_argument("--workers", type=int)
    p_cmp.add_argument("--output", help="output prefix")
    p_cmp.set_defaults(func=_cmd_compare)

    p_dump = sub.add_parser("dump-landscape", help="serialize a seeded landscape")
    _add_common_params(p_dump)
    p_dump.add_argument("--output", help="output path (structured text)")
    p_dump.set_defaults(func=_cmd_dump)

    return parser


def _resolve_params(cfg: _Config, with_schedule: bool = True) -> DeliberationParams:
    schedule = AlphaSchedule.constant(0.5)
    if with_schedule:
        schedule = cfg.get("alpha_schedule", schedule, parse_schedule)
        if isinstance(schedule, str):
            schedule = parse_schedule(schedule)
            cfg.effective["alpha_schedule"] = schedule
    return DeliberationParams(
        n=cfg.get("n", 10, int),
        k=cfg.get("k", 5, int),
        m=cfg.get("m", 5, int),
        t_max=cfg.get("t_max", 1000, int),
        d=cfg.get("d", 1, int),
        schedule=schedule,
        divergence_weight=cfg.get("w", 0.0, float),
        integration_policy=cfg.get("policy", "unconditional", str),
        stop_on_consensus=cfg.get("stop_on_consensus", True, _parse_bool),
        count_initial_positions=cfg.get("count_initial_positions", False, _parse_bool),
        seed=cfg.get("seed", 0, int),
    )


def _write_result_csvs(prefix: str, header: tuple[str, ...], result: ExperimentResult) -> None:
    # Labels and schedule specs may contain commas; csv quoting keeps the
    # files parseable while leaving plain cells untouched.
    runs_path = f"{prefix}_runs.csv"
    agg_path = f"{prefix}_aggregate.csv"
    with open(runs_path, "w", encoding="utf-8", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUNS_COLUMNS)
        for cond in result.conditions:
            stats = cond.stats
            for idx, (seed, summary) in enumerate(zip(cond.run_seeds, cond.summaries)):
                writer.writerow(
                    (
                        stats.label,
                        stats.k,
                        _fmt(float(stats.w)),
                        stats.alpha_spec,
                        idx,
                        seed,
                        summary.distinct_solutions,
                        _fmt(summary.dm_value),
                        _fmt(summary.dm_value_normalized),
                        _fmt(summary.consensus_round),
                        summary.rounds_executed,
                    )
                )
    with open(agg_path, "w", encoding="utf-8", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for comparison in result.comparisons:
            fh.write(
                f"# comparison: a={comparison.label_a};b={comparison.label_b};"
                f"mean_a={comparison.mean_a!r};mean_b={comparison.mean_b!r};"
                f"paired_mean_diff={comparison.paired_mean_diff!r};"
                f"p_value={comparison.p_value!r}\n"
            )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for cond in result.conditions:
            s = cond.stats
            writer.writerow(
                (
                    s.label,
                    s.k,
                    _fmt(float(s.w)),
                    s.alpha_spec,
                    s.runs,
                    _fmt(s.mean_distinct),
                    _fmt(s.sd_distinct),
                    _fmt(s.ci_low),
                    _fmt(s.ci_high),
                    _fmt(s.mean_dm_value_normalized),
                    _fmt(s.mean_consensus_round),
                )
            )


def _default_workers() -> int:
    return os.cpu_count() or 1


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _Config(args)
    params = _resolve_params(cfg)
    scheme = cfg.get("neighbor_scheme", "random", str)
    trace_output = cfg.get("trace_output", None, str)
    # The run seed is derived exactly like run 0 of a batch with this
    # master seed, so `run` reproduces the first run of any paired sweep.
    run_seed = derive_run_seed(params.seed, 0, 0)
    params = replace(params, seed=run_seed)
    beliefs = build_beliefs(
        params.n,
        params.k,
        params.m,
        params.divergence_weight,
        scheme,
        run_seed,
    )
    trace = run_deliberation(params, beliefs)
    summary = summarize_run(trace, beliefs.truth)
    print(f"terminated_by={trace.terminated_by}")
    print(f"rounds_executed={summary.rounds_executed}")
    print(f"distinct_solutions={summary.distinct_solutions}")
    print(f"dm_value={_fmt(summary.dm_value)}")
    print(f"dm_value_normalized={_fmt(summary.dm_value_normalized)}")
    print(f"consensus_round={_fmt(summary.consensus_round)}")
    if trace_output:
        write_trace_csv(trace, beliefs, trace_output, cfg.header_lines("run"))
        if args.verbose:
            print(f"trace written to {trace_output}", file=sys.stderr)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _Config(args)
    params = _resolve_params(cfg, with_schedule=False)
    scheme = cfg.get("neighbor_scheme", "random", str)
    default_alphas = [round(0.1 * i, 1) for i in range(11)]
    alphas = cfg.get("alphas", default_alphas, _parse_floats)
    k_values = cfg.get("k_values", [params.k], _parse_ints)
    runs = cfg.get("runs", 1000, int)
    workers = cfg.get("workers", _default_workers(), int)
    output = cfg.get("output", "sweep", str)
    pairing = cfg.get("pairing", "common_random_numbers", str)
    if pairing == "common_random_numbers":
        result = sweep_alpha(
            base=params,
            alphas=alphas,
            k_values=k_values,
            w=params.divergence_weight,
            runs=runs,
            master_seed=params.seed,
            neighbor_scheme=scheme,
            workers=workers,
        )
    else:
        conditions = tuple(
            Condition(
                label=f"k={k},w={float(params.divergence_weight)!r},alpha={float(a)!r}",
                schedule=AlphaSchedule.constant(float(a)),
                k=int(k),
                w=float(params.divergence_weight),
            )
            for k in k_values
            for a in alphas
        )
        spec = ExperimentSpec(
            base=params,
            conditions=conditions,
            runs_per_condition=runs,
            master_seed=params.seed,
            pairing="independent",
            neighbor_scheme=scheme,
        )
        result = run_batch(spec, workers=workers)
    _write_result_csvs(output, cfg.header_lines("sweep-alpha"), result)
    for cond in result.conditions:
        s = cond.stats
        print(
            f"{s.label}: mean={s.mean_distinct:.3f} sd={s.sd_distinct:.3f} "
            f"ci=[{s.ci_low:.3f},{s.ci_high:.3f}]"
        )
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    cfg = _Config(args)
    params = _resolve_params(cfg, with_schedule=False)
    schedule_a = cfg.get("schedule_a", AlphaSchedule.linear(0.0, 1.0), parse_schedule)
    schedule_b = cfg.get("schedule_b", AlphaSchedule.constant(0.5), parse_schedule)
    if isinstance(schedule_a, str):
        schedule_a = parse_schedule(schedule_a)
    if isinstance(schedule_b, str):
        schedule_b = parse_schedule(schedule_b)
    runs = cfg.get("runs", 1000, int)
    workers = cfg.get("workers", _default_workers(), int)
    output = cfg.get("output", "schedules", str)
    result = compare_schedules(
        base=params,
        schedule_a=schedule_a,
        schedule_b=schedule_b,
        runs=runs,
        master_seed=params.seed,
        neighbor_scheme=cfg.get("neighbor_scheme", "random", str),
        workers=workers,
    )
    _write_result_csvs(output, cfg.header_lines("compare-schedules"), result)
    comparison = result.comparisons[0]
    print(
        f"{comparison.label_a} vs {comparison.label_b}: "
        f"mean_a={comparison.mean_a:.3f} mean_b={comparison.mean_b:.3f} "
        f"diff={comparison.paired_mean_diff:.3f} p={comparison.p_value:.5f}"
    )
    return 0


def _cmd_dump(args: argparse.Namespace) -> int:
    cfg = _Config(args)
    n = cfg.get("n", 10, int)
    k = cfg.get("k", 5, int)
    seed = cfg.get("seed", 0, int)
    scheme = cfg.get("neighbor_scheme", "random", str)
    output = cfg.get("output", "landscape.json", str)
    landscape = build_nk_landscape(n, k, scheme, seed)
    dump_landscape(landscape, output, cfg.header_lines("dump-landscape"))
    if args.verbose:
        print(f"landscape written to {output}", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"nkdelib: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nkdelib: i/o error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"nkdelib: runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
