"""Monte Carlo experiment harness: batched runs, sweeps, paired comparisons.

Runs are seeded individually via a splitmix64 mix of (master_seed,
condition_index, run_index). Under common-random-numbers pairing the
condition index is held at zero, so run r of every condition shares its
landscape and simulation streams; comparisons across conditions then see
identical random inputs and differ only through the condition itself.
Results are a pure function of the spec: execution order, chunking and
worker count never change them.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _engine
from .deliberation import AlphaSchedule, DeliberationParams
from .landscape import MAX_ENUMERABLE_N, NEIGHBOR_SCHEMES
from .metrics import RunSummary
from .seeding import TAG_BOOTSTRAP, TAG_COMPARISON, generator, substream

PAIRINGS = ("common_random_numbers", "independent")

BOOTSTRAP_RESAMPLES = 10_000
_BOOT_CHUNK = 500


def derive_run_seed(master_seed: int, condition_index: int, run_index: int) -> int:
    """64-bit seed for one run of one condition.

    Two chained splitmix64 avalanche steps fold the condition and run
    indices into the master seed; each step is a bijection of the running
    state, so distinct index pairs yield distinct seeds (verified by
    collision scans in the tests). Under common-random-numbers pairing the
    caller passes condition_index=0 for every condition.
    """
    if condition_index < 0 or run_index < 0:
        raise ValueError("condition_index and run_index must be >= 0")
    return substream(master_seed, condition_index, run_index)


@dataclass(frozen=True)
class Condition:
    """Overrides applied to the base parameters for one experimental cell."""

    label: str
    schedule: AlphaSchedule | None = None
    k: int | None = None
    w: float | None = None


@dataclass(frozen=True)
class ExperimentSpec:
    """A full batch: base parameters, conditions, replication and pairing."""

    base: DeliberationParams
    conditions: tuple[Condition, ...]
    runs_per_condition: int
    master_seed: int
    pairing: str = "common_random_numbers"
    neighbor_scheme: str = "random"
    dm_agent: int | None = None
    chunk_size: int = 1024

    def __post_init__(self):
        if not self.conditions:
            raise ValueError("spec needs at least one condition")
        if self.runs_per_condition < 1:
            raise ValueError("runs_per_condition must be >= 1")
        if self.pairing not in PAIRINGS:
            raise ValueError(f"unknown pairing {self.pairing!r}")
        if self.neighbor_scheme not in NEIGHBOR_SCHEMES:
            raise ValueError(f"unknown neighbor_scheme {self.neighbor_scheme!r}")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        labels = [c.label for c in self.conditions]
        if len(set(labels)) != len(labels):
            raise ValueError("condition labels must be unique")

    def resolve_params(self, condition: Condition) -> DeliberationParams:
        p = self.base
        if condition.schedule is not None:
            p = replace(p, schedule=condition.schedule)
        if condition.k is not None:
            p = replace(p, k=condition.k)
        if condition.w is not None:
            p = replace(p, divergence_weight=condition.w)
        return p


@dataclass(frozen=True)
class ConditionStats:
    """Aggregates over one condition's runs."""

    label: str
    k: int
    w: float
    alpha_spec: str
    runs: int
    mean_distinct: float
    sd_distinct: float
    ci_low: float
    ci_high: float
    mean_dm_value_normalized: float | None
    mean_consensus_round: float | None


@dataclass(frozen=True)
class ConditionResult:
    condition: Condition
    params: DeliberationParams
    run_seeds: tuple[int, ...]
    summaries: tuple[RunSummary, ...]
    stats: ConditionStats


@dataclass(frozen=True)
class ScheduleComparison:
    """Paired comparison of two schedules on shared run seeds."""

    label_a: str
    label_b: str
    mean_a: float
    mean_b: float
    paired_mean_diff: float
    p_value: float


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    conditions: tuple[ConditionResult, ...]
    comparisons: tuple[ScheduleComparison, ...] = ()

    def by_label(self, label: str) -> ConditionResult:
        for cond in self.conditions:
            if cond.condition.label == label:
                return cond
        raise KeyError(label)


def bootstrap_mean_ci(
    values: Sequence[float],
    n_resamples: int = BOOTSTRAP_RESAMPLES,
    seed: int = 0,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile bootstrap confidence interval for the mean."""
    data = np.asarray(values, dtype=np.float64)
    n = data.size
    if n == 0:
        raise ValueError("bootstrap needs at least one value")
    g = generator(seed)
    means = np.empty(n_resamples)
    done = 0
    while done < n_resamples:
        count = min(_BOOT_CHUNK, n_resamples - done)
        idx = g.integers(0, n, size=(count, n))
        means[done : done + count] = data[idx].mean(axis=1)
        done += count
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [tail, 1.0 - tail])
    return float(lo), float(hi)


def paired_one_sided_pvalue(
    diffs: Sequence[float], n_resamples: int = BOOTSTRAP_RESAMPLES, seed: int = 0
) -> float:
    """Sign-flip bootstrap p-value for H1: mean(diffs) > 0.

    Each resample flips the sign of every run-wise difference independently
    (the null of a symmetric zero-centered difference) and the p-value is
    the fraction of resampled means at least as large as the observed one,
    with the +1 correction so p is never exactly zero.
    """
    data = np.asarray(diffs, dtype=np.float64)
    if data.size == 0:
        raise ValueError("paired test needs at least one difference")
    obs = data.mean()
    g = generator(seed)
    exceed = 0
    done = 0
    while done < n_resamples:
        count = min(_BOOT_CHUNK, n_resamples - done)
        signs = g.integers(0, 2, size=(count, data.size)).astype(np.float64) * 2.0 - 1.0
        exceed += int(((signs * data).mean(axis=1) >= obs).sum())
        done += count
    return (1 + exceed) / (n_resamples + 1)


def _condition_seeds(spec: ExperimentSpec, condition_index: int, start: int, stop: int) -> list[int]:
    ci = 0 if spec.pairing == "common_random_numbers" else condition_index
    return [derive_run_seed(spec.master_seed, ci, r) for r in range(start, stop)]


def _label_seed(master_seed: int, tag: int, label: str) -> int:
    """Seed derived from a condition label, independent of list position."""
    return substream(master_seed, tag, *label.encode("utf-8"))


def _run_chunk(spec: ExperimentSpec, start: int, stop: int) -> dict[int, list[RunSummary]]:
    """Execute runs [start, stop) of every condition; key results by condition.

    Under common-random-numbers pairing, conditions sharing (k, w) also
    share landscapes and peak maps, which are built once per chunk.
    """
    out: dict[int, list[RunSummary]] = {}
    resolved = [spec.resolve_params(c) for c in spec.conditions]
    share_assets = (
        spec.pairing == "common_random_numbers"
        and spec.base.n <= MAX_ENUMERABLE_N
    )
    if not share_assets:
        for ci, params in enumerate(resolved):
            seeds = _condition_seeds(spec, ci, start, stop)
            out[ci] = _guarded(
                lambda: _engine.run_seeded_batch(
                    params, seeds, spec.neighbor_scheme, spec.dm_agent
                ),
                spec.conditions[ci].label,
                seeds,
            )
        return out

    groups: dict[tuple, list[int]] = {}
    for ci, params in enumerate(resolved):
        groups.setdefault((params.k, params.divergence_weight, params.d), []).append(ci)
    seeds = _condition_seeds(spec, 0, start, stop)
    for members in groups.values():
        keep_perceived = spec.dm_agent is not None or any(
            resolved[ci].integration_policy == "self_interested" for ci in members
        )
        assets = _engine.build_table_assets(
            resolved[members[0]], seeds, spec.neighbor_scheme, keep_perceived
        )
        for ci in members:
            out[ci] = _guarded(
                lambda: _engine.summarize_with_assets(
                    resolved[ci], assets, seeds, spec.dm_agent
                ),
                spec.conditions[ci].label,
                seeds,
            )
        del assets
    return out


def _guarded(thunk, label: str, seeds: list[int]) -> list[RunSummary]:
    try:
        return thunk()
    except Exception as exc:
        raise RuntimeError(
            f"batch aborted: condition {label!r} failed on run seeds "
            f"{seeds[0]}..{seeds[-1]} ({len(seeds)} runs): {exc}"
        ) from exc


def _run_chunk_task(args: tuple) -> tuple[int, dict[int, list[RunSummary]]]:
    spec, start, stop = args
    return start, _run_chunk(spec, start, stop)


def run_batch(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Execute every condition of the spec and aggregate per-condition stats.

    ``workers`` > 1 fans chunks of runs out to a process pool; the keyed
    reduction makes the result identical for any worker count.
    """
    chunks = [
        (spec, start, min(start + spec.chunk_size, spec.runs_per_condition))
        for start in range(0, spec.runs_per_condition, spec.chunk_size)
    ]
    partials: dict[int, dict[int, list[RunSummary]]] = {}
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for start, res in pool.map(_run_chunk_task, chunks):
                partials[start] = res
    else:
        for args in chunks:
            start, res = _run_chunk_task(args)
            partials[start] = res

    condition_results = []
    for ci, condition in enumerate(spec.conditions):
        summaries: list[RunSummary] = []
        for start in sorted(partials):
            summaries.extend(partials[start][ci])
        params = spec.resolve_params(condition)
        seeds = tuple(_condition_seeds(spec, ci, 0, spec.runs_per_condition))
        stats = _condition_stats(
            condition.label,
            params,
            summaries,
            boot_seed=_label_seed(spec.master_seed, TAG_BOOTSTRAP, condition.label),
        )
        condition_results.append(
            ConditionResult(
                condition=condition,
                params=params,
                run_seeds=seeds,
                summaries=tuple(summaries),
                stats=stats,
            )
        )
    return ExperimentResult(spec=spec, conditions=tuple(condition_results))


def _condition_stats(
    label: str, params: DeliberationParams, summaries: list[RunSummary], boot_seed: int
) -> ConditionStats:
    counts = np.array([s.distinct_solutions for s in summaries], dtype=np.float64)
    mean = float(counts.mean())
    sd = float(counts.std(ddof=1)) if counts.size > 1 else 0.0
    ci_low, ci_high = bootstrap_mean_ci(counts, seed=boot_seed)
    norms = [s.dm_value_normalized for s in summaries]
    mean_norm = float(np.mean(norms)) if all(v is not None for v in norms) else None
    converged = [s.consensus_round for s in summaries if s.consensus_round is not None]
    mean_cons = float(np.mean(converged)) if converged else None
    return ConditionStats(
        label=label,
        k=params.k,
        w=params.divergence_weight,
        alpha_spec=params.schedule.describe(),
        runs=len(summaries),
        mean_distinct=mean,
        sd_distinct=sd,
        ci_low=ci_low,
        ci_high=ci_high,
        mean_dm_value_normalized=mean_norm,
        mean_consensus_round=mean_cons,
    )


def sweep_alpha(
    base: DeliberationParams,
    alphas: Sequence[float],
    k_values: Sequence[int] | None = None,
    w: float = 0.0,
    runs: int = 1000,
    master_seed: int = 0,
    neighbor_scheme: str = "random",
    dm_agent: int | None = None,
    workers: int = 1,
    chunk_size: int = 1024,
) -> ExperimentResult:
    """One condition per (k, alpha) pair at divergence weight w.

    Common-random-number pairing across the whole grid: run r of every
    condition shares its seed, hence its landscape and initial positions.
    """
    if not alphas:
        raise ValueError("alphas must be nonempty")
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"alpha {a} outside [0, 1]")
    ks = list(k_values) if k_values is not None else [base.k]
    conditions = tuple(
        Condition(
            label=f"k={k},w={float(w)!r},alpha={float(a)!r}",
            schedule=AlphaSchedule.constant(float(a)),
            k=int(k),
            w=float(w),
        )
        for k in ks
        for a in alphas
    )
    spec = ExperimentSpec(
        base=base,
        conditions=conditions,
        runs_per_condition=runs,
        master_seed=master_seed,
        pairing="common_random_numbers",
        neighbor_scheme=neighbor_scheme,
        dm_agent=dm_agent,
        chunk_size=chunk_size,
    )
    return run_batch(spec, workers=workers)


def compare_schedules(
    base: DeliberationParams,
    schedule_a: AlphaSchedule,
    schedule_b: AlphaSchedule,
    runs: int = 1000,
    master_seed: int = 0,
    label_a: str | None = None,
    label_b: str | None = None,
    neighbor_scheme: str = "random",
    workers: int = 1,
    chunk_size: int = 1024,
) -> ExperimentResult:
    """Paired comparison of two alpha schedules on shared run seeds.

    The one-sided significance value tests whether schedule A discovers
    more solutions than schedule B (sign-flip bootstrap over run-wise
    differences).
    """
    if runs < 2:
        raise ValueError("schedule comparison needs at least 2 runs")
    label_a = label_a if label_a is not None else f"A:{schedule_a.describe()}"
    label_b = label_b if label_b is not None else f"B:{schedule_b.describe()}"
    spec = ExperimentSpec(
        base=base,
        conditions=(
            Condition(label=label_a, schedule=schedule_a),
            Condition(label=label_b, schedule=schedule_b),
        ),
        runs_per_condition=runs,
        master_seed=master_seed,
        pairing="common_random_numbers",
        neighbor_scheme=neighbor_scheme,
        chunk_size=chunk_size,
    )
    result = run_batch(spec, workers=workers)
    counts_a = np.array(
        [s.distinct_solutions for s in result.conditions[0].summaries], dtype=np.float64
    )
    counts_b = np.array(
        [s.distinct_solutions for s in result.conditions[1].summaries], dtype=np.float64
    )
    diffs = counts_a - counts_b
    comparison = ScheduleComparison(
        label_a=label_a,
        label_b=label_b,
        mean_a=float(counts_a.mean()),
        mean_b=float(counts_b.mean()),
        paired_mean_diff=float(diffs.mean()),
        p_value=paired_one_sided_pvalue(
            diffs, seed=substream(master_seed, TAG_COMPARISON)
        ),
    )
    return ExperimentResult(
        spec=spec, conditions=result.conditions, comparisons=(comparison,)
    )
