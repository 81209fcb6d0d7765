"""Per-run outcome measures: solution counts, DM payoff, consensus stats."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable

from .landscape import MAX_ENUMERABLE_N, Configuration, NKLandscape, fitness, global_optimum


@dataclass(frozen=True)
class RunSummary:
    """Outcome of one deliberation run.

    dm_value_normalized is the ground-truth value of the DM's pick divided
    by the global optimum's; present only when n permits enumeration.
    """

    distinct_solutions: int
    dm_value: float
    dm_value_normalized: float | None
    consensus_round: int | None
    rounds_executed: int


def distinct_solutions(trace) -> int:
    """Number of unique configurations in the trace's discovered set."""
    return len(trace.discovered)


def summarize_run(
    trace,
    truth: NKLandscape,
    dm_evaluate: Callable[[Configuration], float] | None = None,
) -> RunSummary:
    """Aggregate a trace into a RunSummary.

    The DM evaluator defaults to ground-truth fitness. Normalization uses
    exhaustive enumeration of the optimum and is omitted for n beyond the
    enumeration ceiling.
    """
    from .deliberation import dm_select

    if truth.n != trace.params.n or truth.k != trace.params.k:
        raise ValueError(
            f"truth landscape shape (n={truth.n}, k={truth.k}) does not match trace "
            f"params (n={trace.params.n}, k={trace.params.k})"
        )
    if dm_evaluate is None:
        dm_evaluate = partial(fitness, truth)
    dm_cfg, dm_value = dm_select(trace, dm_evaluate)
    if truth.n <= MAX_ENUMERABLE_N:
        _, opt_value = global_optimum(truth)
        dm_norm = fitness(truth, dm_cfg) / opt_value
    else:
        dm_norm = None
    consensus_round = None
    for rec in trace.rounds:
        if rec.consensus_after:
            consensus_round = rec.round
            break
    return RunSummary(
        distinct_solutions=len(trace.discovered),
        dm_value=dm_value,
        dm_value_normalized=dm_norm,
        consensus_round=consensus_round,
        rounds_executed=len(trace.rounds),
    )
