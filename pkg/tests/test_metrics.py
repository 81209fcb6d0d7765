from functools import partial

import pytest

from nkdelib import (
    AlphaSchedule,
    Configuration,
    DeliberationParams,
    build_beliefs,
    build_nk_landscape,
    distinct_solutions,
    fitness,
    global_optimum,
    run_deliberation,
    summarize_run,
)
from nkdelib.deliberation import DeliberationTrace, RoundRecord


def manual_trace(pre_sets, n, m):
    """Build a trace by hand from per-round pre-position bit strings."""
    params = DeliberationParams(n=n, k=0, m=m, t_max=len(pre_sets), seed=0)
    rounds = []
    discovered = set()
    for t, pres in enumerate(pre_sets, start=1):
        pres = tuple(Configuration.from_string(s) for s in pres)
        discovered.update(pres)
        rounds.append(
            RoundRecord(
                round=t,
                pre_positions=pres,
                proposer=0,
                post_positions=pres,
                alpha_used=0.0,
                consensus_after=len(set(pres)) == 1,
            )
        )
    return DeliberationTrace(
        params=params,
        initial_positions=rounds[0].pre_positions,
        rounds=tuple(rounds),
        terminated_by="round_limit",
        discovered=frozenset(discovered),
    )


class TestDistinctSolutions:
    def test_set_cardinality_by_hand(self):
        trace = manual_trace([["0110", "0110", "1001"]], n=4, m=3)
        assert distinct_solutions(trace) == 2

    def test_all_agents_same_position(self):
        trace = manual_trace([["0110", "0110", "0110"]], n=4, m=3)
        assert distinct_solutions(trace) == 1

    def test_frozen_agents_bounded_by_m(self):
        params = DeliberationParams(
            n=10, k=5, m=5, t_max=50, schedule=AlphaSchedule.constant(0.0),
            stop_on_consensus=False, seed=11,
        )
        beliefs = build_beliefs(10, 5, 5, divergence_weight=0.0, seed=11)
        trace = run_deliberation(params, beliefs)
        assert distinct_solutions(trace) <= 5

    def test_invariant_under_agent_permutation(self):
        a = manual_trace([["0110", "1001", "0001"], ["0110", "0001", "1001"]], n=4, m=3)
        b = manual_trace([["1001", "0001", "0110"], ["0001", "1001", "0110"]], n=4, m=3)
        assert distinct_solutions(a) == distinct_solutions(b)


class TestSummarizeRun:
    def test_k0_run_is_perfectly_normalized(self):
        params = DeliberationParams(n=8, k=0, m=4, t_max=20, seed=13)
        beliefs = build_beliefs(8, 0, 4, divergence_weight=0.0, seed=13)
        trace = run_deliberation(params, beliefs)
        summary = summarize_run(trace, beliefs.truth)
        assert summary.distinct_solutions == 1
        assert summary.dm_value_normalized == 1.0

    def test_consensus_round_equals_rounds_executed(self):
        params = DeliberationParams(
            n=8, k=3, m=4, t_max=200, schedule=AlphaSchedule.constant(0.8), seed=17
        )
        beliefs = build_beliefs(8, 3, 4, divergence_weight=0.0, seed=17)
        trace = run_deliberation(params, beliefs)
        summary = summarize_run(trace, beliefs.truth)
        assert trace.terminated_by == "consensus"
        assert summary.consensus_round == summary.rounds_executed == len(trace.rounds)

    def test_normalization_against_exhaustive_scan(self):
        params = DeliberationParams(
            n=8, k=3, m=3, t_max=30, schedule=AlphaSchedule.constant(0.3), seed=19
        )
        beliefs = build_beliefs(8, 3, 3, divergence_weight=0.0, seed=19)
        trace = run_deliberation(params, beliefs)
        summary = summarize_run(trace, beliefs.truth)
        # independent 256-configuration scan
        best = max(fitness(beliefs.truth, Configuration.from_int(c, 8)) for c in range(256))
        dm_truth = max(fitness(beliefs.truth, c) for c in trace.discovered)
        assert summary.dm_value_normalized == dm_truth / best
        assert summary.dm_value_normalized <= 1.0

    def test_dm_value_is_max_over_discovered(self):
        params = DeliberationParams(
            n=8, k=4, m=4, t_max=40, schedule=AlphaSchedule.constant(0.5), seed=23
        )
        beliefs = build_beliefs(8, 4, 4, divergence_weight=0.0, seed=23)
        trace = run_deliberation(params, beliefs)
        summary = summarize_run(trace, beliefs.truth)
        assert summary.dm_value == max(fitness(beliefs.truth, c) for c in trace.discovered)

    def test_distinct_at_least_one(self):
        params = DeliberationParams(n=6, k=2, m=1, t_max=1, seed=29)
        beliefs = build_beliefs(6, 2, 1, divergence_weight=0.0, seed=29)
        summary = summarize_run(run_deliberation(params, beliefs), beliefs.truth)
        assert summary.distinct_solutions >= 1

    def test_shape_mismatch_errors(self):
        params = DeliberationParams(n=8, k=3, m=2, t_max=5, seed=31)
        beliefs = build_beliefs(8, 3, 2, divergence_weight=0.0, seed=31)
        trace = run_deliberation(params, beliefs)
        wrong = build_nk_landscape(8, 4, "random", seed=31)
        with pytest.raises(ValueError):
            summarize_run(trace, wrong)

    def test_custom_dm_evaluator(self):
        from nkdelib import perceived_fitness

        params = DeliberationParams(
            n=8, k=3, m=3, t_max=30, schedule=AlphaSchedule.constant(0.4),
            divergence_weight=0.7, seed=37,
        )
        beliefs = build_beliefs(8, 3, 3, divergence_weight=0.7, seed=37)
        trace = run_deliberation(params, beliefs)
        summary = summarize_run(trace, beliefs.truth, partial(perceived_fitness, beliefs, 0))
        assert summary.dm_value == max(perceived_fitness(beliefs, 0, c) for c in trace.discovered)
        # normalization still uses ground truth of the chosen configuration
        assert summary.dm_value_normalized <= 1.0
