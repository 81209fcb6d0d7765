"""Deliberation engine internals (vectorized table path + generic fallback).

For n <= 20 the engine precomputes, per run and agent, the full perceived
fitness vector over all 2^n configurations and a steepest-ascent peak map
(the fixed point each configuration climbs to), so a round is a handful of
numpy gathers across all runs of a batch simultaneously. For larger n a
generic object-level path performs the same algorithm directly.

Random stream contract (shared by both paths and by single runs vs.
batches, so results are bit-identical everywhere):

  initial positions  substream(seed, TAG_INIT):     one draw of
                     integers(0, 2, size=(m, n)) bits, agents in order,
                     most significant component first;
  proposer choices   substream(seed, TAG_PROPOSER): integers(0, m) in
                     fixed blocks of PROPOSER_BLOCK rounds, one per round;
  adoption draws     substream(seed, TAG_ADOPT):    uniforms in fixed
                     blocks of ADOPT_BLOCK integration rounds, shaped
                     (ADOPT_BLOCK, m-1, n); a round consumes one
                     (m-1, n) slice iff its alpha lies strictly inside
                     (0, 1) and m > 1; non-proposers take rows in
                     ascending agent order; agent j adopts differing bit
                     i iff u[row_j, i] < alpha.

Block sizes are constants of the reproducibility contract.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .deliberation import (
    Configuration,
    DeliberationParams,
    DeliberationTrace,
    RoundRecord,
    alpha_at,
    local_search,
)
from .landscape import (
    MAX_ENUMERABLE_N,
    BeliefStructure,
    build_beliefs,
    build_nk_landscape,
    fitness_table,
    perceived_fitness,
)
from .metrics import RunSummary, summarize_run
from .seeding import TAG_ADOPT, TAG_INIT, TAG_LANDSCAPE, TAG_PROPOSER, generator, substream

PROPOSER_BLOCK = 1024
ADOPT_BLOCK = 64

# Rough per-batch memory ceiling for the table path; larger batches are
# processed in slices.
_TABLE_BYTES_BUDGET = 1 << 30


def _neighbor_index(n: int, d: int) -> np.ndarray:
    """(2^n, M) matrix: column j holds each code's j-th neighbor within d."""
    codes = np.arange(1 << n, dtype=np.int64)
    masks = np.array(
        [m for m in range(1, 1 << n) if bin(m).count("1") <= d], dtype=np.int64
    )
    return (codes[:, None] ^ masks[None, :]).astype(np.int32)


def _steepest_peak_map(fit: np.ndarray, nbr_idx: np.ndarray) -> np.ndarray:
    """Map each configuration to the peak its steepest-ascent climb reaches.

    One step goes to the best strictly improving neighbor; among equal-value
    neighbors the smallest code (lexicographically smallest bits) wins.
    """
    size = fit.shape[0]
    nb_vals = fit[nbr_idx]
    best_val = nb_vals.max(axis=1)
    cand = np.where(nb_vals == best_val[:, None], nbr_idx, size)
    best_nb = cand.min(axis=1)
    succ = np.where(best_val > fit, best_nb, np.arange(size, dtype=np.int64))
    cur = succ.astype(np.int32)
    while True:
        nxt = cur[cur]
        if np.array_equal(nxt, cur):
            return cur
        cur = nxt


def _belief_tables(beliefs: BeliefStructure) -> tuple[np.ndarray, np.ndarray, bool]:
    """(truth table, per-agent perceived tables, aligned flag) for one run.

    With w=0 all agents share the truth table (shape (1, 2^n)); otherwise
    perceived tables are the convex blend, one row per agent.
    """
    truth = fitness_table(beliefs.truth)
    w = beliefs.divergence_weight
    if w == 0.0:
        return truth, truth[None, :], True
    per = np.stack(
        [
            (1.0 - w) * truth + w * fitness_table(div)
            for div in beliefs.divergence_landscapes
        ]
    )
    return truth, per, False


def _simulate_table(
    params: DeliberationParams,
    peak: np.ndarray,
    perceived: np.ndarray | None,
    sim_seeds: list[int],
    record_trace: bool,
) -> dict:
    """Run the round loop for a batch of runs sharing one parameterization.

    peak: (R, g, 2^n) peak maps with g=1 when all agents share beliefs.
    perceived: (R, m, 2^n), required only for the self_interested policy.
    """
    n, m, t_max = params.n, params.m, params.t_max
    size = 1 << n
    runs = len(sim_seeds)
    self_interested = params.integration_policy == "self_interested"
    if self_interested and perceived is None:
        raise ValueError("self_interested policy needs perceived fitness tables")

    agent_axis = np.zeros(m, dtype=np.int64) if peak.shape[1] == 1 else np.arange(m)
    agent_ids = np.arange(m)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bit_weights = np.int64(1) << shifts

    init_gens = [generator(s, TAG_INIT) for s in sim_seeds]
    prop_gens = [generator(s, TAG_PROPOSER) for s in sim_seeds]
    adopt_gens = [generator(s, TAG_ADOPT) for s in sim_seeds]

    init_bits = np.stack([g.integers(0, 2, size=(m, n), dtype=np.uint8) for g in init_gens])
    pos = (init_bits.astype(np.int64) @ bit_weights).astype(np.int32)
    init_codes = pos.copy()

    row_ids = np.arange(runs)
    discovered = np.zeros((runs, size), dtype=bool)
    if params.count_initial_positions:
        discovered[row_ids[:, None], pos] = True

    consensus_round = np.full(runs, -1, dtype=np.int64)
    rounds_exec = np.full(runs, t_max, dtype=np.int64)
    stopped = np.zeros(runs, dtype=bool)
    active = row_ids.copy()

    prop_block = np.zeros((runs, PROPOSER_BLOCK), dtype=np.int32)
    adopt_block = None
    integ_round = 0

    trace_rounds: list | None = [] if record_trace else None

    for t in range(1, t_max + 1):
        if active.size == 0:
            break
        a = active
        n_active = a.size
        ar = np.arange(n_active)

        pre = peak[a[:, None], agent_axis[None, :], pos[a]]
        discovered[a[:, None], pre] = True

        if (t - 1) % PROPOSER_BLOCK == 0:
            for r in a:
                prop_block[r] = prop_gens[r].integers(0, m, size=PROPOSER_BLOCK)
        p = prop_block[a, (t - 1) % PROPOSER_BLOCK]
        prop_pos = pre[ar, p]

        alpha = alpha_at(params.schedule, t, t_max)
        if m == 1 or alpha == 0.0:
            post = pre
        else:
            if self_interested:
                cur_val = perceived[a[:, None], agent_ids[None, :], pre]
                prop_val = perceived[a[:, None], agent_ids[None, :], prop_pos[:, None]]
                gate = prop_val > cur_val
            if alpha == 1.0:
                post = np.broadcast_to(prop_pos[:, None], (n_active, m)).copy()
                if self_interested:
                    post = np.where(gate, post, pre)
            else:
                if integ_round % ADOPT_BLOCK == 0:
                    if adopt_block is None:
                        adopt_block = np.zeros((runs, ADOPT_BLOCK, m - 1, n))
                    for r in a:
                        adopt_block[r] = adopt_gens[r].random((ADOPT_BLOCK, m - 1, n))
                u = adopt_block[a, integ_round % ADOPT_BLOCK]
                integ_round += 1
                row = agent_ids[None, :] - (agent_ids[None, :] > p[:, None])
                u_full = u[ar[:, None], np.minimum(row, m - 2)]
                diff_bits = (
                    ((pre ^ prop_pos[:, None])[:, :, None] >> shifts[None, None, :]) & 1
                ).astype(bool)
                adopt = diff_bits & (u_full < alpha)
                adopt[ar, p] = False
                if self_interested:
                    adopt &= gate[:, :, None]
                flip = adopt.astype(np.int64) @ bit_weights
                post = (pre ^ flip).astype(np.int32)

        cons = np.all(post == post[:, :1], axis=1)
        pos[a] = post

        if record_trace:
            trace_rounds.append(
                (t, pre[0].copy(), int(p[0]), post[0].copy(), alpha, bool(cons[0]))
            )

        newly = cons & (consensus_round[a] == -1)
        consensus_round[a[newly]] = t
        if params.stop_on_consensus:
            rounds_exec[a[cons]] = t
            stopped[a[cons]] = True
            active = a[~cons]

    return {
        "init_codes": init_codes,
        "discovered": discovered,
        "consensus_round": consensus_round,
        "rounds_executed": rounds_exec,
        "stopped_by_consensus": stopped,
        "trace_rounds": trace_rounds,
    }


def run_single(params: DeliberationParams, beliefs: BeliefStructure) -> DeliberationTrace:
    """One fully traced run; table path when enumerable, generic otherwise."""
    if params.n > MAX_ENUMERABLE_N:
        return _run_single_direct(params, beliefs)
    _, perceived, aligned = _belief_tables(beliefs)
    nbr_idx = _neighbor_index(params.n, params.d)
    groups = 1 if aligned else params.m
    peak = np.stack([_steepest_peak_map(perceived[g], nbr_idx) for g in range(groups)])
    need_perceived = params.integration_policy == "self_interested"
    per = None
    if need_perceived:
        per = perceived if not aligned else np.repeat(perceived, params.m, axis=0)
        per = per[None, :, :]
    out = _simulate_table(params, peak[None, :, :], per, [params.seed], record_trace=True)
    return _assemble_trace(params, out)


def _assemble_trace(params: DeliberationParams, out: dict) -> DeliberationTrace:
    n = params.n
    initial = tuple(
        Configuration.from_int(int(c), n) for c in out["init_codes"][0]
    )
    rounds = []
    for t, pre, proposer, post, alpha, cons in out["trace_rounds"]:
        rounds.append(
            RoundRecord(
                round=t,
                pre_positions=tuple(Configuration.from_int(int(c), n) for c in pre),
                proposer=proposer,
                post_positions=tuple(Configuration.from_int(int(c), n) for c in post),
                alpha_used=alpha,
                consensus_after=cons,
            )
        )
    discovered = frozenset(
        Configuration.from_int(int(c), n) for c in np.flatnonzero(out["discovered"][0])
    )
    terminated = "consensus" if bool(out["stopped_by_consensus"][0]) else "round_limit"
    return DeliberationTrace(
        params=params,
        initial_positions=initial,
        rounds=tuple(rounds),
        terminated_by=terminated,
        discovered=discovered,
    )


def _run_single_direct(params: DeliberationParams, beliefs: BeliefStructure) -> DeliberationTrace:
    """Object-level fallback for n beyond the table ceiling.

    Follows the exact stream contract above, so for enumerable n it yields
    the same trace as the table path (cross-checked in tests).
    """
    n, m, t_max = params.n, params.m, params.t_max

    caches: list[dict[Configuration, float]] = [dict() for _ in range(m)]

    def make_eval(agent: int):
        cache = caches[agent]

        def ev(cfg: Configuration) -> float:
            v = cache.get(cfg)
            if v is None:
                v = perceived_fitness(beliefs, agent, cfg)
                cache[cfg] = v
            return v

        return ev

    evals = [make_eval(i) for i in range(m)]
    peak_memo: list[dict[Configuration, Configuration]] = [dict() for _ in range(m)]

    def climb(agent: int, cfg: Configuration) -> Configuration:
        hit = peak_memo[agent].get(cfg)
        if hit is None:
            hit = local_search(cfg, evals[agent], params.d)
            peak_memo[agent][cfg] = hit
        return hit

    init_gen = generator(params.seed, TAG_INIT)
    prop_gen = generator(params.seed, TAG_PROPOSER)
    adopt_gen = generator(params.seed, TAG_ADOPT)

    init_bits = init_gen.integers(0, 2, size=(m, n), dtype=np.uint8)
    positions = [Configuration.from_bits(row) for row in init_bits]
    initial = tuple(positions)

    discovered: set[Configuration] = set()
    if params.count_initial_positions:
        discovered.update(positions)

    prop_block: np.ndarray | None = None
    adopt_block: np.ndarray | None = None
    integ_round = 0
    rounds: list[RoundRecord] = []
    terminated = "round_limit"
    self_interested = params.integration_policy == "self_interested"

    for t in range(1, t_max + 1):
        pre = [climb(i, positions[i]) for i in range(m)]
        discovered.update(pre)

        if (t - 1) % PROPOSER_BLOCK == 0:
            prop_block = prop_gen.integers(0, m, size=PROPOSER_BLOCK)
        proposer = int(prop_block[(t - 1) % PROPOSER_BLOCK])
        proposal = pre[proposer]

        alpha = alpha_at(params.schedule, t, t_max)
        if m == 1 or alpha == 0.0:
            post = list(pre)
        else:
            u_round = None
            if 0.0 < alpha < 1.0:
                if integ_round % ADOPT_BLOCK == 0:
                    adopt_block = adopt_gen.random((ADOPT_BLOCK, m - 1, n))
                u_round = adopt_block[integ_round % ADOPT_BLOCK]
                integ_round += 1
            post = []
            for agent in range(m):
                if agent == proposer:
                    post.append(pre[agent])
                    continue
                cur = pre[agent]
                if self_interested and not evals[agent](proposal) > evals[agent](cur):
                    post.append(cur)
                    continue
                if alpha == 1.0:
                    post.append(proposal)
                    continue
                u = u_round[agent - (1 if agent > proposer else 0)]
                bits = tuple(
                    pb if (cb != pb and u[i] < alpha) else cb
                    for i, (cb, pb) in enumerate(zip(cur.bits, proposal.bits))
                )
                post.append(Configuration(bits))

        cons = all(c == post[0] for c in post[1:])
        positions = post
        rounds.append(
            RoundRecord(
                round=t,
                pre_positions=tuple(pre),
                proposer=proposer,
                post_positions=tuple(post),
                alpha_used=alpha,
                consensus_after=cons,
            )
        )
        if params.stop_on_consensus and cons:
            terminated = "consensus"
            break

    return DeliberationTrace(
        params=params,
        initial_positions=initial,
        rounds=tuple(rounds),
        terminated_by=terminated,
        discovered=frozenset(discovered),
    )


class TableAssets:
    """Per-run landscape tables and peak maps shared across conditions.

    Valid for any condition with the same (n, k, m, d, divergence_weight,
    neighbor_scheme) and the same run seeds; alpha schedules and policies
    may differ.
    """

    def __init__(self, peak: np.ndarray, perceived: np.ndarray | None, truth_fit: np.ndarray):
        self.peak = peak  # (R, g, 2^n) int32, g=1 when beliefs are aligned
        self.perceived = perceived  # (R, m, 2^n) or None
        self.truth_fit = truth_fit  # (R, 2^n)


def build_table_assets(
    params: DeliberationParams,
    run_seeds: list[int],
    neighbor_scheme: str = "random",
    keep_perceived: bool = False,
) -> TableAssets:
    """Build per-run fitness tables and steepest-ascent peak maps.

    Per run seed, the truth landscape comes from substream(seed,
    TAG_LANDSCAPE) and divergence landscapes from substream(seed,
    TAG_DIVERGENCE, agent), matching ``build_beliefs``.
    """
    n, m = params.n, params.m
    size = 1 << n
    runs = len(run_seeds)
    w = params.divergence_weight
    groups = 1 if w == 0.0 else m
    keep_perceived = keep_perceived or params.integration_policy == "self_interested"
    nbr_idx = _neighbor_index(n, params.d)

    truth_fit = np.empty((runs, size))
    peak = np.empty((runs, groups, size), dtype=np.int32)
    perceived_all = np.empty((runs, m, size)) if keep_perceived else None
    for r, seed in enumerate(run_seeds):
        if w == 0.0:
            truth = build_nk_landscape(
                n, params.k, neighbor_scheme, substream(seed, TAG_LANDSCAPE)
            )
            tf = fitness_table(truth)
            per = tf[None, :]
        else:
            beliefs = _beliefs_from_seed(params, seed, neighbor_scheme)
            tf, per, _ = _belief_tables(beliefs)
        truth_fit[r] = tf
        for g in range(groups):
            peak[r, g] = _steepest_peak_map(per[g], nbr_idx)
        if keep_perceived:
            perceived_all[r] = per if per.shape[0] == m else np.repeat(per, m, axis=0)
    return TableAssets(peak=peak, perceived=perceived_all, truth_fit=truth_fit)


def summarize_with_assets(
    params: DeliberationParams,
    assets: TableAssets,
    run_seeds: list[int],
    dm_agent: int | None = None,
) -> list[RunSummary]:
    """Simulate one condition on prebuilt assets and summarize each run."""
    if params.integration_policy == "self_interested" and assets.perceived is None:
        raise ValueError("assets lack perceived tables needed by self_interested policy")
    out = _simulate_table(
        params, assets.peak, assets.perceived, list(run_seeds), record_trace=False
    )
    runs = len(run_seeds)
    truth_fit = assets.truth_fit
    if dm_agent is None or assets.peak.shape[1] == 1:
        # Aligned beliefs make every agent's perceived fitness the truth.
        dm_fit = truth_fit
    elif assets.perceived is None:
        raise ValueError("assets lack perceived tables needed for an agent DM evaluator")
    else:
        dm_fit = assets.perceived[:, dm_agent, :]
    truth_max = truth_fit.max(axis=1)
    row_ids = np.arange(runs)
    masked = np.where(out["discovered"], dm_fit, -1.0)
    dm_code = masked.argmax(axis=1)
    dm_value = dm_fit[row_ids, dm_code]
    dm_norm = truth_fit[row_ids, dm_code] / truth_max
    distinct = out["discovered"].sum(axis=1)

    summaries = []
    for r in range(runs):
        cr = int(out["consensus_round"][r])
        summaries.append(
            RunSummary(
                distinct_solutions=int(distinct[r]),
                dm_value=float(dm_value[r]),
                dm_value_normalized=float(dm_norm[r]),
                consensus_round=cr if cr >= 0 else None,
                rounds_executed=int(out["rounds_executed"][r]),
            )
        )
    return summaries


def run_seeded_batch(
    params: DeliberationParams,
    run_seeds: list[int],
    neighbor_scheme: str = "random",
    dm_agent: int | None = None,
) -> list[RunSummary]:
    """Run one condition over many run seeds and summarize each run.

    Equivalent to ``run_deliberation`` + ``summarize_run`` per seed with
    params.seed set to the run seed, but batched. Falls back to the
    object-level path beyond the table ceiling.
    """
    if dm_agent is not None and not 0 <= dm_agent < params.m:
        raise ValueError(f"dm_agent {dm_agent} out of range for m={params.m}")
    if params.n > MAX_ENUMERABLE_N:
        return _batch_direct(params, run_seeds, neighbor_scheme, dm_agent)

    size = 1 << params.n
    groups = 1 if params.divergence_weight == 0.0 else params.m
    keep_perceived = params.integration_policy == "self_interested" or (
        dm_agent is not None and groups > 1
    )
    bytes_per_run = size * (8 + 1 + 4 * groups + (8 * params.m if keep_perceived else 0))
    bytes_per_run += ADOPT_BLOCK * max(params.m - 1, 1) * params.n * 8
    max_runs = max(1, _TABLE_BYTES_BUDGET // max(bytes_per_run, 1))

    summaries: list[RunSummary] = []
    for start in range(0, len(run_seeds), max_runs):
        chunk = list(run_seeds[start : start + max_runs])
        assets = build_table_assets(params, chunk, neighbor_scheme, keep_perceived)
        summaries.extend(summarize_with_assets(params, assets, chunk, dm_agent))
    return summaries


def _beliefs_from_seed(
    params: DeliberationParams, seed: int, neighbor_scheme: str
) -> BeliefStructure:
    return build_beliefs(
        params.n,
        params.k,
        params.m,
        params.divergence_weight,
        neighbor_scheme,
        seed,
    )


def _batch_direct(
    params: DeliberationParams,
    run_seeds: list[int],
    neighbor_scheme: str,
    dm_agent: int | None,
) -> list[RunSummary]:
    summaries = []
    for seed in run_seeds:
        beliefs = _beliefs_from_seed(params, seed, neighbor_scheme)
        trace = _run_single_direct(replace(params, seed=seed), beliefs)
        if dm_agent is None:
            dm_eval = None
        else:
            dm_eval = lambda cfg, b=beliefs, a=dm_agent: perceived_fitness(b, a, cfg)
        summaries.append(summarize_run(trace, beliefs.truth, dm_eval))
    return summaries
