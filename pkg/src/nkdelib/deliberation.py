"""The two-phase deliberation loop and its building blocks.

Each round, every agent climbs to a local peak of its own perceived
landscape (compartmentalized search), then one randomly chosen proposer
broadcasts its peak and every other agent adopts each differing bit
independently with probability alpha (integration). The run stops at
consensus or after t_max rounds; a decision maker then picks the best
configuration among all peaks discovered along the way.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .landscape import BeliefStructure, Configuration

INTEGRATION_POLICIES = ("unconditional", "self_interested")
SCHEDULE_KINDS = ("constant", "linear", "piecewise")


@dataclass(frozen=True)
class AlphaSchedule:
    """Maps a round index to the integration rate alpha in [0, 1].

    constant: always ``value``. linear: from ``start`` at round 1 to ``end``
    at round t_max. piecewise: step function over (round, value) breakpoints,
    the first of which must sit at round 1.
    """

    kind: str
    value: float = 0.5
    start: float = 0.0
    end: float = 1.0
    breakpoints: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "constant":
            _check_alpha(self.value)
        elif self.kind == "linear":
            _check_alpha(self.start)
            _check_alpha(self.end)
        else:
            if not self.breakpoints:
                raise ValueError("piecewise schedule needs at least one breakpoint")
            rounds = [r for r, _ in self.breakpoints]
            if rounds[0] != 1:
                raise ValueError("piecewise schedule must start with a breakpoint at round 1")
            if any(b >= a for b, a in zip(rounds, rounds[1:])):
                raise ValueError("piecewise breakpoint rounds must be strictly increasing")
            for _, v in self.breakpoints:
                _check_alpha(v)

    @classmethod
    def constant(cls, value: float) -> "AlphaSchedule":
        return cls(kind="constant", value=value)

    @classmethod
    def linear(cls, start: float, end: float) -> "AlphaSchedule":
        return cls(kind="linear", start=start, end=end)

    @classmethod
    def piecewise(cls, breakpoints: Sequence[tuple[int, float]]) -> "AlphaSchedule":
        return cls(kind="piecewise", breakpoints=tuple((int(r), float(v)) for r, v in breakpoints))

    def describe(self) -> str:
        """Stable text form used in condition labels and CSV columns."""
        if self.kind == "constant":
            return repr(float(self.value))
        if self.kind == "linear":
            return f"linear({float(self.start)!r},{float(self.end)!r})"
        parts = ",".join(f"{r}:{float(v)!r}" for r, v in self.breakpoints)
        return f"piecewise({parts})"


def _check_alpha(a: float) -> None:
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {a}")


def alpha_at(schedule: AlphaSchedule, t: int, t_max: int) -> float:
    """Alpha emitted by the schedule at round t of t_max."""
    if not 1 <= t <= t_max:
        raise ValueError(f"round t={t} out of range [1, {t_max}]")
    if schedule.kind == "constant":
        return float(schedule.value)
    if schedule.kind == "linear":
        if t_max == 1:
            return float(schedule.start)
        return float(schedule.start + (schedule.end - schedule.start) * (t - 1) / (t_max - 1))
    current = schedule.breakpoints[0][1]
    for r, v in schedule.breakpoints:
        if r <= t:
            current = v
        else:
            break
    return float(current)


@dataclass(frozen=True)
class DeliberationParams:
    """Full parameterization of one deliberation run."""

    n: int
    k: int
    m: int
    t_max: int
    d: int = 1
    schedule: AlphaSchedule = AlphaSchedule.constant(0.5)
    divergence_weight: float = 0.0
    integration_policy: str = "unconditional"
    stop_on_consensus: bool = True
    count_initial_positions: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.k <= self.n - 1:
            raise ValueError(f"k must satisfy 0 <= k <= n-1, got k={self.k} n={self.n}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if not 1 <= self.d <= self.n:
            raise ValueError(f"d must be in [1, n], got {self.d}")
        if not 0.0 <= self.divergence_weight <= 1.0:
            raise ValueError(f"divergence_weight must be in [0, 1]: {self.divergence_weight}")
        if self.integration_policy not in INTEGRATION_POLICIES:
            raise ValueError(f"unknown integration_policy {self.integration_policy!r}")


@dataclass(frozen=True)
class AgentState:
    """An agent's identity and current position."""

    id: int
    position: Configuration


@dataclass(frozen=True)
class RoundRecord:
    """One round: post-climb peaks, the proposer, and post-integration positions."""

    round: int
    pre_positions: tuple[Configuration, ...]
    proposer: int
    post_positions: tuple[Configuration, ...]
    alpha_used: float
    consensus_after: bool


@dataclass(frozen=True)
class DeliberationTrace:
    """Complete record of a run, including the discovered-solution set."""

    params: DeliberationParams
    initial_positions: tuple[Configuration, ...]
    rounds: tuple[RoundRecord, ...]
    terminated_by: str  # "consensus" | "round_limit"
    discovered: frozenset[Configuration]


def neighborhood(x: Configuration, d: int) -> set[Configuration]:
    """All configurations within Hamming distance 1..d of x (x excluded)."""
    n = len(x)
    if not 1 <= d <= n:
        raise ValueError(f"d must be in [1, n], got {d}")
    out = set()
    for flips in range(1, d + 1):
        for positions in combinations(range(n), flips):
            bits = list(x.bits)
            for p in positions:
                bits[p] = 1 - bits[p]
            out.add(Configuration(tuple(bits)))
    return out


def local_search_path(
    start: Configuration, evaluate: Callable[[Configuration], float], d: int = 1
) -> list[Configuration]:
    """Steepest-ascent path from start to a local peak, inclusive.

    Each step moves to the best strictly improving configuration within
    radius d; ties break toward the lexicographically smallest bits.
    """
    path = [start]
    value = evaluate(start)
    while True:
        current = path[-1]
        best_cfg = None
        best_val = value
        for nb in neighborhood(current, d):
            v = evaluate(nb)
            if v > best_val or (v == best_val and best_cfg is not None and nb < best_cfg):
                best_cfg = nb
                best_val = v
        if best_cfg is None:
            return path
        path.append(best_cfg)
        value = best_val


def local_search(
    start: Configuration, evaluate: Callable[[Configuration], float], d: int = 1
) -> Configuration:
    """Climb from start to a local peak of ``evaluate`` within radius d."""
    return local_search_path(start, evaluate, d)[-1]


def integrate(
    current: Configuration,
    proposal: Configuration,
    alpha: float,
    policy: str = "unconditional",
    perceived: Callable[[Configuration], float] | None = None,
    rng: np.random.Generator | None = None,
) -> Configuration:
    """Move ``current`` toward ``proposal`` by adopting differing bits w.p. alpha.

    Bits already equal never change, so the expected post-integration bit is
    (1-alpha) * current + alpha * proposal componentwise. Under the
    self_interested policy the move happens only if the proposal's perceived
    value strictly exceeds the current position's. alpha=0 and alpha=1 are
    exact (identity / full copy) and consume no random draws.
    """
    _check_alpha(alpha)
    if len(current) != len(proposal):
        raise ValueError(
            f"length mismatch: current has {len(current)} bits, proposal {len(proposal)}"
        )
    if policy not in INTEGRATION_POLICIES:
        raise ValueError(f"unknown integration policy {policy!r}")
    if policy == "self_interested":
        if perceived is None:
            raise ValueError("self_interested integration needs a perceived-fitness callable")
        if not perceived(proposal) > perceived(current):
            return current
    if alpha == 0.0:
        return current
    if alpha == 1.0:
        return proposal
    if rng is None:
        raise ValueError("interior alpha needs an rng for the adoption draws")
    u = rng.random(len(current))
    bits = tuple(
        p if (c != p and u[i] < alpha) else c
        for i, (c, p) in enumerate(zip(current.bits, proposal.bits))
    )
    return Configuration(bits)


def select_proposer(m: int, rng: np.random.Generator) -> int:
    """Uniformly random proposer index in {0, ..., m-1}."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return int(rng.integers(0, m))


def is_consensus(positions: Sequence[Configuration]) -> bool:
    """True iff all positions are bit-identical."""
    if len(positions) == 0:
        raise ValueError("consensus check needs at least one position")
    first = positions[0]
    return all(p == first for p in positions[1:])


def run_deliberation(params: DeliberationParams, beliefs: BeliefStructure) -> DeliberationTrace:
    """Execute one full deliberation run and return its trace.

    All randomness (initial positions, proposer draws, adoption draws)
    derives from ``params.seed``; identical inputs give identical traces.
    """
    if beliefs.truth.n != params.n or beliefs.truth.k != params.k:
        raise ValueError(
            f"belief landscape shape (n={beliefs.truth.n}, k={beliefs.truth.k}) does not "
            f"match params (n={params.n}, k={params.k})"
        )
    if beliefs.m != params.m:
        raise ValueError(f"beliefs hold {beliefs.m} agents, params expect {params.m}")
    if beliefs.divergence_weight != params.divergence_weight:
        raise ValueError(
            f"divergence_weight mismatch: beliefs {beliefs.divergence_weight}, "
            f"params {params.divergence_weight}"
        )
    from . import _engine

    return _engine.run_single(params, beliefs)


def dm_select(
    trace: DeliberationTrace, dm_evaluate: Callable[[Configuration], float]
) -> tuple[Configuration, float]:
    """Best discovered configuration under the DM's evaluator.

    Ties break toward the lexicographically smallest configuration.
    """
    if not trace.discovered:
        raise ValueError("trace has an empty discovered set")
    best_cfg = None
    best_val = -np.inf
    for cfg in sorted(trace.discovered):
        v = dm_evaluate(cfg)
        if v > best_val:
            best_cfg, best_val = cfg, v
    return best_cfg, float(best_val)


def write_trace_csv(
    trace: DeliberationTrace,
    beliefs: BeliefStructure,
    path,
    header_lines: tuple[str, ...] = (),
) -> None:
    """Export a trace as CSV: one row per (round, agent).

    Positions are bit strings (most significant component first); fitness
    columns carry the owner's perceived value and the ground-truth value of
    the pre-integration peak at full decimal precision.
    """
    from .landscape import fitness, perceived_fitness

    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("round,alpha,proposer,agent,pre_bits,pre_perceived,pre_truth,post_bits\n")
        for rec in trace.rounds:
            for agent, (pre, post) in enumerate(zip(rec.pre_positions, rec.post_positions)):
                fh.write(
                    f"{rec.round},{rec.alpha_used!r},{rec.proposer},{agent},"
                    f"{pre.to_string()},{perceived_fitness(beliefs, agent, pre)!r},"
                    f"{fitness(beliefs.truth, pre)!r},{post.to_string()}\n"
                )
