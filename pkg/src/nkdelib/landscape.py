"""NK fitness landscapes and per-agent belief structures.

A landscape assigns each length-n binary configuration the mean of n
component contributions; component i's contribution is looked up in a
table indexed by the joint state of bit i and its k neighbor bits. K=0
gives a single-peaked (separable) landscape; larger k adds ruggedness.

Agent beliefs blend the ground-truth landscape with an agent-specific
divergence landscape: perceived = (1-w) * truth + w * divergence. At
w=0 every agent evaluates exactly the ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .seeding import TAG_DIVERGENCE, TAG_LANDSCAPE, generator, substream

# Exhaustive operations (global_optimum, enumerate_local_peaks) refuse to
# scan more than 2^20 configurations.
MAX_ENUMERABLE_N = 20

NEIGHBOR_SCHEMES = ("random", "adjacent")


@dataclass(frozen=True, order=True)
class Configuration:
    """A position on the landscape: a fixed-length vector of 0/1 bits.

    Bit 0 is the most significant bit in the integer encoding, so
    lexicographic order on ``bits`` equals numeric order on ``to_int()``.
    """

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) == 0:
            raise ValueError("configuration needs at least one component")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"configuration bits must be 0 or 1: {self.bits!r}")

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "Configuration":
        return cls(tuple(int(b) for b in bits))

    @classmethod
    def from_string(cls, s: str) -> "Configuration":
        return cls(tuple(int(c) for c in s))

    @classmethod
    def from_int(cls, code: int, n: int) -> "Configuration":
        if not 0 <= code < (1 << n):
            raise ValueError(f"code {code} out of range for n={n}")
        return cls(tuple((code >> (n - 1 - i)) & 1 for i in range(n)))

    def to_int(self) -> int:
        code = 0
        for b in self.bits:
            code = (code << 1) | b
        return code

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True, eq=False)
class NKLandscape:
    """An NK landscape: neighbor lists plus per-component contribution tables.

    ``contribution_tables`` has shape (n, 2^(k+1)); row i is indexed by the
    joint state of (bit i, neighbor bits of i) packed most-significant-first,
    i.e. index = bit_i * 2^k + nb_1 * 2^(k-1) + ... + nb_k. Entries lie in
    [0, 1), so every fitness value does too.
    """

    n: int
    k: int
    neighbor_map: tuple[tuple[int, ...], ...]
    contribution_tables: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.k <= self.n - 1:
            raise ValueError(f"k must satisfy 0 <= k <= n-1, got k={self.k} n={self.n}")
        if len(self.neighbor_map) != self.n:
            raise ValueError("neighbor_map must have one entry per component")
        for i, nbrs in enumerate(self.neighbor_map):
            if len(nbrs) != self.k or len(set(nbrs)) != self.k:
                raise ValueError(f"component {i}: expected {self.k} distinct neighbors")
            if i in nbrs or any(not 0 <= j < self.n for j in nbrs):
                raise ValueError(f"component {i}: invalid neighbor indices {nbrs}")
        tables = np.asarray(self.contribution_tables, dtype=np.float64)
        if tables.shape != (self.n, 1 << (self.k + 1)):
            raise ValueError(
                f"contribution_tables must have shape {(self.n, 1 << (self.k + 1))}, "
                f"got {tables.shape}"
            )
        if np.any(tables < 0.0) or np.any(tables >= 1.0):
            raise ValueError("contribution table entries must lie in [0, 1)")
        tables.setflags(write=False)
        object.__setattr__(self, "contribution_tables", tables)


@dataclass(frozen=True, eq=False)
class BeliefStructure:
    """Ground truth plus one divergence landscape per agent.

    ``divergence_weight`` (w) tunes how far perceived payoffs deviate from
    the truth: w=0 is full alignment, w=1 full divergence.
    """

    truth: NKLandscape
    divergence_landscapes: tuple[NKLandscape, ...]
    divergence_weight: float

    def __post_init__(self):
        if not 0.0 <= self.divergence_weight <= 1.0:
            raise ValueError(f"divergence_weight must be in [0, 1]: {self.divergence_weight}")
        if len(self.divergence_landscapes) == 0:
            raise ValueError("need at least one divergence landscape (one per agent)")
        for i, land in enumerate(self.divergence_landscapes):
            if land.n != self.truth.n or land.k != self.truth.k:
                raise ValueError(
                    f"divergence landscape {i} has shape (n={land.n}, k={land.k}), "
                    f"truth has (n={self.truth.n}, k={self.truth.k})"
                )

    @property
    def m(self) -> int:
        return len(self.divergence_landscapes)


def build_nk_landscape(
    n: int, k: int, neighbor_scheme: str = "random", seed: int = 0
) -> NKLandscape:
    """Generate a seeded NK landscape.

    Reproducibility contract: a single PCG64 stream seeded with ``seed``
    first draws the neighbor permutations (components in order; no draws
    when k=0 or the scheme is adjacent), then each component's table as
    2^(k+1) uniforms on [0, 1).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= k <= n - 1:
        raise ValueError(f"k must satisfy 0 <= k <= n-1, got k={k} n={n}")
    if neighbor_scheme not in NEIGHBOR_SCHEMES:
        raise ValueError(f"unknown neighbor_scheme {neighbor_scheme!r}")
    g = generator(seed)
    neighbor_map = []
    for i in range(n):
        if k == 0:
            neighbor_map.append(())
        elif neighbor_scheme == "adjacent":
            neighbor_map.append(tuple((i + j) % n for j in range(1, k + 1)))
        else:
            others = [j for j in range(n) if j != i]
            order = g.permutation(n - 1)[:k]
            neighbor_map.append(tuple(others[int(p)] for p in order))
    tables = np.empty((n, 1 << (k + 1)), dtype=np.float64)
    for i in range(n):
        tables[i] = g.random(1 << (k + 1))
    return NKLandscape(
        n=n, k=k, neighbor_map=tuple(neighbor_map), contribution_tables=tables, seed=seed
    )


def build_beliefs(
    n: int,
    k: int,
    m: int,
    divergence_weight: float,
    neighbor_scheme: str = "random",
    seed: int = 0,
) -> BeliefStructure:
    """Build a belief structure for m agents from one run-level seed.

    The truth landscape uses substream(seed, TAG_LANDSCAPE); agent i's
    divergence landscape uses substream(seed, TAG_DIVERGENCE, i). The
    experiment harness relies on this layout to share landscapes across
    paired conditions.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    truth = build_nk_landscape(n, k, neighbor_scheme, substream(seed, TAG_LANDSCAPE))
    divergences = tuple(
        build_nk_landscape(n, k, neighbor_scheme, substream(seed, TAG_DIVERGENCE, i))
        for i in range(m)
    )
    return BeliefStructure(
        truth=truth, divergence_landscapes=divergences, divergence_weight=divergence_weight
    )


def fitness(landscape: NKLandscape, x: Configuration) -> float:
    """Ground-truth payoff of a configuration: mean of component contributions."""
    if len(x) != landscape.n:
        raise ValueError(
            f"configuration length {len(x)} does not match landscape n={landscape.n}"
        )
    bits = x.bits
    contribs = np.empty(landscape.n, dtype=np.float64)
    for i in range(landscape.n):
        idx = bits[i]
        for j in landscape.neighbor_map[i]:
            idx = (idx << 1) | bits[j]
        contribs[i] = landscape.contribution_tables[i, idx]
    return float(contribs.sum() / landscape.n)


def perceived_fitness(beliefs: BeliefStructure, agent: int, x: Configuration) -> float:
    """Agent's payoff belief: (1-w) * truth + w * own divergence landscape."""
    if not 0 <= agent < beliefs.m:
        raise ValueError(f"agent index {agent} out of range for m={beliefs.m}")
    w = beliefs.divergence_weight
    return (1.0 - w) * fitness(beliefs.truth, x) + w * fitness(
        beliefs.divergence_landscapes[agent], x
    )


@lru_cache(maxsize=32)
def _all_bits(n: int) -> np.ndarray:
    """(2^n, n) matrix of all configurations' bits, most significant first."""
    codes = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (codes[:, None] >> shifts[None, :]) & 1
    bits = bits.astype(np.uint8)
    bits.setflags(write=False)
    return bits


def fitness_table(landscape: NKLandscape) -> np.ndarray:
    """Fitness of every configuration, indexed by integer code (n <= 20).

    Matches ``fitness`` bit-for-bit: the same table lookups are summed with
    the same numpy reduction before dividing by n.
    """
    n = landscape.n
    if n > MAX_ENUMERABLE_N:
        raise ValueError(f"full fitness table infeasible for n={n} > {MAX_ENUMERABLE_N}")
    bits = _all_bits(n)
    contribs = np.empty((1 << n, n), dtype=np.float64)
    for i in range(n):
        cols = (i,) + landscape.neighbor_map[i]
        k_i = len(cols) - 1
        weights = (1 << np.arange(k_i, -1, -1, dtype=np.int64))
        idx = bits[:, cols].astype(np.int64) @ weights
        contribs[:, i] = landscape.contribution_tables[i][idx]
    return contribs.sum(axis=1) / n


@lru_cache(maxsize=32)
def _neighbor_codes(n: int, d: int) -> np.ndarray:
    """XOR masks of all nonzero codes with popcount <= d, ascending."""
    codes = np.arange(1, 1 << n, dtype=np.int64)
    pop = np.array([bin(c).count("1") for c in range(1, 1 << n)], dtype=np.int64)
    masks = codes[pop <= d]
    masks.setflags(write=False)
    return masks


def enumerate_local_peaks(
    evaluate: Callable[[Configuration], float], n: int, d: int = 1
) -> set[Configuration]:
    """Every configuration with no strictly better one within Hamming distance d.

    Exhaustive 2^n scan; the test oracle for local search fixed points.
    """
    if n > MAX_ENUMERABLE_N:
        raise ValueError(f"exhaustive peak enumeration infeasible for n={n} > {MAX_ENUMERABLE_N}")
    if not 1 <= d <= n:
        raise ValueError(f"search radius d must be in [1, n], got {d}")
    values = np.array(
        [evaluate(Configuration.from_int(c, n)) for c in range(1 << n)], dtype=np.float64
    )
    masks = _neighbor_codes(n, d)
    peaks: set[Configuration] = set()
    codes = np.arange(1 << n, dtype=np.int64)
    for start in range(0, 1 << n, 1 << 14):
        block = codes[start : start + (1 << 14)]
        nbr_vals = values[block[:, None] ^ masks[None, :]]
        is_peak = nbr_vals.max(axis=1) <= values[block]
        peaks.update(Configuration.from_int(int(c), n) for c in block[is_peak])
    return peaks


def global_optimum(landscape: NKLandscape) -> tuple[Configuration, float]:
    """Argmax configuration and value over all 2^n configurations.

    Ties break toward the lexicographically smallest bit sequence.
    """
    if landscape.n > MAX_ENUMERABLE_N:
        raise ValueError(
            f"global optimum enumeration infeasible for n={landscape.n} > {MAX_ENUMERABLE_N}"
        )
    values = fitness_table(landscape)
    best = int(np.argmax(values))  # first maximum = smallest code = lexicographic winner
    return Configuration.from_int(best, landscape.n), float(values[best])


def dump_landscape(landscape: NKLandscape, path, header_lines: tuple[str, ...] = ()) -> None:
    """Write a landscape as structured text (leading # comments + JSON body).

    The round trip through ``load_landscape`` is value-exact: floats are
    serialized with repr precision.
    """
    payload = {
        "n": landscape.n,
        "k": landscape.k,
        "seed": landscape.seed,
        "neighbor_map": [list(nbrs) for nbrs in landscape.neighbor_map],
        "contribution_tables": [
            [float(v) for v in row] for row in landscape.contribution_tables
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_landscape(path) -> NKLandscape:
    """Read a landscape written by ``dump_landscape``."""
    with open(path, "r", encoding="utf-8") as fh:
        body = "".join(line for line in fh if not line.startswith("#"))
    payload = json.loads(body)
    return NKLandscape(
        n=payload["n"],
        k=payload["k"],
        neighbor_map=tuple(tuple(nbrs) for nbrs in payload["neighbor_map"]),
        contribution_tables=np.array(payload["contribution_tables"], dtype=np.float64),
        seed=payload["seed"],
    )
