"""Bankruptcy coalition games over classifier evaluations and their values.

Coalitions are bitmasks over players: bit i set means player i is in the
coalition, index 0 is the empty coalition and ``2**n - 1`` the grand one.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

MAX_PLAYERS = 20


class ValueConcept(str, Enum):
    SHAPLEY = "SHAPLEY"
    BANZHAF = "BANZHAF"
    SOLIDARITY = "SOLIDARITY"
    CIS = "CIS"
    ENSC = "ENSC"
    ENPAC = "ENPAC"
    ENBC = "ENBC"
    CONSENSUS = "CONSENSUS"


CONCEPTS = tuple(ValueConcept)
EFFICIENT = tuple(c for c in CONCEPTS if c is not ValueConcept.BANZHAF)


@dataclass(frozen=True)
class CoalitionGame:
    n: int
    table: np.ndarray
    demands: Optional[np.ndarray] = None
    estate: Optional[float] = None

    def __post_init__(self):
        if not 1 <= self.n <= MAX_PLAYERS:
            raise ValueError(f"player count must be in [1, {MAX_PLAYERS}], got {self.n}")
        table = np.asarray(self.table, dtype=float)
        if table.shape != (1 << self.n,):
            raise ValueError(f"table must have 2**{self.n} = {1 << self.n} entries, got {table.shape}")
        if not np.isfinite(table).all():
            raise ValueError("coalition table must be finite")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    @property
    def grand_worth(self) -> float:
        return float(self.table[self.full])

    def worth(self, players: Iterable[int]) -> float:
        mask = 0
        for i in players:
            mask |= 1 << i
        return float(self.table[mask])

    def singletons(self) -> np.ndarray:
        return self.table[1 << np.arange(self.n)]

    def leave_one_out(self) -> np.ndarray:
        """v(N - {i}) for every player i."""
        return self.table[self.full ^ (1 << np.arange(self.n))]


@dataclass(frozen=True)
class Allocation:
    concept: ValueConcept
    values: np.ndarray


@dataclass(frozen=True)
class WeightVector:
    r: np.ndarray
    provenance: str
    fallback: bool = False
    clamped: bool = False


def _masks(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def popcounts(n: int) -> np.ndarray:
    masks = _masks(n)
    pc = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pc += (masks >> i) & 1
    return pc


def bankruptcy_game(z: Sequence[float], fraction: float = 0.8) -> CoalitionGame:
    """Each coalition gets what is left of the estate after paying every outsider.

    The estate is ``fraction * sum(z)``. An all-zero ``z`` yields the all-zero
    game; callers are expected to fall back to uniform weights.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    if z.ndim != 1 or not 2 <= n <= MAX_PLAYERS:
        raise ValueError(f"bankruptcy game needs 2..{MAX_PLAYERS} players, got {z.shape}")
    if not np.isfinite(z).all() or (z < 0).any():
        raise ValueError(f"demands must be finite and nonnegative, got {z.tolist()}")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"estate fraction must lie in (0, 1], got {fraction}")
    estate = fraction * float(z.sum())
    masks = _masks(n)
    outside = np.zeros(1 << n)
    for i in range(n):
        outside += np.where((masks >> i) & 1, 0.0, z[i])
    table = np.maximum(0.0, estate - outside)
    return CoalitionGame(n, table, demands=z.copy(), estate=estate)


def _marginals(game: CoalitionGame, i: int):
    """Coalitions without i and the marginal contribution of i to each."""
    masks = _masks(game.n)
    without = masks[((masks >> i) & 1) == 0]
    t = game.table
    return without, t[without | (1 << i)] - t[without]


def shapley(game: CoalitionGame) -> np.ndarray:
    n = game.n
    f = [math.factorial(k) for k in range(n + 1)]
    size_weight = np.array([f[s] * f[n - s - 1] / f[n] for s in range(n)])
    pc = popcounts(n)
    out = np.empty(n)
    for i in range(n):
        without, marg = _marginals(game, i)
        out[i] = np.dot(size_weight[pc[without]], marg)
    return out


def banzhaf(game: CoalitionGame) -> np.ndarray:
    scale = 1.0 / (1 << (game.n - 1))
    return np.array([_marginals(game, i)[1].sum() * scale for i in range(game.n)])


def solidarity(game: CoalitionGame) -> np.ndarray:
    # every coalition's members share its average marginal contribution
    n = game.n
    t = game.table
    masks = _masks(n)
    pc = popcounts(n)
    drop_sum = np.zeros(1 << n)
    for k in range(n):
        has_k = ((masks >> k) & 1).astype(bool)
        drop_sum[has_k] += t[masks[has_k] ^ (1 << k)]
    avg = np.zeros(1 << n)
    nz = pc > 0
    avg[nz] = (pc[nz] * t[nz] - drop_sum[nz]) / pc[nz]
    f = [math.factorial(k) for k in range(n + 1)]
    size_weight = np.array([0.0] + [f[n - c] * f[c - 1] / f[n] for c in range(1, n + 1)])
    share = size_weight[pc] * avg
    out = np.empty(n)
    for i in range(n):
        out[i] = share[((masks >> i) & 1).astype(bool)].sum()
    return out


def _egalitarian_surplus(game: CoalitionGame, individual: np.ndarray) -> np.ndarray:
    return individual + (game.grand_worth - individual.sum()) / game.n


def cis(game: CoalitionGame) -> np.ndarray:
    return _egalitarian_surplus(game, game.singletons())


def ensc(game: CoalitionGame) -> np.ndarray:
    return _egalitarian_surplus(game, game.grand_worth - game.leave_one_out())


def enpac(game: CoalitionGame) -> np.ndarray:
    n = game.n
    if n < 3:
        raise ValueError("ENPAC needs at least 3 players (its pairwise term divides by n - 2)")
    full = game.full
    individual = np.empty(n)
    for i in range(n):
        pair_sum = sum(game.table[full ^ (1 << i) ^ (1 << j)] for j in range(n) if j != i)
        individual[i] = game.grand_worth - pair_sum / (n - 2)
    return _egalitarian_surplus(game, individual)


def enbc(game: CoalitionGame) -> np.ndarray:
    return _egalitarian_surplus(game, banzhaf(game))


def consensus(game: CoalitionGame) -> np.ndarray:
    """Consensus value via the reduced-game recursion, memoized per coalition.

    A reduced game on coalition T keeps the original worth of every proper
    subset of T and only raises the worth of T itself by some h. The value is
    additive, symmetric and efficient, so that raise adds h/|T| to each member
    and the memo can store the value of each T under its original worth.
    """
    n = game.n
    t = game.table
    masks = _masks(n)
    pc = popcounts(n)
    single = game.singletons()
    member = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    gamma = np.zeros((1 << n, n))

    ones = masks[pc == 1]
    gamma[ones] = np.where(member[ones], t[ones][:, None], 0.0)
    for size in range(2, n + 1):
        layer = masks[pc == size]
        mem = member[layer]
        # h[T, j]: half the surplus of the pair (T - {j}, {j})
        h = np.zeros((layer.size, n))
        sub_sum = np.zeros((layer.size, n))
        for j in range(n):
            has = mem[:, j]
            sub = layer[has] ^ (1 << j)
            h[has, j] = (t[layer[has]] - t[sub] - single[j]) / 2.0
            sub_sum[has] += gamma[sub]
        H = h.sum(axis=1, keepdims=True)
        val = (single + h + sub_sum + (H - h) / (size - 1)) / size
        gamma[layer] = np.where(mem, val, 0.0)
    return gamma[game.full].copy()


_RULES = {
    ValueConcept.SHAPLEY: shapley,
    ValueConcept.BANZHAF: banzhaf,
    ValueConcept.SOLIDARITY: solidarity,
    ValueConcept.CIS: cis,
    ValueConcept.ENSC: ensc,
    ValueConcept.ENPAC: enpac,
    ValueConcept.ENBC: enbc,
    ValueConcept.CONSENSUS: consensus,
}


def allocate(game: CoalitionGame, concept) -> Allocation:
    concept = ValueConcept(concept)
    return Allocation(concept, _RULES[concept](game))


def allocate_all(game: CoalitionGame, concepts=CONCEPTS, workers: Optional[int] = None) -> dict:
    """Allocations keyed by concept, in the order given. Results do not depend on ``workers``."""
    concepts = [ValueConcept(c) for c in concepts]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            allocs = list(pool.map(lambda c: allocate(game, c), concepts))
    else:
        allocs = [allocate(game, c) for c in concepts]
    return {a.concept: a for a in allocs}


def shapley_permutation_oracle(game: CoalitionGame) -> Allocation:
    """Shapley value as the average marginal contribution over all player orders.

    Factorial cost; meant as an independent check on ``shapley``.
    """
    n = game.n
    if n > 9:
        raise ValueError(f"permutation enumeration limited to 9 players, got {n}")
    t = game.table
    totals = [0.0] * n
    for order in itertools.permutations(range(n)):
        mask = 0
        for i in order:
            nxt = mask | (1 << i)
            totals[i] += t[nxt] - t[mask]
            mask = nxt
    count = math.factorial(n)
    return Allocation(ValueConcept.SHAPLEY, np.array([x / count for x in totals]))


def normalize(alloc, provenance: Optional[str] = None) -> WeightVector:
    """Clamp negative values to zero and rescale onto the simplex.

    If nothing positive survives the clamp the weights fall back to uniform.
    """
    values = np.asarray(getattr(alloc, "values", alloc), dtype=float)
    if provenance is None:
        concept = getattr(alloc, "concept", None)
        provenance = concept.value if concept is not None else "custom"
    clamped = np.maximum(values, 0.0)
    total = clamped.sum()
    if total <= 0:
        return WeightVector(np.full(values.size, 1.0 / values.size), provenance, fallback=True,
                            clamped=bool((values < 0).any()))
    return WeightVector(clamped / total, provenance, clamped=bool((values < 0).any()))
