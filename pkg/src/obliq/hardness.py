"""Exact query-commit values on small hard instances.

An adaptive algorithm sees the graph only up to a uniformly random
relabelling of its vertices.  After some queries, the consistent
relabellings ("embeddings") are equally likely, which gives every
unqueried pair an exact existence probability.  The optimal strategy is
found by backward induction over observation states, in ``Fraction``
arithmetic throughout.
"""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np


class Kind(str, Enum):
    WARMUP = "warmup"
    BIPARTITE = "bipartite"
    GENERAL = "general"


@dataclass(frozen=True)
class HardFamily:
    kind: Kind
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.n < 2:
            raise ValueError("hard families need n >= 2")
        if self.kind is Kind.WARMUP and self.n != 2:
            raise ValueError("the warm-up instance has n = 2")

    @classmethod
    def warmup(cls) -> "HardFamily":
        return cls(Kind.WARMUP, 2)

    @classmethod
    def bipartite(cls, n: int) -> "HardFamily":
        return cls(Kind.BIPARTITE, n)

    @classmethod
    def general(cls, n: int) -> "HardFamily":
        return cls(Kind.GENERAL, n)

    @classmethod
    def parse(cls, name: str) -> "HardFamily":
        if name == "warmup":
            return cls.warmup()
        if name.startswith("hhat"):
            return cls.general(int(name[4:]))
        if name.startswith("h"):
            return cls.bipartite(int(name[1:]))
        raise ValueError(f"unknown family {name!r}")

    @property
    def is_bipartite(self) -> bool:
        return self.kind is not Kind.GENERAL

    @property
    def vertex_count(self) -> int:
        return 2 * self.n

    def sides(self) -> tuple[int, ...]:
        """Side of each label: left labels 0..n-1, right labels n..2n-1; 0 for all in the general family."""
        if self.is_bipartite:
            return (0,) * self.n + (1,) * self.n
        return (0,) * (2 * self.n)

    def edges(self) -> frozenset[tuple[int, int]]:
        """Edges of the hidden graph on true vertices, as sorted pairs."""
        n = self.n
        if self.is_bipartite:
            # left u_{2a-1} ~ right u_{2b} iff 2a-1 >= 2b-1, i.e. a >= b (0-based here)
            return frozenset((a, n + b) for a in range(n) for b in range(n) if a >= b)
        out = set()
        for i in range(1, 2 * n + 1):
            for j in range(1, 2 * n + 1):
                if i != j and i % 2 == 1 and i >= j - 1:
                    out.add((min(i, j) - 1, max(i, j) - 1))
        return frozenset(out)

    def candidate_pairs(self) -> list[tuple[int, int]]:
        N = self.vertex_count
        if self.is_bipartite:
            return [(a, b) for a in range(self.n) for b in range(self.n, N)]
        return [(a, b) for a in range(N) for b in range(a + 1, N)]


# --- embeddings -----------------------------------------------------------------

@dataclass(frozen=True)
class _Embeddings:
    count: int
    full: int  # bitset with every embedding
    edge_bits: dict  # (x, y) -> bitset of embeddings in which labels x, y are adjacent


@lru_cache(maxsize=None)
def embeddings(family: HardFamily) -> _Embeddings:
    """Bitsets over all label-to-vertex maps, one per label pair."""
    n, N = family.n, family.vertex_count
    adj = np.zeros((N, N), dtype=bool)
    for a, b in family.edges():
        adj[a, b] = adj[b, a] = True
    if family.is_bipartite:
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        k = len(perms)
        left = np.repeat(perms, k, axis=0)
        right = np.tile(perms, (k, 1)) + n
        sigma = np.hstack([left, right])
    else:
        sigma = np.array(list(itertools.permutations(range(N))), dtype=np.int64)
    count = len(sigma)
    bits = {}
    for x, y in family.candidate_pairs():
        mask = adj[sigma[:, x], sigma[:, y]]
        packed = np.packbits(mask, bitorder="little")
        bits[(x, y)] = int.from_bytes(packed.tobytes(), "little")
    return _Embeddings(count, (1 << count) - 1, bits)


# --- states ---------------------------------------------------------------------

class Status(str, Enum):
    UNQUERIED = "unqueried"
    EXISTS = "exists"
    NULL = "null"


@dataclass(frozen=True)
class QueryState:
    family: HardFamily
    outcomes: frozenset = frozenset()  # {((x, y), exists: bool)}

    def __post_init__(self):
        valid = set(self.family.candidate_pairs())
        seen = set()
        for (x, y), found in self.outcomes:
            if (x, y) not in valid:
                raise ValueError(f"pair {(x, y)} cannot be queried in this family")
            if found:
                if x in seen or y in seen:
                    raise ValueError("existing pairs must form a matching")
                seen.update((x, y))

    @classmethod
    def empty(cls, family: HardFamily) -> "QueryState":
        return cls(family)

    def with_outcome(self, pair: tuple[int, int], exists: bool) -> "QueryState":
        pair = tuple(sorted(pair))
        if self.status(pair) is not Status.UNQUERIED:
            raise ValueError(f"pair {pair} already queried")
        return QueryState(self.family, self.outcomes | {(pair, bool(exists))})

    def status(self, pair) -> Status:
        pair = tuple(sorted(pair))
        for p, found in self.outcomes:
            if p == pair:
                return Status.EXISTS if found else Status.NULL
        return Status.UNQUERIED

    @property
    def matched(self) -> frozenset[int]:
        return frozenset(v for (p, found) in self.outcomes if found for v in p)

    def consistent(self) -> int:
        emb = embeddings(self.family)
        c = emb.full
        for p, found in self.outcomes:
            c &= emb.edge_bits[p] if found else ~emb.edge_bits[p]
        return c


class InconsistentState(ValueError):
    pass


def posterior(family: HardFamily, state: QueryState) -> dict[tuple[int, int], Fraction]:
    """Existence probability of every unqueried pair between unmatched labels."""
    c = state.consistent()
    total = c.bit_count()
    if total == 0:
        raise InconsistentState("no embedding agrees with the observed outcomes")
    emb = embeddings(family)
    matched = state.matched
    out = {}
    for p in family.candidate_pairs():
        if p[0] in matched or p[1] in matched or state.status(p) is not Status.UNQUERIED:
            continue
        out[p] = Fraction((c & emb.edge_bits[p]).bit_count(), total)
    return out


# --- canonical form of an observation -------------------------------------------

def canonical_key(outcomes, sides: tuple[int, ...]) -> tuple:
    """Isomorphism-invariant key of a labelled observation graph.

    Colour refinement from (side, matched) splits labels into ordered cells;
    labels with identical typed neighbourhoods are interchangeable, and the
    remaining orderings inside each cell are tried exhaustively for the
    lexicographically smallest edge list.
    """
    N = len(sides)
    nbrs = [[] for _ in range(N)]
    matched = [0] * N
    for (x, y), found in outcomes:
        t = 1 if found else 0
        nbrs[x].append((y, t))
        nbrs[y].append((x, t))
        if found:
            matched[x] = matched[y] = 1
    color = _refine([(sides[x], matched[x]) for x in range(N)], nbrs)
    cells = {}
    for x in range(N):
        cells.setdefault(color[x], []).append(x)
    ordered = [cells[c] for c in sorted(cells)]
    per_cell = []
    for cell in ordered:
        groups = {}
        for x in cell:
            groups.setdefault(frozenset(nbrs[x]), []).append(x)
        reps = list(groups.values())
        per_cell.append(_cell_orders(reps))
    side_seq = tuple(sides[x] for cell in ordered for x in cell)
    best = None
    for combo in itertools.product(*per_cell):
        pos = {}
        k = 0
        for seq in combo:
            for x in seq:
                pos[x] = k
                k += 1
        code = tuple(sorted((min(pos[x], pos[y]), max(pos[x], pos[y]), found)
                            for (x, y), found in outcomes))
        if best is None or code < best:
            best = code
    return side_seq, best


def _refine(init, nbrs):
    color = _compress(init)
    while True:
        sig = [(color[x], tuple(sorted((color[y], t) for y, t in nbrs[x]))) for x in range(len(nbrs))]
        new = _compress(sig)
        if len(set(new)) == len(set(color)):
            return new
        color = new


def _compress(items):
    rank = {s: i for i, s in enumerate(sorted(set(items)))}
    return [rank[s] for s in items]


def _cell_orders(groups: list[list[int]]) -> list[tuple[int, ...]]:
    """Orderings of a cell up to swapping members of the same twin group."""
    if len(groups) == 1:
        return [tuple(groups[0])]
    return [tuple(x for g in perm for x in g) for perm in itertools.permutations(groups)]


# --- the dynamic program --------------------------------------------------------

@dataclass
class DPStats:
    states: int = 0
    memo_hits: int = 0
    embeddings: int = 0


@dataclass(frozen=True)
class HardnessResult:
    expected_matched: Fraction
    ratio: Fraction
    stats: DPStats = field(compare=False, default_factory=DPStats)


def optimal_adaptive_value(family: HardFamily, canonical: bool = True) -> HardnessResult:
    """Best expected matching size of any adaptive query-commit strategy."""
    emb = embeddings(family)
    pairs = family.candidate_pairs()
    sides = family.sides()
    stats = DPStats(embeddings=emb.count)
    memo: dict = {}

    def key_of(outcomes):
        return canonical_key(outcomes, sides) if canonical else outcomes

    def value(outcomes: frozenset, c: int, matched: frozenset) -> Fraction:
        key = key_of(outcomes)
        hit = memo.get(key)
        if hit is not None:
            stats.memo_hits += 1
            return hit
        stats.states += 1
        total = c.bit_count()
        best = Fraction(len(matched) // 2)  # stop here
        for p in pairs:
            if p[0] in matched or p[1] in matched:
                continue
            e = emb.edge_bits[p]
            c_yes = c & e
            k = c_yes.bit_count()
            if k == 0:
                continue  # known absent, including already-queried null pairs
            prob = Fraction(k, total)
            v = prob * value(outcomes | {(p, True)}, c_yes, matched | set(p))
            if k < total:
                v += (1 - prob) * value(outcomes | {(p, False)}, c & ~e, matched)
            if v > best:
                best = v
        memo[key] = best
        return best

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10000))
    try:
        ev = value(frozenset(), emb.full, frozenset())
    finally:
        sys.setrecursionlimit(limit)
    return HardnessResult(ev, ev / family.n, stats)


# --- Ranking on the same instances ----------------------------------------------

RANKING_MAX_VERTICES = 10


def _adjacency(family: HardFamily) -> list[set[int]]:
    adj = [set() for _ in range(family.vertex_count)]
    for a, b in family.edges():
        adj[a].add(b)
        adj[b].add(a)
    return adj


def greedy_by_rank(adj: list[set[int]], order: tuple[int, ...]) -> int:
    """Matching size when vertices, in rank order, take their lowest-ranked free neighbour."""
    rank = {v: i for i, v in enumerate(order)}
    free = [True] * len(adj)
    size = 0
    for v in order:
        if not free[v]:
            continue
        cands = [u for u in adj[v] if free[u]]
        if cands:
            u = min(cands, key=rank.__getitem__)
            free[u] = free[v] = False
            size += 1
    return size


def ranking_exact_value(family: HardFamily) -> HardnessResult:
    """Ranking's expected matching size, averaged over every rank order."""
    N = family.vertex_count
    if N > RANKING_MAX_VERTICES:
        raise ValueError(f"{N} vertices exceeds the enumeration limit of {RANKING_MAX_VERTICES}")
    adj = _adjacency(family)
    total = sum(greedy_by_rank(adj, order) for order in itertools.permutations(range(N)))
    ev = Fraction(total, math.factorial(N))
    return HardnessResult(ev, ev / family.n)


def ranking_edge_order_value(family: HardFamily) -> Fraction:
    """Same quantity through edge-greedy: edges sorted by (lower endpoint rank, higher endpoint rank).

    Adjacent edges compare the same way under both rules, and a greedy
    maximal matching depends only on how adjacent edges compare.
    """
    N = family.vertex_count
    if N > RANKING_MAX_VERTICES:
        raise ValueError(f"{N} vertices exceeds the enumeration limit of {RANKING_MAX_VERTICES}")
    edges = sorted(family.edges())
    total = 0
    for order in itertools.permutations(range(N)):
        rank = [0] * N
        for i, v in enumerate(order):
            rank[v] = i
        keyed = sorted(edges, key=lambda e: tuple(sorted((rank[e[0]], rank[e[1]]))))
        used = set()
        for a, b in keyed:
            if a not in used and b not in used:
                used.update((a, b))
                total += 1
    return Fraction(total, math.factorial(N))
