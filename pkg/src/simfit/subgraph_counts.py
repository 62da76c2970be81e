"""Exact subgraph counting on edge-bit snapshots.

Edges are indexed lexicographically over vertex pairs (j1 < j2). Counts of
l-complete subgraphs use a precomputed subset -> edge-index table (exact,
vectorized); l-star counts only need the degree sequence.

Also provides the pair-overlap coefficients a_m and the star-overlap case
table (how many common edges two l-stars on m shared vertices can have).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np


@dataclass(frozen=True)
class SubgraphKind:
    """A statistic to track: 'edges', or 'complete'/'stars' with a size l."""

    kind: str
    l: int | None = None

    def __post_init__(self):
        if self.kind not in ("edges", "complete", "stars"):
            raise ValueError(f"unknown subgraph kind {self.kind!r}")
        if self.kind == "edges":
            if self.l is not None:
                raise ValueError("'edges' takes no size")
        elif self.l is None or self.l < 2:
            raise ValueError(f"{self.kind} needs l >= 2")

    @property
    def label(self) -> str:
        if self.kind == "edges":
            return "A"
        return ("K" if self.kind == "complete" else "S") + str(self.l)

    @staticmethod
    def from_json(obj) -> "SubgraphKind":
        if isinstance(obj, str):
            if obj in ("A", "edges"):
                return SubgraphKind("edges")
            if obj[0] in "KS" and obj[1:].isdigit():
                kind = "complete" if obj[0] == "K" else "stars"
                return SubgraphKind(kind, int(obj[1:]))
            raise ValueError(f"cannot parse subgraph kind {obj!r}")
        return SubgraphKind(obj["kind"], obj.get("l"))

    def to_json(self) -> str:
        return self.label


@dataclass
class AdjacencySnapshot:
    """Undirected simple graph as a bit per lexicographic vertex pair."""

    N: int
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != (comb(self.N, 2),):
            raise ValueError(
                f"need {comb(self.N, 2)} bits for N={self.N}, "
                f"got shape {self.bits.shape}"
            )


@dataclass(frozen=True)
class OverlapRow:
    common_edges: int
    cases: int


@lru_cache(maxsize=None)
def pair_table(N: int) -> np.ndarray:
    """(n, 2) array of vertex pairs in lexicographic order."""
    return np.array(list(combinations(range(N), 2)), dtype=np.int64)


def pair_index(N: int, j1: int, j2: int) -> int:
    """Edge-slot index of the pair (j1, j2), j1 < j2."""
    if not 0 <= j1 < j2 < N:
        raise ValueError(f"need 0 <= j1 < j2 < N, got ({j1}, {j2})")
    return j1 * N - j1 * (j1 + 1) // 2 + (j2 - j1 - 1)


@lru_cache(maxsize=None)
def _subset_edge_table(N: int, l: int) -> np.ndarray:
    """(C(N,l), C(l,2)) edge-slot indices internal to each l-subset."""
    rows = []
    for sub in combinations(range(N), l):
        rows.append([pair_index(N, a, b) for a, b in combinations(sub, 2)])
    return np.array(rows, dtype=np.int64)


@lru_cache(maxsize=None)
def _star_comb_table(N: int, l: int) -> np.ndarray:
    """C(d, l-1) for every possible degree d."""
    return np.array([comb(d, l - 1) for d in range(N)], dtype=np.int64)


def count_edges(a: AdjacencySnapshot) -> int:
    return int(np.count_nonzero(a.bits))


def count_complete(a: AdjacencySnapshot, l: int) -> int:
    """Number of l-subsets with all internal edges present."""
    if not 2 <= l <= a.N:
        raise ValueError(f"need 2 <= l <= N, got l={l}, N={a.N}")
    if l == 2:
        return count_edges(a)
    table = _subset_edge_table(a.N, l)
    return int(a.bits[table].all(axis=1).sum())


def degrees(N: int, bits: np.ndarray) -> np.ndarray:
    pairs = pair_table(N)
    on = pairs[np.asarray(bits, dtype=bool)]
    return np.bincount(on.ravel(), minlength=N)


def count_stars(a: AdjacencySnapshot, l: int) -> int:
    """Number of l-stars, sum over vertices of C(deg, l-1).

    At l = 2 the star and the edge coincide; we count each edge once, so
    count_stars(., 2) == count_edges(.).
    """
    if not 2 <= l <= a.N:
        raise ValueError(f"need 2 <= l <= N, got l={l}, N={a.N}")
    if l == 2:
        return count_edges(a)
    table = _star_comb_table(a.N, l)
    return int(table[degrees(a.N, a.bits)].sum())


def count(a: AdjacencySnapshot, kind: SubgraphKind) -> int:
    if kind.kind == "edges":
        return count_edges(a)
    if kind.kind == "complete":
        return count_complete(a, kind.l)
    return count_stars(a, kind.l)


def a_coeff(N: int, l: int, m: int) -> int:
    """Number of ordered pairs of l-subsets of [N] sharing exactly m vertices."""
    if not 0 <= m <= l <= N:
        raise ValueError(f"need 0 <= m <= l <= N, got ({N}, {l}, {m})")
    if l - m > N - l:
        return 0
    return comb(N, l) * comb(N - l, l - m) * comb(l, m)


def edges_in_clique(l: int) -> int:
    """Edges of a complete graph on l vertices; zero for l < 2."""
    return comb(l, 2)


def star_overlap_table(l: int, m: int) -> list[OverlapRow]:
    """Common-edge cases for two l-stars sharing m vertices.

    Per center choice (l options each side, l^2 total): no common center
    vertex gives 0 common edges; two distinct shared centers share the one
    edge linking them; an identical center shares its m-1 edges to the
    other common vertices. Rows with equal common-edge counts are merged.
    """
    if not 0 <= m <= l:
        raise ValueError(f"need 0 <= m <= l, got ({l}, {m})")
    tally: dict[int, int] = {}
    for edges_, cases in (((0, (l + m) * (l - m))),
                          (1, m * (m - 1)),
                          (max(m - 1, 0), m)):
        if cases:
            tally[edges_] = tally.get(edges_, 0) + cases
    return [OverlapRow(e, c) for e, c in sorted(tally.items())]


class StatEvaluator:
    """Vectorized evaluation of several subgraph statistics over bit blocks.

    evaluate() takes a (B, n) block of edge bits and returns (B, s) counts;
    precomputes all index tables once per (N, statistics) combination.
    """

    def __init__(self, N: int, statistics: list[SubgraphKind]):
        self.N = N
        self.statistics = list(statistics)
        self._pairs = pair_table(N)
        # vertex-by-edge incidence, for degree sequences in one matmul
        n = comb(N, 2)
        inc = np.zeros((N, n), dtype=np.int64)
        for e, (a, b) in enumerate(self._pairs):
            inc[a, e] = inc[b, e] = 1
        self._inc = inc
        self._plans = []
        for st in self.statistics:
            if st.kind == "edges" or st.l == 2:
                self._plans.append(("edges", None))
            elif st.kind == "complete":
                self._plans.append(("complete", _subset_edge_table(N, st.l)))
            else:
                self._plans.append(("stars", _star_comb_table(N, st.l)))

    def evaluate(self, bits: np.ndarray) -> np.ndarray:
        bits = np.atleast_2d(np.asarray(bits, dtype=bool))
        B = bits.shape[0]
        out = np.empty((B, len(self._plans)), dtype=np.int64)
        deg = None
        for j, (mode, table) in enumerate(self._plans):
            if mode == "edges":
                out[:, j] = bits.sum(axis=1)
            elif mode == "complete":
                out[:, j] = bits[:, table].all(axis=2).sum(axis=1)
            else:
                if deg is None:
                    deg = bits.astype(np.int64) @ self._inc.T
                out[:, j] = table[deg].sum(axis=1)
        return out
