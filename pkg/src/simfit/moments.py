"""Closed-form subgraph-count moments and streaming empirical counterparts.

The theoretical side works purely with numbers (equilibrium probabilities,
one-step phase-change probabilities), never with distribution objects; the
empirical side is a single-pass accumulator over count series with lag-0,
lag-1 and lag-2 products and batch-means standard errors.

The lag-2 edge formula uses two-step mode transition probabilities of the
form (1 - hbar)^2 + hbar1*hbar2, which are exact when the mode sojourn
laws are memoryless (geometric), the setting they are used in here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import distributions as dist
from .graph_dynamics import ModelSpec, StationaryProfile, stationary_profile
from .subgraph_counts import SubgraphKind, a_coeff, edges_in_clique


class InsufficientData(ValueError):
    """Series too short for the requested lags."""


@dataclass(frozen=True)
class RegimePersistence:
    """One-step mode co-occurrence probabilities in stationarity."""

    r_neq: float
    r1: float
    r2: float
    hbar1_1: float
    hbar2_1: float

    @staticmethod
    def from_mode_quantities(pi1: float, hbar1_1: float,
                             hbar2_1: float) -> "RegimePersistence":
        return RegimePersistence(
            r_neq=pi1 * hbar1_1 + (1.0 - pi1) * hbar2_1,
            r1=pi1 * (1.0 - hbar1_1),
            r2=(1.0 - pi1) * (1.0 - hbar2_1),
            hbar1_1=hbar1_1,
            hbar2_1=hbar2_1,
        )

    def r(self, i: int) -> float:
        return self.r1 if i == 1 else self.r2


@dataclass(frozen=True)
class DynamicProfile:
    """All scalar quantities the cross-moment formulas consume."""

    stationary: StationaryProfile
    fbar1_1: float
    fbar2_1: float
    hbar1_1: float
    hbar2_1: float
    fbar1_2: float | None = None
    fbar2_2: float | None = None
    g1_1: float | None = None
    g2_1: float | None = None

    @property
    def regime(self) -> RegimePersistence:
        return RegimePersistence.from_mode_quantities(
            self.stationary.pi1, self.hbar1_1, self.hbar2_1)

    def fbar_1(self, i: int) -> float:
        return self.fbar1_1 if i == 1 else self.fbar2_1

    def fbar_2(self, i: int) -> float:
        v = self.fbar1_2 if i == 1 else self.fbar2_2
        if v is None:
            raise ValueError(f"profile lacks fbar_{i}(2)")
        return v

    def g_1(self, i: int) -> float:
        v = self.g1_1 if i == 1 else self.g2_1
        if v is None:
            raise ValueError(f"profile lacks g_{i}(1)")
        return v


def dynamic_profile(m: ModelSpec, with_lag2: bool = True) -> DynamicProfile:
    """Evaluate every profile entry of a concrete model."""
    prof = stationary_profile(m)
    ex1, ex2 = dist.mean(m.x1), dist.mean(m.x2)
    ez1, ez2 = dist.mean(m.z1), dist.mean(m.z2)
    kw = {}
    if with_lag2:
        kw = dict(fbar1_2=dist.ccdf(m.x1, 2) / ex1,
                  fbar2_2=dist.ccdf(m.x2, 2) / ex2,
                  g1_1=dist.pmf(m.y1, 1),
                  g2_1=dist.pmf(m.y2, 1))
    return DynamicProfile(stationary=prof,
                          fbar1_1=1.0 / ex1, fbar2_1=1.0 / ex2,
                          hbar1_1=1.0 / ez1, hbar2_1=1.0 / ez2, **kw)


def single_snapshot_moment(kind: SubgraphKind, N: int,
                           p: StationaryProfile) -> float:
    """Expected count of the statistic at one stationary tick."""
    if kind.kind == "edges" or kind.l == 2:
        return comb(N, 2) * (p.pi1 * p.rho1 + p.pi2 * p.rho2)
    l = kind.l
    if kind.kind == "complete":
        b = edges_in_clique(l)
        return comb(N, l) * (p.pi1 * p.rho1**b + p.pi2 * p.rho2**b)
    return l * comb(N, l) * (p.pi1 * p.rho1**(l - 1) + p.pi2 * p.rho2**(l - 1))


def max_count(kind: SubgraphKind, N: int) -> int:
    """Count of the statistic on the complete graph (hard ceiling)."""
    if kind.kind == "edges" or kind.l == 2:
        return comb(N, 2)
    if kind.kind == "complete":
        return comb(N, kind.l)
    return kind.l * comb(N, kind.l)


def lag1_cross_moment_edges(N: int, d: DynamicProfile) -> float:
    return lag1_cross_moment_complete(N, 2, d)


def lag1_cross_moment_complete(N: int, l: int, d: DynamicProfile) -> float:
    """E[count(k) * count(k+1)] for l-complete subgraphs.

    Two l-subsets sharing m vertices share the C(m,2) edges among them;
    only those carry the one-step edge-persistence factor.
    """
    p = d.stationary
    reg = d.regime
    bl = edges_in_clique(l)
    total = reg.r_neq * comb(N, l) ** 2 * (p.rho1 * p.rho2) ** bl
    for i in (1, 2):
        rho, keep = p.rho(i), 1.0 - d.fbar_1(i)
        acc = 0.0
        for m in range(l + 1):
            bm = edges_in_clique(m)
            acc += a_coeff(N, l, m) * rho**bl * keep**bm * rho**(bl - bm)
        total += reg.r(i) * acc
    return total


def lag1_cross_moment_stars(N: int, l: int, d: DynamicProfile) -> float:
    """E[count(k) * count(k+1)] for l-stars, l >= 3.

    Star pairs on m shared vertices split into the no-common-center,
    distinct-common-centers and identical-center cases, sharing 0, 1 and
    m-1 edges respectively.
    """
    if l < 3:
        raise ValueError("l = 2 stars are edges; use the edge formula")
    p = d.stationary
    reg = d.regime
    total = (reg.r_neq * (l * comb(N, l)) ** 2
             * p.rho1 ** (l - 1) * p.rho2 ** (l - 1))
    for i in (1, 2):
        rho, keep = p.rho(i), 1.0 - d.fbar_1(i)
        acc = 0.0
        for m in range(l + 1):
            bracket = (l - m) * (l + m) * rho ** (2 * (l - 1))
            if m >= 1:
                bracket += (m * (m - 1) * rho ** (2 * l - 3) * keep
                            + m * rho ** (2 * l - m - 1) * keep ** (m - 1))
            acc += a_coeff(N, l, m) * bracket
        total += reg.r(i) * acc
    return total


def mode_transition_lag2(d: DynamicProfile) -> dict[tuple[int, int], float]:
    """Two-step mode transition probabilities (memoryless mode laws)."""
    h1, h2 = d.hbar1_1, d.hbar2_1
    p11 = (1.0 - h1) ** 2 + h1 * h2
    p22 = (1.0 - h2) ** 2 + h2 * h1
    return {(1, 1): p11, (1, 2): 1.0 - p11,
            (2, 2): p22, (2, 1): 1.0 - p22}


def lag2_cross_moment_edges(N: int, d: DynamicProfile) -> float:
    """E[edge count(k) * edge count(k+2)].

    A shared edge survives either by staying on through all three ticks or
    by going off for exactly one tick and coming back.
    """
    p = d.stationary
    P = mode_transition_lag2(d)
    n2 = comb(N, 2) ** 2
    a2 = a_coeff(N, 2, 2)
    a01 = a_coeff(N, 2, 0) + a_coeff(N, 2, 1)
    total = (p.pi1 * P[(1, 2)] + p.pi2 * P[(2, 1)]) * n2 * p.rho1 * p.rho2
    for i in (1, 2):
        persist = (1.0 - d.fbar_1(i) - d.fbar_2(i)
                   + d.fbar_1(i) * d.g_1(i))
        rho = p.rho(i)
        total += (p.pi(i) * P[(i, i)]
                  * (a2 * rho * persist + a01 * rho * rho))
    return total


def cross_moment(kind: SubgraphKind, lag: int, N: int,
                 d: DynamicProfile) -> float:
    """Dispatch to the matching closed-form (kind, lag) formula."""
    if lag == 0:
        return single_snapshot_moment(kind, N, d.stationary)
    if lag == 1:
        if kind.kind == "edges" or kind.l == 2:
            return lag1_cross_moment_edges(N, d)
        if kind.kind == "complete":
            return lag1_cross_moment_complete(N, kind.l, d)
        return lag1_cross_moment_stars(N, kind.l, d)
    if lag == 2 and (kind.kind == "edges" or kind.l == 2):
        return lag2_cross_moment_edges(N, d)
    raise ValueError(f"no closed form for {kind.label} at lag {lag}")


@dataclass
class EmpiricalMoments:
    """Time-averaged lag-0/1/2 moments of several count series.

    values[(label, lag)] uses exact denominators T, T-1, T-2; se holds
    batch-means standard errors for the same quantities.
    """

    labels: list[str]
    T: int
    values: dict[tuple[str, int], float]
    se: dict[tuple[str, int], float] = field(default_factory=dict)

    def get(self, kind: SubgraphKind, lag: int) -> float:
        return self.values[(kind.label, lag)]

    def get_se(self, kind: SubgraphKind, lag: int) -> float:
        return self.se[(kind.label, lag)]

    def to_json(self) -> dict:
        return {
            "labels": self.labels,
            "T": self.T,
            "values": {f"{lb}:{lag}": v for (lb, lag), v in self.values.items()},
            "se": {f"{lb}:{lag}": v for (lb, lag), v in self.se.items()},
        }

    @staticmethod
    def from_json(obj: dict) -> "EmpiricalMoments":
        def parse(d):
            out = {}
            for key, v in d.items():
                lb, lag = key.rsplit(":", 1)
                out[(lb, int(lag))] = float(v)
            return out
        return EmpiricalMoments(labels=list(obj["labels"]), T=int(obj["T"]),
                                values=parse(obj["values"]),
                                se=parse(obj.get("se", {})))


class MomentAccumulator:
    """Single-pass lag-0/1/2 moment accumulator over count blocks.

    Keeps a two-deep window across block boundaries, so memory is O(block)
    no matter how long the series is. Standard errors come from
    non-overlapping batch means (default T // 50 per batch); a trailing
    partial batch contributes to the moments but not to the spread.
    """

    def __init__(self, statistics: list[SubgraphKind], T: int,
                 n_batches: int = 50):
        if T < 3:
            raise InsufficientData(f"need T >= 3 for lag-2 moments, got {T}")
        self.statistics = list(statistics)
        self.labels = [s.label for s in self.statistics]
        self.T = T
        s = len(self.statistics)
        self._sum = {lag: np.zeros(s) for lag in (0, 1, 2)}
        self._tail = np.empty((0, s), dtype=np.int64)
        self._seen = 0
        self._batch_len = max(3, T // n_batches)
        self._batch_sum = {lag: np.zeros(s) for lag in (0, 1, 2)}
        self._batch_cnt = {lag: 0 for lag in (0, 1, 2)}
        self._batch_means = {lag: [] for lag in (0, 1, 2)}

    def push(self, counts: np.ndarray) -> None:
        counts = np.atleast_2d(np.asarray(counts, dtype=np.int64))
        if self._seen + counts.shape[0] > self.T:
            raise ValueError("more ticks pushed than declared T")
        ext = np.concatenate([self._tail, counts])
        x = ext.astype(np.float64)
        off = self._tail.shape[0]
        # keep only product rows whose right factor is new to avoid
        # double counting across block boundaries
        full1 = x[:-1] * x[1:] if x.shape[0] > 1 else x[:0]
        full2 = x[:-2] * x[2:] if x.shape[0] > 2 else x[:0]
        prods = {0: x[off:],
                 1: full1[max(off - 1, 0):],
                 2: full2}
        for lag in (0, 1, 2):
            p = prods[lag]
            self._sum[lag] += p.sum(axis=0)
            i = 0
            while i < p.shape[0]:
                room = self._batch_len - self._batch_cnt[lag]
                take = min(room, p.shape[0] - i)
                self._batch_sum[lag] += p[i:i + take].sum(axis=0)
                self._batch_cnt[lag] += take
                if self._batch_cnt[lag] == self._batch_len:
                    self._batch_means[lag].append(
                        self._batch_sum[lag] / self._batch_len)
                    self._batch_sum[lag] = np.zeros_like(self._batch_sum[lag])
                    self._batch_cnt[lag] = 0
                i += take
        self._seen += counts.shape[0]
        self._tail = ext[-2:].copy() if ext.shape[0] >= 2 else ext.copy()

    def finish(self) -> EmpiricalMoments:
        if self._seen != self.T:
            raise InsufficientData(
                f"accumulated {self._seen} ticks, declared {self.T}")
        T = self.T
        values, se = {}, {}
        denom = {0: T, 1: T - 1, 2: T - 2}
        for lag in (0, 1, 2):
            avg = self._sum[lag] / denom[lag]
            bm = np.array(self._batch_means[lag])
            if bm.shape[0] >= 2:
                sdev = bm.std(axis=0, ddof=1) / np.sqrt(bm.shape[0])
            else:
                sdev = np.full(len(self.labels), np.nan)
            for j, lb in enumerate(self.labels):
                values[(lb, lag)] = float(avg[j])
                se[(lb, lag)] = float(sdev[j])
        return EmpiricalMoments(labels=self.labels, T=T, values=values, se=se)


def accumulate(series: np.ndarray, statistics: list[SubgraphKind]) -> EmpiricalMoments:
    """Convenience wrapper: accumulate a fully materialized (T, s) series."""
    series = np.asarray(series)
    if series.ndim == 1:
        series = series[:, None]
    if series.shape[1] != len(statistics):
        raise ValueError(f"series has {series.shape[1]} columns "
                         f"for {len(statistics)} statistics")
    acc = MomentAccumulator(statistics, series.shape[0])
    acc.push(series)
    return acc.finish()
