"""Two parallel edge-flipping random graphs under a hidden two-mode switch.

Each of the two graphs has every vertex pair independently alternating
between on and off phases with i.i.d. durations; an alternating renewal
background process decides which graph is visible at each tick. The whole
system is started in exact stationarity: phase membership by the
equilibrium on-probability, phase remainders by the residual laws.

Time-to-live (ttl) counts remaining ticks including the current one, so a
phase of duration d is visible at exactly d consecutive ticks.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import distributions as dist
from .distributions import DistSpec, ResidualView
from .subgraph_counts import AdjacencySnapshot, StatEvaluator, SubgraphKind

_ROLES = ("x1", "y1", "x2", "y2", "z1", "z2")
_BLOCK = 2048


@dataclass(frozen=True)
class ModelSpec:
    """Vertex count plus the six duration laws (on/off per graph, per mode)."""

    N: int
    x1: DistSpec  # on-times, graph 1
    y1: DistSpec  # off-times, graph 1
    x2: DistSpec  # on-times, graph 2
    y2: DistSpec  # off-times, graph 2
    z1: DistSpec  # sojourns in mode 1
    z2: DistSpec  # sojourns in mode 2

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"need N >= 2, got {self.N}")

    @property
    def n_edges(self) -> int:
        return comb(self.N, 2)

    def role(self, name: str) -> DistSpec:
        return getattr(self, name)

    def to_json(self) -> dict:
        out = {"N": self.N}
        out.update({r: self.role(r).to_json() for r in _ROLES})
        return out

    @staticmethod
    def from_json(obj: dict) -> "ModelSpec":
        return ModelSpec(N=int(obj["N"]),
                         **{r: DistSpec.from_json(obj[r]) for r in _ROLES})


@dataclass(frozen=True)
class StationaryProfile:
    """Equilibrium on-probabilities of the two graphs and mode-1 weight."""

    rho1: float
    rho2: float
    pi1: float

    def __post_init__(self):
        for name in ("rho1", "rho2", "pi1"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} = {v} must lie in (0,1)")

    @property
    def pi2(self) -> float:
        return 1.0 - self.pi1

    def rho(self, i: int) -> float:
        return self.rho1 if i == 1 else self.rho2

    def pi(self, i: int) -> float:
        return self.pi1 if i == 1 else self.pi2

    def swapped(self) -> "StationaryProfile":
        return StationaryProfile(self.rho2, self.rho1, self.pi2)


def stationary_profile(m: ModelSpec) -> StationaryProfile:
    ex1, ey1 = dist.mean(m.x1), dist.mean(m.y1)
    ex2, ey2 = dist.mean(m.x2), dist.mean(m.y2)
    ez1, ez2 = dist.mean(m.z1), dist.mean(m.z2)
    return StationaryProfile(rho1=ex1 / (ex1 + ey1),
                             rho2=ex2 / (ex2 + ey2),
                             pi1=ez1 / (ez1 + ez2))


@dataclass
class SystemState:
    """Current mode and per-edge phase state of both graphs.

    on/ttl have shape (2, n): row 0 is graph 1, row 1 is graph 2.
    """

    mode: int
    mode_ttl: int
    on: np.ndarray
    ttl: np.ndarray


class _Sampler:
    """Caches residual views of a model's six laws for one simulation."""

    def __init__(self, m: ModelSpec):
        self.model = m
        self.res = {r: ResidualView(m.role(r)) for r in _ROLES}


def init_stationary(m: ModelSpec, rng: np.random.Generator,
                    _sampler: _Sampler | None = None) -> SystemState:
    """Draw the exact stationary state at time 1.

    Mode by its equilibrium weight with a residual sojourn; each edge on
    with its graph's on-probability, remainder from the matching residual
    law.
    """
    smp = _sampler or _Sampler(m)
    prof = stationary_profile(m)
    mode = 1 if rng.random() < prof.pi1 else 2
    mode_ttl = int(smp.res["z1" if mode == 1 else "z2"].sample(rng))
    n = m.n_edges
    on = np.empty((2, n), dtype=bool)
    ttl = np.empty((2, n), dtype=np.int64)
    for i, (on_law, off_law, rho) in enumerate(
            (("x1", "y1", prof.rho1), ("x2", "y2", prof.rho2))):
        on[i] = rng.random(n) < rho
        k_on = int(on[i].sum())
        ttl[i, on[i]] = smp.res[on_law].sample(rng, k_on)
        ttl[i, ~on[i]] = smp.res[off_law].sample(rng, n - k_on)
    return SystemState(mode=mode, mode_ttl=mode_ttl, on=on, ttl=ttl)


def step(s: SystemState, m: ModelSpec, rng: np.random.Generator) -> SystemState:
    """Advance one tick in place: count down, flip expired phases.

    Fresh phases draw full durations; residual laws are used only at
    initialization. Both graphs evolve every tick, observed or not.
    Returns the (mutated) state for convenience.
    """
    for i, (on_law, off_law) in enumerate((("x1", "y1"), ("x2", "y2"))):
        ttl_i = s.ttl[i]
        ttl_i -= 1
        expired = ttl_i == 0
        if expired.any():
            on_i = s.on[i]
            on_i[expired] = ~on_i[expired]
            now_on = expired & on_i
            now_off = expired & ~on_i
            k_on = int(now_on.sum())
            if k_on:
                ttl_i[now_on] = dist.sample(m.role(on_law), rng, k_on)
            k_off = int(now_off.sum())
            if k_off:
                ttl_i[now_off] = dist.sample(m.role(off_law), rng, k_off)
    s.mode_ttl -= 1
    if s.mode_ttl == 0:
        s.mode = 3 - s.mode
        s.mode_ttl = int(dist.sample(m.role("z1" if s.mode == 1 else "z2"), rng))
    return s


def observed_adjacency(s: SystemState, N: int) -> AdjacencySnapshot:
    """Snapshot of the currently visible graph; the hidden one stays hidden."""
    return AdjacencySnapshot(N, s.on[s.mode - 1].copy())


def simulate(m: ModelSpec, T: int, statistics: list[SubgraphKind],
             rng: np.random.Generator, sink) -> None:
    """Run T ticks from stationarity, pushing count blocks to the sink.

    The sink receives (B, s) integer arrays whose rows are consecutive
    ticks; block size is an internal detail. Memory stays O(block * edges)
    regardless of T.
    """
    if T < 1:
        raise ValueError(f"need T >= 1, got {T}")
    if not statistics:
        raise ValueError("statistics must be nonempty")
    ev = StatEvaluator(m.N, statistics)
    smp = _Sampler(m)
    s = init_stationary(m, rng, smp)
    n = m.n_edges
    buf = np.empty((_BLOCK, n), dtype=bool)
    done = 0
    while done < T:
        B = min(_BLOCK, T - done)
        for j in range(B):
            buf[j] = s.on[s.mode - 1]
            step(s, m, rng)
        sink(ev.evaluate(buf[:B]))
        done += B
