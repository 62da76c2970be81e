"""Parametric families of positive-integer lifetime distributions.

Three families are supported, all defined through their tail function
P(Z >= k) on support {1, 2, ...}:

  geometric(p):      P(Z >= k) = (1-p)^(k-1)
  weibull(lam, a):   P(Z >= k) = exp(-lam * (k-1)^a)   (discrete Weibull)
  zeta(a):           P(Z >= k) = k^(-a)                (mean = zeta(a))

Everything else (pmf, mean, residual law, sampling, mean inversion) is
derived from the tail function, so the families stay consistent by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import zeta as _riemann_zeta


class NonconvergentMean(ArithmeticError):
    """Series for the mean did not converge within the truncation budget."""


class MeanOutOfRange(ValueError):
    """Requested mean is not attainable by the family."""


class InconsistentMoments(ValueError):
    """Supplied moment values cannot come from any member of the family."""


class Family(str, Enum):
    GEOMETRIC = "geometric"
    WEIBULL = "weibull"
    ZETA = "zeta"


# zeta means below alpha ~ 1 diverge; keep a hard floor so every DistSpec
# has a finite mean computable within budget.
ZETA_MIN_ALPHA = 1.05

_SERIES_RELTOL = 1e-13
_SERIES_MAX_TERMS = 10**7
_SERIES_BLOCK = 1 << 14


@dataclass(frozen=True)
class DistSpec:
    """A distribution family plus its parameter vector."""

    family: Family
    params: tuple[float, ...]

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if fam is Family.GEOMETRIC:
            if len(p) != 1 or not 0.0 < p[0] < 1.0:
                raise ValueError(f"geometric needs p in (0,1), got {p}")
        elif fam is Family.WEIBULL:
            if len(p) != 2 or p[0] <= 0.0 or p[1] <= 0.0:
                raise ValueError(f"weibull needs lam > 0, alpha > 0, got {p}")
        else:
            if len(p) != 1 or p[0] < ZETA_MIN_ALPHA:
                raise ValueError(
                    f"zeta needs alpha >= {ZETA_MIN_ALPHA}, got {p}"
                )

    def to_json(self) -> dict:
        if self.family is Family.GEOMETRIC:
            params = {"p": self.params[0]}
        elif self.family is Family.WEIBULL:
            params = {"lam": self.params[0], "alpha": self.params[1]}
        else:
            params = {"alpha": self.params[0]}
        return {"family": self.family.value, "params": params}

    @staticmethod
    def from_json(obj: dict) -> "DistSpec":
        fam = Family(obj["family"])
        params = obj["params"]
        if fam is Family.GEOMETRIC:
            return geometric(params["p"])
        if fam is Family.WEIBULL:
            return weibull(params["lam"], params["alpha"])
        return zeta_dist(params["alpha"])


def geometric(p: float) -> DistSpec:
    return DistSpec(Family.GEOMETRIC, (p,))


def weibull(lam: float, alpha: float) -> DistSpec:
    return DistSpec(Family.WEIBULL, (lam, alpha))


def zeta_dist(alpha: float) -> DistSpec:
    return DistSpec(Family.ZETA, (alpha,))


def ccdf(d: DistSpec, k) -> float:
    """Tail probability P(Z >= k) for integer k >= 1 (vectorizes over k)."""
    k = np.asarray(k, dtype=np.float64)
    with np.errstate(over="ignore", under="ignore"):
        if d.family is Family.GEOMETRIC:
            out = (1.0 - d.params[0]) ** (k - 1.0)
        elif d.family is Family.WEIBULL:
            lam, alpha = d.params
            out = np.exp(-lam * (k - 1.0) ** alpha)
        else:
            out = k ** (-d.params[0])
    return out if out.ndim else float(out)


def pmf(d: DistSpec, k) -> float:
    """P(Z = k), as a tail difference so all families stay consistent."""
    k = np.asarray(k, dtype=np.float64)
    out = ccdf(d, k) - ccdf(d, k + 1.0)
    return out if np.ndim(out) else float(out)


def mean(d: DistSpec) -> float:
    """E[Z] = sum_{k>=1} P(Z >= k).

    Closed form for geometric and zeta; truncated series for weibull,
    stopping once a block adds less than 1e-13 of the running sum.
    """
    if d.family is Family.GEOMETRIC:
        return 1.0 / d.params[0]
    if d.family is Family.ZETA:
        return float(_riemann_zeta(d.params[0], 1.0))
    lam, alpha = d.params
    total = 1.0  # k = 1 term
    k = 2
    with np.errstate(over="ignore", under="ignore"):
        while k <= _SERIES_MAX_TERMS:
            ks = np.arange(k, k + _SERIES_BLOCK, dtype=np.float64)
            block = float(np.exp(-lam * (ks - 1.0) ** alpha).sum())
            total += block
            if block < _SERIES_RELTOL * total:
                return total
            k += _SERIES_BLOCK
    raise NonconvergentMean(f"mean series for {d} did not converge")


def residual_pmf(d: DistSpec, k) -> float:
    """Equilibrium (residual-life) pmf, ccdf(k) / mean."""
    out = np.asarray(ccdf(d, k)) / mean(d)
    return out if out.ndim else float(out)


def sample(d: DistSpec, rng: np.random.Generator, size=None):
    """Draw from d by closed-form inversion of the tail function.

    With v uniform on (0, 1], the draw is the largest k with ccdf(k) >= v.
    """
    v = 1.0 - rng.random(size)  # in (0, 1]
    if d.family is Family.GEOMETRIC:
        p = d.params[0]
        out = 1.0 + np.floor(np.log(v) / math.log1p(-p))
    elif d.family is Family.WEIBULL:
        lam, alpha = d.params
        out = 1.0 + np.floor((-np.log(v) / lam) ** (1.0 / alpha))
    else:
        out = np.floor(v ** (-1.0 / d.params[0]))
    out = np.asarray(out, dtype=np.int64)
    return out if size is not None else int(out)


class ResidualView:
    """Sampler for the residual (equilibrium) law of a base distribution.

    Caches the residual cdf prefix table and extends it on demand; the
    geometric case short-circuits to the base law (memorylessness).
    """

    def __init__(self, base: DistSpec):
        self.base = base
        self.mean = mean(base)
        k = np.arange(1, 257, dtype=np.float64)
        self._cdf = np.cumsum(ccdf(base, k)) / self.mean

    def pmf(self, k) -> float:
        return residual_pmf(self.base, k)

    def _extend(self, target: float) -> None:
        while self._cdf[-1] < target:
            n = len(self._cdf)
            if n >= _SERIES_MAX_TERMS:
                raise NonconvergentMean(
                    f"residual cdf of {self.base} needs > {n} table entries"
                )
            k = np.arange(n + 1, 2 * n + 1, dtype=np.float64)
            ext = self._cdf[-1] + np.cumsum(ccdf(self.base, k)) / self.mean
            self._cdf = np.concatenate([self._cdf, ext])

    def sample(self, rng: np.random.Generator, size=None):
        if self.base.family is Family.GEOMETRIC:
            return sample(self.base, rng, size)
        u = rng.random(size)
        self._extend(float(np.max(u)))
        out = np.searchsorted(self._cdf, u, side="right") + 1
        out = np.asarray(out, dtype=np.int64)
        return out if size is not None else int(out)


def sample_residual(d: DistSpec, rng: np.random.Generator, size=None):
    """Draw from the residual law of d (stationary initialization only)."""
    return ResidualView(d).sample(rng, size)


def _bisect_decreasing(f, lo: float, hi: float, target: float,
                       tol: float = 1e-9, xtol: float = 1e-11,
                       max_iter: int = 200) -> float:
    """Root of f(x) = target for strictly decreasing f, by bisection."""
    flo, fhi = f(lo), f(hi)
    if not (fhi - tol <= target <= flo + tol):
        raise MeanOutOfRange(
            f"target {target} outside attainable range [{fhi}, {flo}]"
        )
    it = 0
    while hi - lo > xtol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi)


def invert_mean(family: Family, fixed: tuple[float, ...],
                target_mean: float) -> DistSpec:
    """Solve for the free parameter so the family's mean equals target_mean.

    Geometric: p = 1/mean (closed form). Weibull: lam comes from `fixed`,
    alpha solved by bisection (mean strictly decreasing in alpha). Zeta:
    alpha solved by bisection on the Riemann zeta function.
    """
    family = Family(family)
    if family is Family.GEOMETRIC:
        if target_mean <= 1.0:
            raise MeanOutOfRange(f"geometric mean must exceed 1, got {target_mean}")
        return geometric(1.0 / target_mean)
    if family is Family.ZETA:
        alpha = _bisect_decreasing(
            lambda a: float(_riemann_zeta(a, 1.0)), ZETA_MIN_ALPHA, 60.0,
            target_mean)
        return zeta_dist(alpha)
    (lam,) = fixed
    floor = 1.0 + math.exp(-lam)  # alpha -> inf limit of the mean
    if target_mean <= floor:
        raise MeanOutOfRange(
            f"weibull(lam={lam}) mean must exceed {floor}, got {target_mean}"
        )

    def mean_or_inf(a: float) -> float:
        # budget exhaustion means the mean is far beyond any sane target
        try:
            return mean(weibull(lam, a))
        except NonconvergentMean:
            return math.inf

    lo, hi = 0.25, 8.0
    while mean_or_inf(lo) < target_mean:
        lo *= 0.25
        if lo < 1e-12:
            raise MeanOutOfRange(f"no alpha attains mean {target_mean}")
    while mean_or_inf(hi) > target_mean and hi < 1e3:
        hi *= 2.0
    alpha = _bisect_decreasing(mean_or_inf, lo, hi, target_mean)
    return weibull(lam, alpha)


def weibull_from_mean_and_tail(mu: float, fbar2: float) -> tuple[float, float]:
    """Jointly recover (lam, alpha) from the mean and the residual pmf at 2.

    The residual law gives fbar(2) = exp(-lam)/mean, so lam is immediate
    and alpha then solves the mean equation.
    """
    if mu <= 1.0 or not 0.0 < fbar2 < 1.0:
        raise InconsistentMoments(f"need mu > 1 and fbar2 in (0,1), got ({mu}, {fbar2})")
    e_neg_lam = fbar2 * mu
    if not 0.0 < e_neg_lam < 1.0:
        raise InconsistentMoments(
            f"fbar2 * mu = {e_neg_lam} must lie in (0,1)"
        )
    lam = -math.log(e_neg_lam)
    try:
        spec = invert_mean(Family.WEIBULL, (lam,), mu)
    except MeanOutOfRange as exc:
        raise InconsistentMoments(str(exc)) from exc
    return lam, spec.params[1]
