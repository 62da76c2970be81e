"""Two-step method-of-moments parameter recovery.

Step 1 solves the three single-snapshot moment equations for the
equilibrium triple (pi1, rho1, rho2); Step 2 substitutes those into the
lag-1 cross-moment equations and solves for the three unknown means
(E Z1, E X1, E X2), with the remaining means completed through the
stationarity relation Theta. A configuration with a lag-2 edge equation
additionally recovers the residual on-tail value fbar1(2), which that
equation is affine in. Family parameters are then read off the means.

The labeling (graph 1, graph 2, mode 1, mode 2) is only identifiable up
to a simultaneous swap; solutions are canonicalized to rho1 <= rho2 and,
when a reference truth is supplied, re-aligned to its labeling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .distributions import (DistSpec, Family, InconsistentMoments,
                            MeanOutOfRange, invert_mean,
                            weibull_from_mean_and_tail)
from .graph_dynamics import StationaryProfile
from .moments import (DynamicProfile, EmpiricalMoments, cross_moment,
                      max_count, single_snapshot_moment)
from .subgraph_counts import SubgraphKind

_ROLES = ("z1", "z2", "x1", "y1", "x2", "y2")


class NoRoot(RuntimeError):
    """No multi-start branch converged."""


class Degenerate(RuntimeError):
    """The moment system is rank deficient (e.g. rho1 = rho2)."""


class InfeasibleMean(ValueError):
    """A solution would require a mean <= 1 or a probability outside (0,1)."""


class EstimationError(RuntimeError):
    """Failure of a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def theta(x: float, y: float) -> float:
    """Complementary mean (1-x) y / x of the stationarity relation."""
    if not 0.0 < x < 1.0 or y <= 0.0:
        raise ValueError(f"need x in (0,1) and y > 0, got ({x}, {y})")
    return (1.0 - x) * y / x


@dataclass(frozen=True)
class FamilySpec:
    """A family with optionally fixed parameters, as used for recovery.

    joint_tail marks the one role (the on-law of graph 1 in the
    seven-parameter configuration) whose two free parameters are recovered
    jointly from the mean and the residual tail value.
    """

    family: Family
    fixed: dict[str, float] = field(default_factory=dict)
    joint_tail: bool = False

    def _fixed_tuple(self) -> tuple[float, ...]:
        if Family(self.family) is Family.WEIBULL and not self.joint_tail:
            return (self.fixed["lam"],)
        return ()

    def spec_at_mean(self, mean: float) -> DistSpec:
        return invert_mean(self.family, self._fixed_tuple(), mean)

    def recover(self, role: str, mean: float) -> dict[str, float]:
        spec = self.spec_at_mean(mean)
        fam = Family(self.family)
        if fam is Family.GEOMETRIC:
            return {f"{role}.p": spec.params[0]}
        if fam is Family.WEIBULL:
            return {f"{role}.alpha": spec.params[1]}
        return {f"{role}.alpha": spec.params[0]}

    def to_json(self) -> dict:
        out = {"family": Family(self.family).value}
        if self.fixed:
            out["fixed"] = dict(self.fixed)
        if self.joint_tail:
            out["joint_tail"] = True
        return out

    @staticmethod
    def from_json(obj: dict) -> "FamilySpec":
        return FamilySpec(family=Family(obj["family"]),
                          fixed=dict(obj.get("fixed", {})),
                          joint_tail=bool(obj.get("joint_tail", False)))


@dataclass(frozen=True)
class CaseConfig:
    """Which moment equations to use and which families to recover."""

    name: str
    step1: tuple[SubgraphKind, ...]
    step2: tuple[tuple[SubgraphKind, int], ...]
    families: dict[str, FamilySpec]
    param_names: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.step1) != 3:
            raise ValueError("step 1 needs exactly three statistics")
        lags = [lag for _, lag in self.step2]
        n_lag2 = sum(1 for lag in lags if lag == 2)
        if n_lag2 != (1 if self.uses_lag2 else 0) or not all(
                lag in (1, 2) for lag in lags):
            raise ValueError("step 2 takes lag-1 equations plus at most "
                             "one lag-2 edge equation")
        if len(self.step2) - n_lag2 < 3:
            raise ValueError("step 2 needs at least three lag-1 equations")
        missing = [r for r in _ROLES if r not in self.families]
        if missing:
            raise ValueError(f"families missing roles {missing}")

    @property
    def uses_lag2(self) -> bool:
        return any(lag == 2 for _, lag in self.step2)

    @property
    def lag1_equations(self) -> list[SubgraphKind]:
        return [k for k, lag in self.step2 if lag == 1]

    @property
    def lag2_equation(self) -> SubgraphKind | None:
        for k, lag in self.step2:
            if lag == 2:
                return k
        return None

    def pretty(self, key: str) -> str:
        return self.param_names.get(key, key)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "step1": [k.to_json() for k in self.step1],
            "step2": [{"stat": k.to_json(), "lag": lag}
                      for k, lag in self.step2],
            "families": {r: f.to_json() for r, f in self.families.items()},
            "param_names": dict(self.param_names),
        }

    @staticmethod
    def from_json(obj: dict) -> "CaseConfig":
        return CaseConfig(
            name=obj["name"],
            step1=tuple(SubgraphKind.from_json(k) for k in obj["step1"]),
            step2=tuple((SubgraphKind.from_json(e["stat"]), int(e["lag"]))
                        for e in obj["step2"]),
            families={r: FamilySpec.from_json(f)
                      for r, f in obj["families"].items()},
            param_names=dict(obj.get("param_names", {})),
        )


def _expit(u):
    v = 1.0 / (1.0 + np.exp(-np.clip(u, -40.0, 40.0)))
    return np.clip(v, 1e-12, 1.0 - 1e-12)


def _logit(p):
    return np.log(p / (1.0 - p))


def _jacobian(f, x, fx):
    J = np.empty((fx.size, x.size))
    for j in range(x.size):
        h = 1e-6 * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (f(xp) - f(xm)) / (2.0 * h)
    return J


def damped_newton(f, x0, tol: float = 1e-10, max_iter: int = 200):
    """Newton iteration with backtracking; returns (x, residual, iters, ok).

    The least-squares step handles overdetermined systems and rank
    deficiency alike.
    """
    x = np.asarray(x0, dtype=float).copy()
    fx = f(x)
    for it in range(max_iter):
        nrm = float(np.max(np.abs(fx)))
        if nrm < tol:
            return x, fx, it, True
        J = _jacobian(f, x, fx)
        d = np.linalg.lstsq(J, -fx, rcond=None)[0]
        t, n0 = 1.0, float(np.linalg.norm(fx))
        while t > 1e-12:
            fx_new = f(x + t * d)
            if np.all(np.isfinite(fx_new)) and np.linalg.norm(fx_new) < n0:
                break
            t *= 0.5
        else:
            return x, fx, it, False
        x = x + t * d
        fx = fx_new
    return x, fx, max_iter, float(np.max(np.abs(fx))) < tol


def _dedupe(roots: list[np.ndarray], rtol: float = 1e-5) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for r in roots:
        if not any(np.linalg.norm(r - kept) <= rtol * (1.0 + np.linalg.norm(kept))
                   for kept in out):
            out.append(r)
    return out


def solve_equilibrium(targets, kinds, N: int) -> tuple[StationaryProfile, dict]:
    """Solve the three single-snapshot equations for (pi1, rho1, rho2).

    Unknowns live on a logistic reparametrization of the open cube;
    27 fixed starts, all converged roots recorded, canonical labeling
    rho1 <= rho2.
    """
    targets = [float(t) for t in targets]
    for t, k in zip(targets, kinds):
        if not 0.0 < t < max_count(k, N):
            raise ValueError(
                f"target {t} for {k.label} outside (0, {max_count(k, N)})")

    def unpack(u):
        v = _expit(u)
        return StationaryProfile(rho1=v[1], rho2=v[2], pi1=v[0])

    def f(u):
        p = unpack(u)
        return np.array([
            single_snapshot_moment(k, N, p) / t - 1.0
            for k, t in zip(kinds, targets)])

    roots, iters = [], 0
    grid = _logit(np.array([0.25, 0.5, 0.75]))
    for u0p in grid:
        for u0r1 in grid:
            for u0r2 in grid:
                x, fx, it, ok = damped_newton(f, np.array([u0p, u0r1, u0r2]))
                iters += it
                if ok:
                    p = unpack(x)
                    if p.rho1 > p.rho2:
                        p = p.swapped()
                    roots.append(np.array([p.pi1, p.rho1, p.rho2]))
    roots = _dedupe(roots)
    if not roots:
        raise NoRoot("no start converged for the equilibrium system")
    best = min(roots, key=lambda r: float(np.max(np.abs(
        f(_logit(np.array([r[0], r[1], r[2]])))))))
    prof = StationaryProfile(pi1=best[0], rho1=best[1], rho2=best[2])
    if abs(prof.rho1 - prof.rho2) < 1e-6:
        raise Degenerate(
            f"rho1 ~ rho2 ({prof.rho1:.8f}); pi1 is unidentifiable")
    J = _jacobian(f, _logit(best[[0, 1, 2]]), f(_logit(best)))
    if np.linalg.cond(J) > 1e10:
        raise Degenerate("equilibrium Jacobian is rank deficient")
    diag = {"roots": [r.tolist() for r in roots], "newton_iters": iters}
    return prof, diag


def _profile_from_means(profile: StationaryProfile, ez1: float, ex1: float,
                        ex2: float, **extra) -> DynamicProfile:
    ez2 = theta(profile.pi1, ez1)
    return DynamicProfile(stationary=profile,
                          fbar1_1=1.0 / ex1, fbar2_1=1.0 / ex2,
                          hbar1_1=1.0 / ez1, hbar2_1=1.0 / ez2, **extra)


def solve_dynamics(targets, kinds, profile: StationaryProfile,
                   N: int) -> tuple[float, float, float, dict]:
    """Solve the lag-1 cross-moment equations for (E Z1, E X1, E X2).

    Means are reparametrized as 1 + exp(t); multi-start over a fixed
    mean grid.
    """
    targets = [float(t) for t in targets]

    def unpack(t):
        return 1.0 + np.exp(np.clip(t, -40.0, 40.0))

    def f(t):
        ez1, ex1, ex2 = unpack(t)
        d = _profile_from_means(profile, ez1, ex1, ex2)
        return np.array([
            cross_moment(k, 1, N, d) / tgt - 1.0
            for k, tgt in zip(kinds, targets)])

    roots, iters = [], 0
    grid = np.log(np.array([1.5, 3.0, 6.0]) - 1.0)
    for t0a in grid:
        for t0b in grid:
            for t0c in grid:
                x, fx, it, ok = damped_newton(f, np.array([t0a, t0b, t0c]))
                iters += it
                if ok:
                    roots.append(unpack(x))
    roots = _dedupe(roots)
    if not roots:
        raise NoRoot("no start converged for the cross-moment system")
    best = min(roots, key=lambda r: float(np.max(np.abs(f(np.log(r - 1.0))))))
    J = _jacobian(f, np.log(best - 1.0), f(np.log(best - 1.0)))
    if np.linalg.cond(J) > 1e10:
        raise Degenerate("cross-moment Jacobian is rank deficient")
    diag = {"roots": [r.tolist() for r in roots], "newton_iters": iters}
    return float(best[0]), float(best[1]), float(best[2]), diag


def solve_residual_tail(target: float, kind: SubgraphKind,
                        profile: StationaryProfile, cfg: CaseConfig,
                        means: dict[str, float], N: int) -> float:
    """Recover fbar1(2) from the lag-2 edge equation, which is affine in it.

    The other lag-2 ingredients (the off-time restart pmf values and the
    graph-2 on-tail) are supplied by the configured families at the
    already-estimated means.
    """
    y1 = cfg.families["y1"].spec_at_mean(means["y1"])
    y2 = cfg.families["y2"].spec_at_mean(means["y2"])
    x2 = cfg.families["x2"].spec_at_mean(means["x2"])
    extra = dict(fbar2_2=float(dist.ccdf(x2, 2)) / means["x2"],
                 g1_1=float(dist.pmf(y1, 1)),
                 g2_1=float(dist.pmf(y2, 1)))

    def value(fbar12):
        d = _profile_from_means(profile, means["z1"], means["x1"],
                                means["x2"], fbar1_2=fbar12, **extra)
        return cross_moment(kind, 2, N, d)

    v0, v1 = value(0.0), value(1.0)
    fbar12 = (float(target) - v0) / (v1 - v0)
    if not 0.0 < fbar12 < 1.0:
        raise InfeasibleMean(
            f"lag-2 equation gives fbar1(2) = {fbar12}, outside (0,1)")
    return fbar12


def recover_parameters(cfg: CaseConfig, profile: StationaryProfile,
                       means: dict[str, float],
                       extras: dict[str, float]) -> dict[str, float]:
    """Map recovered means (plus tail extras) to family parameters."""
    params: dict[str, float] = {}
    for role in _ROLES:
        fam = cfg.families[role]
        if fam.joint_tail:
            lam, alpha = weibull_from_mean_and_tail(
                means[role], extras["fbar1_2"])
            params[f"{role}.lam"] = lam
            params[f"{role}.alpha"] = alpha
        else:
            params.update(fam.recover(role, means[role]))
    return params


@dataclass
class EstimationResult:
    profile: StationaryProfile
    means: dict[str, float]
    params: dict[str, float]
    extras: dict[str, float]
    diagnostics: dict

    def to_json(self) -> dict:
        return {
            "profile": {"pi1": self.profile.pi1, "rho1": self.profile.rho1,
                        "rho2": self.profile.rho2},
            "means": dict(self.means),
            "params": dict(self.params),
            "extras": dict(self.extras),
            "diagnostics": self.diagnostics,
        }


def estimate(cfg: CaseConfig, em: EmpiricalMoments, N: int,
             truth: StationaryProfile | None = None) -> EstimationResult:
    """Run the full two-step pipeline on one set of empirical moments.

    When `truth` is given (controlled experiments), the label-swap
    ambiguity is resolved toward the true labeling; otherwise the
    canonical rho1 <= rho2 representative is reported.
    """
    diagnostics: dict = {}

    step1_se = [em.se.get((k.label, 0)) for k in cfg.step1]
    if step1_se and all(s == 0.0 for s in step1_se):
        raise EstimationError(
            "equilibrium", Degenerate("constant count series"))

    try:
        targets1 = [em.get(k, 0) for k in cfg.step1]
        profile, diag1 = solve_equilibrium(targets1, cfg.step1, N)
    except (NoRoot, Degenerate, ValueError, KeyError) as exc:
        raise EstimationError("equilibrium", exc) from exc
    diagnostics["equilibrium"] = diag1

    label_swapped = False
    if truth is not None and (truth.rho1 <= truth.rho2) != (
            profile.rho1 <= profile.rho2):
        profile = profile.swapped()
        label_swapped = True
    diagnostics["label_swapped"] = label_swapped

    try:
        kinds1 = cfg.lag1_equations
        targets2 = [em.get(k, 1) for k in kinds1]
        ez1, ex1, ex2, diag2 = solve_dynamics(targets2, kinds1, profile, N)
    except (NoRoot, Degenerate, ValueError, KeyError) as exc:
        raise EstimationError("dynamics", exc) from exc
    diagnostics["dynamics"] = diag2

    means = {"z1": ez1, "x1": ex1, "x2": ex2,
             "z2": theta(profile.pi1, ez1),
             "y1": theta(profile.rho1, ex1),
             "y2": theta(profile.rho2, ex2)}

    extras: dict[str, float] = {}
    if cfg.uses_lag2:
        try:
            kind2 = cfg.lag2_equation
            extras["fbar1_2"] = solve_residual_tail(
                em.get(kind2, 2), kind2, profile, cfg, means, N)
        except (InfeasibleMean, MeanOutOfRange, ValueError, KeyError) as exc:
            raise EstimationError("residual_tail", exc) from exc

    try:
        params = recover_parameters(cfg, profile, means, extras)
    except (MeanOutOfRange, InconsistentMoments) as exc:
        raise EstimationError("recovery", exc) from exc

    # residual bookkeeping: substitute the solution back into every equation
    dprof = _profile_from_means(profile, ez1, ex1, ex2)
    resid = []
    for k in cfg.step1:
        resid.append(single_snapshot_moment(k, N, profile)
                     / em.get(k, 0) - 1.0)
    for k in cfg.lag1_equations:
        resid.append(cross_moment(k, 1, N, dprof) / em.get(k, 1) - 1.0)
    diagnostics["max_rel_residual"] = float(np.max(np.abs(resid)))

    return EstimationResult(profile=profile, means=means, params=params,
                            extras=extras, diagnostics=diagnostics)
