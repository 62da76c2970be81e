"""Replication experiment runner.

Parses a JSON experiment config, runs R independent replications of
simulate -> accumulate -> estimate (every configured case sees the same
trace within a replication), and writes a deterministic report: a long
format replications CSV, per-parameter histogram CSVs, and a summary
JSON. Per-replication seeds are derived from the master seed with a fixed
64-bit mixing function, so output is byte-identical for any worker count.

Wall-clock timings go to a separate sidecar file so report bytes stay a
pure function of (config, seed).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimator import CaseConfig, EstimationError, estimate
from .graph_dynamics import ModelSpec, simulate, stationary_profile
from .moments import EmpiricalMoments, MomentAccumulator
from .subgraph_counts import SubgraphKind

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "seed", "T", "R", "N", "workers", "model",
             "case", "cases", "bins", "out_dir"}
_MODEL_KEYS = {"N", "x1", "y1", "x2", "y2", "z1", "z2"}
_CASE_KEYS = {"name", "step1", "step2", "families", "param_names"}
_DIST_KEYS = {"family", "params"}
_FAMILY_KEYS = {"family", "fixed", "joint_tail"}


class ConfigError(ValueError):
    """Base class for config loading problems."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def mix64(seed: int, r: int) -> int:
    """Fixed splitmix64-style mixer deriving replication seed r."""
    mask = (1 << 64) - 1
    z = (seed + (r + 1) * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    T: int
    R: int
    N: int
    model: ModelSpec
    cases: tuple[CaseConfig, ...]
    workers: int = 1
    bins: int = 40
    out_dir: str | None = None

    def statistics(self) -> list[SubgraphKind]:
        seen: dict[str, SubgraphKind] = {}
        for case in self.cases:
            for k in case.step1:
                seen.setdefault(k.label, k)
            for k, _lag in case.step2:
                seen.setdefault(k.label, k)
        return [seen[lb] for lb in sorted(seen)]

    def to_json(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed, "T": self.T, "R": self.R, "N": self.N,
            "workers": self.workers, "bins": self.bins,
            "model": self.model.to_json(),
            "cases": [c.to_json() for c in self.cases],
        }
        if self.out_dir is not None:
            out["out_dir"] = self.out_dir
        return out


def _validate(obj: dict) -> tuple[ExperimentConfig | None, list[str]]:
    problems: list[str] = []
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown top-level keys {sorted(unknown)}")
    if obj.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        problems.append(f"unsupported schema_version {obj['schema_version']}")
    if "seed" not in obj:
        problems.append("seed is mandatory (no wall-clock default)")
    elif not isinstance(obj["seed"], int) or not 0 <= obj["seed"] < 2**64:
        problems.append("seed must be a 64-bit unsigned integer")
    T = obj.get("T")
    if not isinstance(T, int) or T < 3:
        problems.append(f"T must be an integer >= 3, got {T!r}")
    R = obj.get("R")
    if not isinstance(R, int) or R < 1:
        problems.append(f"R must be an integer >= 1, got {R!r}")
    N = obj.get("N")
    if N is not None and (not isinstance(N, int) or N < 2):
        problems.append(f"N must be an integer >= 2, got {N!r}")
    workers = obj.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        problems.append(f"workers must be a positive integer, got {workers!r}")
    bins = obj.get("bins", 40)
    if not isinstance(bins, int) or bins < 1:
        problems.append(f"bins must be a positive integer, got {bins!r}")

    model = None
    if "model" not in obj:
        problems.append("model is mandatory")
    else:
        mob = obj["model"]
        bad = set(mob) - _MODEL_KEYS if isinstance(mob, dict) else set()
        missing = _MODEL_KEYS - set(mob) if isinstance(mob, dict) else set()
        if bad:
            problems.append(f"unknown model keys {sorted(bad)}")
        if missing:
            problems.append(f"model missing keys {sorted(missing)}")
        if isinstance(mob, dict):
            for role in sorted((set(mob) & _MODEL_KEYS) - {"N"}):
                dob = mob[role]
                extra = set(dob) - _DIST_KEYS if isinstance(dob, dict) else set()
                if extra:
                    problems.append(
                        f"unknown keys {sorted(extra)} in model.{role}")
        if not bad and not missing:
            try:
                model = ModelSpec.from_json(mob)
            except (ValueError, KeyError, TypeError) as exc:
                problems.append(f"model: {exc}")
    if model is not None:
        if N is None:
            N = model.N
        elif isinstance(N, int) and N != model.N:
            problems.append(f"N ({N}) disagrees with model.N ({model.N})")

    raw_cases = obj.get("cases")
    if raw_cases is None and "case" in obj:
        raw_cases = [obj["case"]]
    cases: list[CaseConfig] = []
    if not raw_cases:
        problems.append("at least one case is required ('case' or 'cases')")
    else:
        for idx, cob in enumerate(raw_cases):
            if not isinstance(cob, dict):
                problems.append(f"case {idx} must be a JSON object")
                continue
            extra = set(cob) - _CASE_KEYS
            if extra:
                problems.append(f"unknown keys {sorted(extra)} in case {idx}")
                continue
            for role, fob in (cob.get("families") or {}).items():
                bad = set(fob) - _FAMILY_KEYS if isinstance(fob, dict) else set()
                if bad:
                    problems.append(
                        f"unknown keys {sorted(bad)} in case {idx} "
                        f"family {role}")
            try:
                cases.append(CaseConfig.from_json(cob))
            except (ValueError, KeyError, TypeError) as exc:
                problems.append(f"case {idx}: {exc}")
    names = [c.name for c in cases]
    if len(set(names)) != len(names):
        problems.append(f"case names must be unique, got {names}")
    if isinstance(N, int) and model is not None:
        for case in cases:
            for k in list(case.step1) + [k for k, _ in case.step2]:
                if k.l is not None and k.l > N:
                    problems.append(
                        f"case {case.name}: statistic {k.label} needs N >= {k.l}")

    if problems:
        return None, problems
    return ExperimentConfig(
        seed=obj["seed"], T=T, R=R, N=N, model=model, cases=tuple(cases),
        workers=workers, bins=bins, out_dir=obj.get("out_dir")), []


def parse_config(obj: dict) -> ExperimentConfig:
    cfg, problems = _validate(obj)
    if problems:
        raise ValidationError(problems)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Load and validate an experiment config; every violation is listed."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ValidationError(["config must be a JSON object"])
    return parse_config(obj)


def replication_moments(cfg: ExperimentConfig, r: int) -> EmpiricalMoments:
    """Simulate replication r and accumulate its empirical moments."""
    stats = cfg.statistics()
    acc = MomentAccumulator(stats, cfg.T)
    rng = np.random.default_rng(mix64(cfg.seed, r))
    simulate(cfg.model, cfg.T, stats, rng, acc.push)
    return acc.finish()


def _run_replication(cfg_json: dict, r: int) -> dict:
    cfg = parse_config(cfg_json)
    truth = stationary_profile(cfg.model)
    t0 = time.perf_counter()
    em = replication_moments(cfg, r)
    sim_s = time.perf_counter() - t0
    out = {"rep": r, "sim_seconds": sim_s, "est_seconds": 0.0, "cases": {}}
    for case in cfg.cases:
        t1 = time.perf_counter()
        try:
            res = estimate(case, em, cfg.N, truth=truth)
            out["cases"][case.name] = {
                "params": {case.pretty(k): v for k, v in res.params.items()},
                "error": None, "stage": None,
            }
        except EstimationError as exc:
            out["cases"][case.name] = {
                "params": None, "error": str(exc), "stage": exc.stage,
            }
        out["est_seconds"] += time.perf_counter() - t1
    return out


def summarize(values: list[float]) -> tuple[float, float]:
    """Sample mean and population-style std (divisor R) of estimates."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 1:
        raise ValueError("need at least one row to summarize")
    return float(arr.mean()), float(arr.std(ddof=0))


def emit_histograms(rows: dict[str, dict[str, list[float]]], bins: int,
                    out_dir: Path, multi_case: bool) -> list[Path]:
    """Write one (bin_left, bin_right, count) CSV per case parameter."""
    written = []
    for case_name, per_param in sorted(rows.items()):
        for pname, values in sorted(per_param.items()):
            counts, edges = np.histogram(np.asarray(values), bins=bins)
            stem = (f"hist_{case_name}_{pname}" if multi_case
                    else f"hist_{pname}")
            path = out_dir / f"{stem}.csv"
            lines = ["bin_left,bin_right,count"]
            lines += [f"{edges[i]!r},{edges[i + 1]!r},{int(c)}"
                      for i, c in enumerate(counts)]
            path.write_text("\n".join(lines) + "\n")
            written.append(path)
    return written


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    summary: dict            # case -> param -> {"mean", "std"}
    failures: dict           # case -> stage -> count
    n_success: dict          # case -> int
    rows: list[dict] = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_json(),
            "cases": {
                name: {
                    "n_success": self.n_success[name],
                    "failures": self.failures[name],
                    "params": self.summary[name],
                }
                for name in self.summary
            },
        }


def run_experiment(cfg: ExperimentConfig, out_dir=None,
                   workers: int | None = None) -> ExperimentReport:
    """Run R replications and write report files if out_dir is given.

    Every case within a replication shares the replication's trace. A
    failed replication contributes to the failure counters of its case
    only; the run aborts only if every replication failed for every case.
    """
    workers = workers or cfg.workers
    cfg_json = cfg.to_json()
    t_start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replication, [cfg_json] * cfg.R,
                                    range(cfg.R)))
    else:
        results = [_run_replication(cfg_json, r) for r in range(cfg.R)]
    results.sort(key=lambda row: row["rep"])

    per_case: dict[str, dict[str, list[float]]] = {
        c.name: {} for c in cfg.cases}
    failures: dict[str, dict[str, int]] = {c.name: {} for c in cfg.cases}
    n_success = {c.name: 0 for c in cfg.cases}
    for row in results:
        for name, cell in row["cases"].items():
            if cell["error"] is None:
                n_success[name] += 1
                for pname, v in cell["params"].items():
                    per_case[name].setdefault(pname, []).append(v)
            else:
                stage = cell["stage"] or "unknown"
                failures[name][stage] = failures[name].get(stage, 0) + 1
    if all(v == 0 for v in n_success.values()):
        raise RuntimeError("every replication failed for every case")

    summary = {
        name: {pname: dict(zip(("mean", "std"), summarize(vals)))
               for pname, vals in sorted(per_param.items())}
        for name, per_param in per_case.items()
    }
    timings = {
        "total_seconds": time.perf_counter() - t_start,
        "sim_seconds": sum(r["sim_seconds"] for r in results),
        "est_seconds": sum(r["est_seconds"] for r in results),
    }
    report = ExperimentReport(config=cfg, summary=summary, failures=failures,
                              n_success=n_success, rows=results,
                              timings=timings)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
        lines = ["rep,case,param,value"]
        for row in results:
            for name in (c.name for c in cfg.cases):
                cell = row["cases"][name]
                if cell["error"] is None:
                    for pname in sorted(cell["params"]):
                        lines.append(
                            f"{row['rep']},{name},{pname},"
                            f"{cell['params'][pname]!r}")
                else:
                    lines.append(f"{row['rep']},{name},__error__,"
                                 f"{cell['stage']}")
        (out / "replications.csv").write_text("\n".join(lines) + "\n")
        multi = len(cfg.cases) > 1
        emit_histograms(per_case, cfg.bins, out, multi)
        from .figures import render_histograms
        render_histograms(per_case, cfg.bins, out, multi)
        (out / "timings.json").write_text(
            json.dumps(timings, indent=2, sort_keys=True) + "\n")
    return report
