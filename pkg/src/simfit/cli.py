"""Command-line entry points.

`simfit run` executes a replication experiment from a JSON config and
writes report.json, replications.csv and histogram CSV/PNG files.
`simfit moments` compares closed-form moments against a single simulated
replication. `simfit estimate` runs the two-step estimator on previously
saved empirical moments.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .estimator import CaseConfig, EstimationError, estimate as run_estimate
from .harness import (ConfigError, load_config, replication_moments,
                      run_experiment)
from .moments import EmpiricalMoments, cross_moment, dynamic_profile

EXIT_CONFIG = 2
EXIT_ALL_FAILED = 3


def _load(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """Simulation and moment-based inference for mode-switched graphs."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Experiment config JSON.")
@click.option("--workers", type=int, default=None,
              help="Process count; overrides the config. Output bytes do "
                   "not depend on this value.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default=None, help="Output directory; overrides the config.")
def run(config_path, workers, out_dir):
    """Run the replication experiment described by --config."""
    cfg = _load(config_path)
    out = out_dir or cfg.out_dir or "."
    try:
        report = run_experiment(cfg, out_dir=out, workers=workers)
    except RuntimeError as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(EXIT_ALL_FAILED)
    for name in sorted(report.summary):
        n_ok = report.n_success[name]
        click.echo(f"{name}: {n_ok}/{cfg.R} replications succeeded")
        for pname, cell in report.summary[name].items():
            click.echo(f"  {pname}: mean={cell['mean']:.6f} "
                       f"std={cell['std']:.6f}")
    click.echo(f"report written to {Path(out).resolve()}")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Experiment config JSON.")
@click.option("--dump", type=click.Path(dir_okay=False), default=None,
              help="Also write the empirical moments as JSON "
                   "(input format for 'simfit estimate').")
def moments(config_path, dump):
    """Closed-form moments vs one simulated replication's averages."""
    cfg = _load(config_path)
    em = replication_moments(cfg, 0)
    d = dynamic_profile(cfg.model)
    kinds = {k.label: k for k in cfg.statistics()}
    click.echo(f"{'stat':>6} {'lag':>3} {'closed-form':>16} "
               f"{'empirical':>16} {'std.err':>12}")
    for (label, lag) in sorted(em.values):
        kind = kinds[label]
        try:
            theo = cross_moment(kind, lag, cfg.N, d)
            theo_s = f"{theo:16.6f}"
        except ValueError:
            theo_s = f"{'-':>16}"
        click.echo(f"{label:>6} {lag:>3} {theo_s} "
                   f"{em.get(kind, lag):16.6f} {em.get_se(kind, lag):12.6f}")
    if dump:
        payload = {"N": cfg.N, "moments": em.to_json()}
        Path(dump).write_text(json.dumps(payload, indent=2, sort_keys=True)
                              + "\n")
        click.echo(f"moments written to {dump}")


@main.command(name="estimate")
@click.option("--moments", "moments_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON with keys 'N' and 'moments' "
                   "(as written by 'simfit moments --dump').")
@click.option("--case", "case_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Case config JSON (equations and families).")
def estimate_cmd(moments_path, case_path):
    """Run the two-step estimator on saved empirical moments."""
    try:
        payload = json.loads(Path(moments_path).read_text())
        em = EmpiricalMoments.from_json(payload["moments"])
        N = int(payload["N"])
        case = CaseConfig.from_json(json.loads(Path(case_path).read_text()))
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        result = run_estimate(case, em, N)
    except EstimationError as exc:
        click.echo(f"estimation failed: {exc}", err=True)
        sys.exit(EXIT_ALL_FAILED)
    out = result.to_json()
    out["params"] = {case.pretty(k): v for k, v in out["params"].items()}
    click.echo(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
