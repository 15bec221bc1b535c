"""
Command-line interface: matching, exact laws, bounds, verification, sweeps.
"""

import json
import sys

import click
import numpy as np

from .measures import raw_moments, tv_distance
from .matching import (CumulantTriple, match_auto, match_m1, match_m2,
                       MatchResult, RegimeError, InfeasibleError)
from . import runs as runs_mod
from . import bounds as bounds_mod
from . import stein
from .harness import (ExperimentConfig, ConfigError, run_sweep, emit,
                      _build_model, _cumulants, _match, CSV_HEADER)


def _model_options(fn):
    fn = click.option("--kind", type=click.Choice(["one_one", "k1k2", "kruns"]),
                      required=True)(fn)
    fn = click.option("--N", "n_value", type=int, required=True,
                      help="N (trial count; block count for k1k2)")(fn)
    fn = click.option("--k", type=int, default=0, help="k for kruns")(fn)
    fn = click.option("--k1", type=int, default=1)(fn)
    fn = click.option("--k2", type=int, default=1)(fn)
    fn = click.option("--p", type=float, default=None)(fn)
    fn = click.option("--probs-file", type=click.Path(exists=True),
                      default=None, help="one probability per line")(fn)
    return fn


def _make_model(kind, n_value, k, k1, k2, p, probs_file):
    cfg = ExperimentConfig(kind=kind, sweep=[n_value], k1=k1, k2=k2, k=k,
                           p=p, probs_file=probs_file)
    return cfg, _build_model(cfg, n_value)


def _params_dict(match: MatchResult) -> dict:
    out = {"which": match.which, "signed": match.signed,
           "diagnostics": match.diagnostics}
    if match.which == "M1":
        pr = match.m1_params
        out["params"] = {"n": pr.n, "p": pr.p, "lam": pr.lam,
                         "delta": pr.delta}
    else:
        pr = match.m2_params
        out["params"] = {"r": pr.r, "p_bar": pr.p_bar, "lam": pr.lam}
    return out


@click.group()
def main():
    """Compound binomial/negative-binomial-Poisson approximation toolkit."""


@main.command()
@click.option("--gamma1", type=float, default=None)
@click.option("--gamma2", type=float, default=None)
@click.option("--gamma3", type=float, default=None)
@click.option("--m1", type=float, default=None, help="first raw moment")
@click.option("--m2", type=float, default=None, help="second raw moment")
@click.option("--m3", type=float, default=None, help="third raw moment")
@click.option("--target", type=click.Choice(["auto", "M1", "M2"]),
              default="auto")
def match(gamma1, gamma2, gamma3, m1, m2, m3, target):
    """Match compound-target parameters to cumulants or raw moments."""
    from .matching import cumulants_from_raw_moments
    if None not in (gamma1, gamma2, gamma3):
        gamma = CumulantTriple(gamma1, gamma2, gamma3)
    elif None not in (m1, m2, m3):
        gamma = cumulants_from_raw_moments(m1, m2, m3)
    else:
        raise click.ClickException(
            "provide --gamma1/2/3 or --m1/2/3 (all three)")
    try:
        if target == "auto":
            result = match_auto(gamma)
        elif target == "M1":
            params = match_m1(gamma)
            result = MatchResult("M1", params, None, params.lam < 0, {})
        else:
            params = match_m2(gamma)
            result = MatchResult("M2", None, params, params.lam < 0, {})
    except (RegimeError, InfeasibleError) as exc:
        raise click.ClickException(str(exc))
    out = _params_dict(result)
    out["gamma"] = list(gamma.as_tuple())
    click.echo(json.dumps(out, indent=2))


@main.command()
@_model_options
@click.option("--out", type=click.Path(), default=None)
def law(kind, n_value, k, k1, k2, p, probs_file, out):
    """Exact pmf of the run statistic as JSON."""
    try:
        _, model = _make_model(kind, n_value, k, k1, k2, p, probs_file)
        measure = runs_mod.exact_law(model)
    except (ConfigError, runs_mod.ModelError) as exc:
        raise click.ClickException(str(exc))
    text = json.dumps(measure.to_dict(), indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@main.command()
@_model_options
@click.option("--target", type=click.Choice(["auto", "M1", "M2"]),
              default="auto")
@click.option("--mode", type=click.Choice(["exact", "prime"]),
              default="exact")
@click.option("--theorem", type=click.Choice(["family", "main"]),
              default="family",
              help="family-specific display or the master assembly")
def bound(kind, n_value, k, k1, k2, p, probs_file, target, mode, theorem):
    """Evaluate an error bound; prints a BoundReport JSON."""
    from .harness import _family_bound
    try:
        cfg, model = _make_model(kind, n_value, k, k1, k2, p, probs_file)
        cfg.target = target
        cfg.mode = mode
        use_dp = model.L <= cfg.dp_limit
        lawm = runs_mod.exact_law(model) if use_dp else None
        gamma = _cumulants(cfg, model, lawm)
        matched = _match(cfg, gamma)
        if theorem == "main":
            report = bounds_mod.bound_theorem_main(model, matched, mode=mode)
            wx = None
        else:
            report, wx = _family_bound(cfg, model, n_value, matched)
    except (ConfigError, runs_mod.ModelError, RegimeError,
            InfeasibleError) as exc:
        raise click.ClickException(str(exc))
    out = {"bound_value": report.bound_value, "applicable": report.applicable,
           "reasons": report.reasons, "components": report.components,
           "match": _params_dict(matched)}
    if wx is not None:
        out["bound_wang_xia"] = wx
    click.echo(json.dumps(out, indent=2, default=float))


@main.command()
def verify():
    """Quick self-test battery: oracles, Stein residuals, matching."""
    rng = np.random.default_rng(7)
    failures = 0

    def report(name, ok):
        nonlocal failures
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    for kind, k1, k2, L in (("one_one", 1, 1, 10), ("k1k2", 1, 2, 12),
                            ("kruns", 0, 2, 11)):
        probs = rng.uniform(0.15, 0.85, L)
        model = runs_mod.RunsModel(kind, k1, k2, probs)
        d = tv_distance(runs_mod.exact_law(model),
                        runs_mod.brute_force_law(model))
        report(f"exact law vs enumeration ({kind})", d < 1e-12)

    from .measures import (TargetParamsM1, TargetParamsM2, make_compound_m1,
                           make_compound_m2)
    from .stein import CompoundOperator, solve_stein_equation
    for _ in range(3):
        pr = TargetParamsM1(n=int(rng.integers(5, 30)),
                            p=float(rng.uniform(0.1, 0.5)),
                            lam=float(rng.uniform(0.1, 2.0)))
        target = make_compound_m1(pr)
        op = CompoundOperator.from_m1(pr)
        sol = solve_stein_equation(op, target, lambda x: float(x <= 3))
        report(f"Stein residual M1 (n={pr.n})", sol.residual < 1e-9)

    from .matching import cumulants_from_raw_moments
    pr2 = TargetParamsM2(r=3.0, p_bar=0.5, lam=0.4)
    gam = cumulants_from_raw_moments(*raw_moments(make_compound_m2(pr2)))
    back = match_m2(gam)
    ok = (abs(back.r - pr2.r) < 1e-6 and abs(back.p_bar - pr2.p_bar) < 1e-6
          and abs(back.lam - pr2.lam) < 1e-6)
    report("matching round trip M2", ok)

    if failures:
        raise click.ClickException(f"{failures} check(s) failed")
    click.echo("all checks passed")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              required=True)
@click.option("--out", type=click.Path(), default=None,
              help="override output path")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default=None, help="override output format")
@click.option("--plot", type=click.Path(), default=None,
              help="also render a log-log decay figure to this file")
@click.pass_context
def sweep(ctx, config_path, out, fmt, plot):
    """Run a sweep from a JSON config; emit CSV/JSON (and optional plot)."""
    try:
        config = ExperimentConfig.from_file(config_path)
        if out is not None:
            config.output_path = out
        if fmt is not None:
            config.output_format = fmt
        if plot is not None:
            config.plot = plot
        records = run_sweep(config)
        text = emit(records, config.output_format, config.output_path)
    except (ConfigError, runs_mod.ModelError) as exc:
        raise click.ClickException(str(exc))
    if config.output_path is None:
        click.echo(text, nl=False)
    if config.plot:
        from .plotting import render_sweep_plot
        render_sweep_plot(records, config.plot)
    if records and not any(r.applicable for r in records):
        ctx.exit(2)


if __name__ == "__main__":
    main()
