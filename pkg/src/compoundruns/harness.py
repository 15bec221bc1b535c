"""
Experiment orchestration: sweeps over N, persistence, slope estimation.

A sweep builds, for each N, the run model, its exact law (or a seeded
Monte Carlo estimate beyond the DP feasibility limit), the matched
compound target, the total-variation distance and the family-specific
error bound, and emits the records as CSV or JSON with deterministic
formatting.
"""

from dataclasses import dataclass, fields as dc_fields, asdict
import json
import math

import numpy as np

from .measures import (LatticeMeasure, tv_distance, raw_moments,
                       make_compound_m1, make_compound_m2)
from .matching import (MatchResult, match_auto, match_m1, match_m2,
                       cumulants_from_raw_moments, RegimeError,
                       InfeasibleError)
from . import runs as runs_mod
from . import bounds as bounds_mod
from . import stein

CSV_HEADER = ("N,k1,k2,p,gamma1,gamma2,gamma3,target,n,p_match,lambda,"
              "delta,r,p_bar,theta,tv,bound,bound_wx,ratio,applicable")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass
class ExperimentConfig:
    """Sweep description: model family, parameter, N grid, output."""

    kind: str
    sweep: list
    k1: int = 1
    k2: int = 1
    k: int = 0
    p: float | None = None
    probs_file: str | None = None
    target: str = "auto"            # auto | M1 | M2
    mode: str = "exact"             # exact | prime
    seed: int = 0
    mc_samples: int = 1_000_000
    dp_limit: int = 20_000
    slope_tolerance: float = 0.15
    output_format: str = "csv"      # csv | json
    output_path: str | None = None
    plot: str | None = None

    def __post_init__(self):
        if self.kind not in ("one_one", "k1k2", "kruns"):
            raise ConfigError(f"unknown kind {self.kind!r}")
        if not self.sweep:
            raise ConfigError("sweep must be a nonempty list of N values")
        if self.target not in ("auto", "M1", "M2"):
            raise ConfigError(f"unknown target {self.target!r}")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.p is None and self.probs_file is None:
            raise ConfigError("either p or probs_file is required")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class SweepRecord:
    """One sweep row; optional fields stay None when not applicable."""

    N: int
    k1: int
    k2: int
    p: float | None
    gamma1: float | None = None
    gamma2: float | None = None
    gamma3: float | None = None
    target: str | None = None
    n: int | None = None
    p_match: float | None = None
    lam: float | None = None
    delta: float | None = None
    r: float | None = None
    p_bar: float | None = None
    theta: float | None = None
    tv: float | None = None
    bound: float | None = None
    bound_wx: float | None = None
    ratio: float | None = None
    applicable: bool = False
    tv_is_estimate: bool = False
    note: str | None = None


def _build_model(config: ExperimentConfig, N: int) -> runs_mod.RunsModel:
    if config.kind == "one_one":
        k1, k2 = 1, 1
        L = N
    elif config.kind == "k1k2":
        k1, k2 = config.k1, config.k2
        L = N * (k1 + k2 - 1)
    else:
        k1, k2 = 0, config.k
        L = N
    if config.probs_file is not None:
        probs = np.loadtxt(config.probs_file, ndmin=1)
        if probs.size != L:
            raise ConfigError(
                f"probs_file holds {probs.size} values but N={N} needs {L}")
    else:
        probs = np.full(L, config.p)
    return runs_mod.RunsModel(config.kind, k1, k2, probs)


def _cumulants(config, model, law):
    if law is not None:
        return cumulants_from_raw_moments(*raw_moments(law))
    if not model.identical_p():
        raise ConfigError("closed cumulants beyond the DP limit need identical p")
    p = float(model.probs[0])
    if model.kind == "one_one":
        return runs_mod.closed_cumulants_11(model.probs)
    if model.kind == "k1k2":
        return runs_mod.closed_cumulants_k1k2(model.probs, model.k1, model.k2)
    return runs_mod.closed_cumulants_kruns(p, model.k2, model.L)


def _match(config, gamma) -> MatchResult:
    if config.target == "auto":
        return match_auto(gamma)
    if config.target == "M1":
        params = match_m1(gamma)
        return MatchResult("M1", params, None, params.lam < 0, {})
    params = match_m2(gamma)
    return MatchResult("M2", None, params, params.lam < 0, {})


def _target_measure(match: MatchResult) -> LatticeMeasure:
    if match.which == "M1":
        return make_compound_m1(match.m1_params)
    return make_compound_m2(match.m2_params)


def _mc_law(model, n_samples: int, rng) -> LatticeMeasure:
    """Pooled empirical pmf of W from simulated trial sequences."""
    L = model.L
    pat = model.pattern
    counts = np.zeros(L + 2, dtype=np.int64)
    chunk = max(1, min(n_samples, 8_000_000 // max(L, 1)))
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        bits = rng.random((size, L)) < model.probs
        hit = np.ones((size, L), dtype=bool)
        for u, b in enumerate(pat):
            rolled = np.roll(bits, -(model.shift + u), axis=1)
            hit &= rolled if b else ~rolled
        W = hit.sum(axis=1)
        counts += np.bincount(W, minlength=counts.size)
        done += size
    hi = int(np.nonzero(counts)[0][-1]) + 1
    return LatticeMeasure(0, counts[:hi] / counts.sum())


def _family_bound(config, model, N, match):
    """(BoundReport, wang_xia_or_None) for the model's family."""
    p = float(model.probs[0]) if model.identical_p() else None
    if model.kind == "one_one":
        return bounds_mod.bound_11runs(N, model.probs, match), None
    if model.kind == "k1k2":
        if p is None:
            return bounds_mod.bound_theorem_main(model, match,
                                                 mode=config.mode), None
        return bounds_mod.bound_k1k2(N, model.k1, model.k2, p, match), None
    if p is None:
        raise ConfigError("k-runs bounds need identical p")
    return (bounds_mod.bound_kruns_T5(N, model.k2, p),
            bounds_mod.bound_wang_xia(N, model.k2, p))


def run_sweep(config: ExperimentConfig) -> list:
    """Evaluate every N in the sweep; failures become inapplicable rows."""
    records = []
    for N in config.sweep:
        rec = SweepRecord(N=int(N), k1=config.k1 if config.kind != "kruns" else 0,
                          k2=config.k2 if config.kind != "kruns" else config.k,
                          p=config.p)
        records.append(rec)
        try:
            model = _build_model(config, int(N))
        except (runs_mod.ModelError, ConfigError) as exc:
            rec.note = str(exc)
            continue
        use_dp = model.L <= config.dp_limit and model.window <= runs_mod.MAX_WINDOW
        law = runs_mod.exact_law(model) if use_dp else None
        try:
            gamma = _cumulants(config, model, law)
            rec.gamma1, rec.gamma2, rec.gamma3 = gamma.as_tuple()
            match = _match(config, gamma)
        except (RegimeError, InfeasibleError, ConfigError) as exc:
            rec.note = str(exc)
            continue
        rec.target = match.which
        if match.which == "M1":
            pr = match.m1_params
            rec.n, rec.p_match, rec.lam, rec.delta = pr.n, pr.p, pr.lam, pr.delta
        else:
            pr = match.m2_params
            rec.r, rec.p_bar, rec.lam = pr.r, pr.p_bar, pr.lam
        try:
            rec.theta = stein.theta_constants(pr).theta
        except stein.InapplicableError:
            rec.theta = None
        target = _target_measure(match)
        if law is None:
            rng = np.random.default_rng([config.seed, int(N)])
            law_est = _mc_law(model, config.mc_samples, rng)
            rec.tv = tv_distance(law_est, target, mass_tol=1.0)
            rec.tv_is_estimate = True
        else:
            rec.tv = tv_distance(law, target, mass_tol=1e-6)
        try:
            report, wx = _family_bound(config, model, int(N), match)
        except (runs_mod.ModelError, ConfigError) as exc:
            rec.note = str(exc)
            continue
        rec.bound_wx = wx
        rec.applicable = report.applicable
        if report.applicable:
            rec.bound = report.bound_value
            if rec.bound and rec.bound > 0:
                rec.ratio = rec.tv / rec.bound
        else:
            rec.note = ";".join(f"{k}={v}" for k, v in report.reasons.items())
    return records


def fit_decay_slope(records, value=lambda r: r.tv) -> dict:
    """Least-squares slope of log(value) against log(N).

    Rows with missing or nonpositive values are excluded; needs >= 3."""
    xs, ys = [], []
    for rec in records:
        v = value(rec)
        if v is not None and v > 0.0 and math.isfinite(v):
            xs.append(math.log(rec.N))
            ys.append(math.log(v))
    if len(xs) < 3:
        raise ValueError("need at least 3 positive values for a slope fit")
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * np.asarray(xs) + intercept
    resid = np.asarray(ys) - fitted
    total = np.asarray(ys) - np.mean(ys)
    r2 = 1.0 - float(resid @ resid) / float(total @ total) if total.any() else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


# ---------------------------------------------------------------------------
# persistence


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


_CSV_FIELDS = ("N", "k1", "k2", "p", "gamma1", "gamma2", "gamma3", "target",
               "n", "p_match", "lam", "delta", "r", "p_bar", "theta", "tv",
               "bound", "bound_wx", "ratio", "applicable")


def emit(records, fmt: str, path: str | None = None) -> str:
    """Serialize records; returns the text and optionally writes it."""
    if fmt == "csv":
        lines = [CSV_HEADER]
        for rec in records:
            lines.append(",".join(_fmt(getattr(rec, f)) for f in _CSV_FIELDS))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        payload = [asdict(rec) for rec in records]
        text = json.dumps(payload, indent=2) + "\n"
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    if path is not None:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc}") from exc
    return text
