"""
Three-cumulant moment matching for the compound targets.

Given the factorial cumulants (Gamma1, Gamma2, Gamma3) of a counting law,
choose the target family by the sign of Gamma2 (Gamma2 = Var - Mean) and
solve the matching systems

    M1:  n p + lam = Gamma1, -(n+delta) p^2 = Gamma2, (n+delta) p^3 = Gamma3
    M2:  r q_bar/p_bar + lam = Gamma1, r q_bar^2/p_bar^2 = Gamma2,
         r q_bar^3/p_bar^3 = Gamma3

for the parameter sets {n, p, lam, delta} and {r, p_bar, lam}.  A negative
lam is accepted and flags a signed target measure.
"""

from dataclasses import dataclass
import math

from .measures import CumulantTriple, TargetParamsM1, TargetParamsM2
from . import stein


class RegimeError(ValueError):
    """The cumulant sign pattern selects no (or the other) target family."""


class InfeasibleError(ValueError):
    """The matching system has no parameters in the admissible domain."""


@dataclass(frozen=True)
class MatchResult:
    """Outcome of automatic matching: chosen family, parameters, flags."""

    which: str                       # "M1" or "M2"
    m1_params: TargetParamsM1 | None
    m2_params: TargetParamsM2 | None
    signed: bool
    diagnostics: dict

    @property
    def params(self):
        return self.m1_params if self.which == "M1" else self.m2_params

    @property
    def beta(self) -> float:
        """The unified-operator beta of the matched base family."""
        if self.which == "M1":
            return -self.m1_params.p / self.m1_params.q
        return self.m2_params.q_bar


def cumulants_from_raw_moments(m1: float, m2: float, m3: float) -> CumulantTriple:
    """Factorial cumulants from the first three raw moments."""
    t1 = m1
    t2 = m2 - m1
    t3 = m3 - 3.0 * m2 + 2.0 * m1
    return CumulantTriple(
        gamma1=t1,
        gamma2=t2 - t1 * t1,
        gamma3=0.5 * (t3 - 3.0 * t1 * t2 + 2.0 * t1 ** 3),
    )


def _close(x: float, y: float, rel: float) -> bool:
    return abs(x - y) <= rel * max(1.0, abs(x), abs(y))


def match_m1(gamma: CumulantTriple) -> TargetParamsM1:
    """Solve the M1 system.  Requires Gamma2 < 0 < Gamma3; the real size
    n_tilde = -Gamma2^3/Gamma3^2 is floored into (n, delta)."""
    g1, g2, g3 = gamma.as_tuple()
    if not (g2 < 0.0 < g3):
        raise RegimeError("M1 matching needs Gamma2 < 0 < Gamma3")
    p = -g3 / g2
    if not 0.0 < p < 1.0:
        raise InfeasibleError(f"matched p = {p!r} outside (0,1)")
    n_tilde = -(g2 ** 3) / (g3 ** 2)
    n = math.floor(n_tilde)
    delta = n_tilde - n
    if 1.0 - delta < 1e-9:          # n_tilde is integer up to float noise
        n += 1
        delta = 0.0
    if n < 1:
        raise InfeasibleError(f"matched size n_tilde = {n_tilde!r} below 1")
    lam = g1 - n * p
    params = TargetParamsM1(n=n, p=p, lam=lam, delta=delta)
    assert _close(n * p + lam, g1, 1e-10)
    assert _close(-(n + delta) * p * p, g2, 1e-10)
    assert _close((n + delta) * p ** 3, g3, 1e-10)
    return params


def match_m2(gamma: CumulantTriple) -> TargetParamsM2:
    """Solve the M2 system.  Requires Gamma2 > 0 and Gamma3 > 0; lam < 0
    (signed target) is legal and flagged on the returned parameters."""
    g1, g2, g3 = gamma.as_tuple()
    if g2 <= 0.0:
        raise RegimeError("M2 matching needs Gamma2 > 0")
    if g3 <= 0.0 or g2 + g3 <= 0.0:
        raise InfeasibleError("M2 matching needs Gamma3 > 0")
    p_bar = g2 / (g2 + g3)
    r = g2 ** 3 / g3 ** 2
    lam = g1 - g2 ** 2 / g3
    params = TargetParamsM2(r=r, p_bar=p_bar, lam=lam)
    q_bar = params.q_bar
    assert _close(r * q_bar / p_bar + lam, g1, 1e-10)
    assert _close(r * (q_bar / p_bar) ** 2, g2, 1e-10)
    assert _close(r * (q_bar / p_bar) ** 3, g3, 1e-10)
    return params


def select_regime(gamma: CumulantTriple) -> str:
    """"M1" when Gamma2 < 0 (mean exceeds variance), "M2" when Gamma2 > 0."""
    if gamma.gamma2 < 0.0:
        return "M1"
    if gamma.gamma2 > 0.0:
        return "M2"
    raise RegimeError(
        "Gamma2 = 0: regime undetermined (a pure Poisson target may fit)"
    )


def match_auto(gamma: CumulantTriple) -> MatchResult:
    """Select the regime from Gamma2 and solve the matching system,
    attaching applicability diagnostics (assumption gate, theta, signs)."""
    which = select_regime(gamma)
    if which == "M1":
        params = match_m1(gamma)
    else:
        params = match_m2(gamma)
    assumptions = stein.check_assumptions(params)
    try:
        theta = stein.theta_constants(params).theta
    except stein.InapplicableError:
        theta = None
    diagnostics = {
        "h_ok": assumptions["h1_ok" if which == "M1" else "h2_ok"],
        "theta": theta,
        "lambda_sign": (0 if params.lam == 0 else math.copysign(1, params.lam)),
        "p_in_range": True,
    }
    return MatchResult(
        which=which,
        m1_params=params if which == "M1" else None,
        m2_params=params if which == "M2" else None,
        signed=params.lam < 0.0,
        diagnostics=diagnostics,
    )
