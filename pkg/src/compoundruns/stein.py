"""
Stein operators for the target families and their perturbation machinery.

The unified operator A g(k) = (alpha + beta k) g(k+1) - k g(k) covers the
binomial, negative binomial and pseudo-binomial families.  The compound
targets (binomial or negative binomial convolved with Poisson) satisfy the
perturbed form

    A g(k) = (a + beta k) g(k+1) - k g(k) - lam beta [g(k+2) - g(k+1)],

with a = alpha + lam (1 - beta).  This module provides the operators, a
solver for the Stein equation on a truncated support, the simple and
perturbed bounds on ||Delta g||, and the assumption gates (H1)/(H2) with
their theta/Theta constants.
"""

from dataclasses import dataclass
import math

import numpy as np

from .measures import (LatticeMeasure, TargetParamsM1, TargetParamsM2,
                       NumericalInstabilityError)


class AssumptionError(ValueError):
    """A perturbation-size assumption (H1)/(H2) fails."""


class InapplicableError(ValueError):
    """A constant is requested outside its domain of validity."""


@dataclass(frozen=True)
class UnifiedOperator:
    """The (alpha, beta) operator A g(k) = (alpha + beta k) g(k+1) - k g(k)."""

    alpha: float
    beta: float

    @classmethod
    def binomial(cls, n: int, p: float) -> "UnifiedOperator":
        q = 1.0 - p
        return cls(alpha=n * p / q, beta=-p / q)

    @classmethod
    def negative_binomial(cls, r: float, p_bar: float) -> "UnifiedOperator":
        q_bar = 1.0 - p_bar
        return cls(alpha=r * q_bar, beta=q_bar)

    @classmethod
    def pseudo_binomial(cls, N: float, p: float) -> "UnifiedOperator":
        q = 1.0 - p
        return cls(alpha=N * p / q, beta=-p / q)

    @classmethod
    def poisson(cls, lam: float) -> "UnifiedOperator":
        return cls(alpha=lam, beta=0.0)


@dataclass(frozen=True)
class CompoundOperator:
    """Perturbed operator of a compound target; ``a = alpha + lam (1-beta)``."""

    a: float
    beta: float
    lam: float

    @classmethod
    def from_m1(cls, params: TargetParamsM1) -> "CompoundOperator":
        q = params.q
        beta = -params.p / q
        alpha = params.n * params.p / q
        return cls(a=alpha + params.lam * (1.0 - beta), beta=beta,
                   lam=params.lam)

    @classmethod
    def from_m2(cls, params: TargetParamsM2) -> "CompoundOperator":
        beta = params.q_bar
        alpha = params.r * params.q_bar
        return cls(a=alpha + params.lam * (1.0 - beta), beta=beta,
                   lam=params.lam)


def apply_unified(op: UnifiedOperator, g, k: int) -> float:
    return (op.alpha + op.beta * k) * g(k + 1) - k * g(k)


def apply_compound(op: CompoundOperator, g, k: int) -> float:
    delta = g(k + 2) - g(k + 1)
    return (op.a + op.beta * k) * g(k + 1) - k * g(k) - op.lam * op.beta * delta


def stein_identity_residual(target: LatticeMeasure, op: CompoundOperator,
                            g) -> float:
    """|E A g(Y)| over the stored support of ``target``."""
    acc = 0.0
    for k, w in zip(target.support, target.weights):
        acc += w * apply_compound(op, g, int(k))
    return abs(acc)


@dataclass(frozen=True)
class SteinSolution:
    """Solution table of the Stein equation on {0..support_max}.

    ``g[k]`` holds g(k) for k = 0..support_max+1, with g(0) = 0 by
    convention; the solution is extended flat beyond the table.
    ``constant`` is the centering constant c of the solved equation
    A g = h - c (close to E h under the target).
    """

    g: np.ndarray
    residual: float
    support_max: int
    constant: float = 0.0

    def as_function(self):
        table = self.g

        def gfun(k: int) -> float:
            if k < 0:
                return 0.0
            if k >= table.size:
                return float(table[-1])
            return float(table[k])

        return gfun

    def max_delta(self) -> float:
        """max_k |g(k+1) - g(k)| for k >= 1 (g(0) is a free convention)."""
        return float(np.abs(np.diff(self.g[1:])).max())


def _base_pmf(a: float, beta: float, K: int) -> np.ndarray:
    """Stationary pmf of the unperturbed operator (a + beta k) g(k+1) - k g(k).

    Detailed balance gives pi(k+1)/pi(k) = (a + beta k)/(k + 1).  For
    beta < 0 the support is finite (pseudo-binomial); for 0 <= beta < 1 it
    is cut at K (negative-binomial / Poisson tail), which is harmless once
    K sits past the compound target's numerical support.
    """
    pi = [1.0]
    for k in range(K):
        ratio = (a + beta * k) / (k + 1.0)
        if ratio <= 0.0:
            break
        pi.append(pi[-1] * ratio)
    pi = np.asarray(pi)
    return pi / pi.sum()


def _base_solve(a: float, beta: float, pi: np.ndarray,
                f: np.ndarray) -> np.ndarray:
    """Canonical solution of (a + beta k) g(k+1) - k g(k) = f(k) - E_pi f.

    Uses the cumulative-sum formula g(k+1) = sum_{j<=k} pi_j (f_j - E f)
    / ((a + beta k) pi_k), which is numerically stable in both directions;
    the last row of the support holds automatically because the centered
    sums telescope to zero.  Returns g on 0..top+1 with g = 0 beyond.
    """
    top = pi.size - 1
    ft = f[:top + 1] - float(pi @ f[:top + 1])
    g = np.zeros(top + 2)
    coef = a + beta * np.arange(top)
    w = pi * ft
    csum_f = np.cumsum(w)
    csum_b = np.cumsum(w[::-1])[::-1]        # csum_b[k] = sum_{j >= k} w_j
    # sum_{j<=k} w_j = -sum_{j>k} w_j up to the (float) centering error;
    # switch to the tail sum past the pmf mode, where pi_k is tiny and the
    # forward prefix sum loses all relative precision.
    kmid = int(np.argmax(pi))
    num = csum_f[:top].copy()
    if kmid < top:
        num[kmid:] = -csum_b[kmid + 1:top + 1]
    g[1:top + 1] = num / (coef * pi[:top])
    if top == 0:
        return g
    # row `top` holds by telescoping; for an infinite-support base cut at K
    # close with the row-top equation itself.
    if a + beta * top > 0.0:
        g[top + 1] = (top * g[top] + ft[top]) / (a + beta * top)
    return g


def solve_stein_equation(op: CompoundOperator, target: LatticeMeasure, h,
                         support_max: int | None = None,
                         tol: float = 1e-13,
                         max_iterations: int = 2000) -> SteinSolution:
    """Solve the compound Stein equation A g(k) = h(k) - c on 0..support_max.

    The compound operator is the base operator (a + beta k) g(k+1) - k g(k)
    minus the perturbation lam*beta*[g(k+2) - g(k+1)].  A direct linear
    solve of the truncated system is ill-posed: the recurrence carries a
    homogeneous mode that decays towards the tail, so no tail closure can
    pin the bounded solution, and closure errors are amplified backwards.
    Instead the solution is built as the geometric perturbation series
    around the base family: g = sum_j g_j with g_0 solving the base
    equation for h and g_{j+1} solving it for the perturbation applied to
    g_j.  Each base solve uses the stable cumulative-sum formula, and the
    series contracts whenever the perturbation budget admits it.

    For beta < 0 the base support is finite and the solution (and the
    reported residual) live on it; for beta >= 0 the grid is cut at
    ``support_max`` (default: past the target's numerical support).  The
    centering constant c accumulates across the series and is reported in
    the solution; it agrees with E h under the target up to truncation.
    """
    a, beta, lam = op.a, op.beta, op.lam
    lb = lam * beta
    if support_max is None:
        sig = np.nonzero(np.abs(target.weights) > 1e-13)[0]
        hi = int(sig[-1]) + int(target.offset) if sig.size else 0
        support_max = max(hi + 10, 20)
    pi = _base_pmf(a, beta, int(support_max))
    top = pi.size - 1
    hv = np.array([h(k) for k in range(top + 1)], dtype=float)
    g = np.zeros(top + 2)
    f = hv.copy()
    c = 0.0
    converged = lb == 0.0
    for _ in range(max_iterations):
        c += float(pi @ f)
        gj = _base_solve(a, beta, pi, f)
        g += gj
        if lb == 0.0:
            break
        gpad = np.append(gj, gj[-1])
        f = lb * (gpad[2:top + 3] - gpad[1:top + 2])
        if float(np.abs(f).max()) < tol:
            converged = True
            break
    if not converged and float(np.abs(f).max()) >= math.sqrt(tol):
        raise NumericalInstabilityError(
            "Stein perturbation series did not converge; the perturbation "
            "is too large for this parameter set")
    rhs = hv - c
    ks = np.arange(top + 1)
    gpad = np.append(g, g[-1])
    rows = (a + beta * ks + lb) * gpad[ks + 1] - lb * gpad[ks + 2] - ks * gpad[ks]
    residual = float(np.abs(rows - rhs).max())
    if residual > 1e-8:
        raise NumericalInstabilityError(
            f"Stein equation residual {residual!r} exceeds 1e-8")
    return SteinSolution(g=g, residual=residual, support_max=top, constant=c)


# ---------------------------------------------------------------------------
# Delta-g bounds and assumption gates


@dataclass(frozen=True)
class PerturbationBudget:
    """Size of the Poisson perturbation against the base family.

    epsilon: perturbation magnitude (|lam| p/q for M1, |lam| q_bar for M2);
    gamma:   base-family scale (floor(n + lam/p) for M1, r q_bar + lam p_bar
             for M2);
    omega:   base-family constant (2/p for M1, 2 for M2).  The perturbed
             bound on ||Delta g|| is 1 / (2 gamma/omega - 2 epsilon).
    """

    epsilon: float
    gamma: float
    omega: float

    @property
    def margin(self) -> float:
        """gamma/omega - epsilon; positive iff the assumption holds."""
        return self.gamma / self.omega - self.epsilon


def budget_m1(params: TargetParamsM1) -> PerturbationBudget:
    p, q, lam = params.p, params.q, params.lam
    gamma = math.floor(params.n + lam / p)
    return PerturbationBudget(epsilon=abs(lam) * p / q, gamma=gamma,
                              omega=2.0 / p)


def budget_m2(params: TargetParamsM2) -> PerturbationBudget:
    lam = params.lam
    gamma = params.r * params.q_bar + lam * params.p_bar
    return PerturbationBudget(epsilon=abs(lam) * params.q_bar, gamma=gamma,
                              omega=2.0)


def check_assumptions(params) -> dict:
    """Evaluate (H1) for M1 parameters or (H2) for M2 parameters.

    Signed lam enters through its absolute value.  Returns the epsilon
    value and the positive-iff-satisfied margin.
    """
    if isinstance(params, TargetParamsM1):
        budget = budget_m1(params)
        key = "h1_ok"
    elif isinstance(params, TargetParamsM2):
        budget = budget_m2(params)
        key = "h2_ok"
    else:
        raise TypeError("expected TargetParamsM1 or TargetParamsM2")
    return {key: budget.margin > 0.0, "epsilon": budget.epsilon,
            "margin": budget.margin}


def delta_g_bound_simple(family: str, **params) -> float:
    """Unperturbed ||Delta g|| bounds (unit test-function norm):
    2/(np), 2/(r q_bar), 2/(floor(N) p)."""
    if family == "binomial":
        return 2.0 / (params["n"] * params["p"])
    if family == "negative_binomial":
        return 2.0 / (params["r"] * (1.0 - params["p_bar"]))
    if family == "pseudo_binomial":
        return 2.0 / (math.floor(params["N"]) * params["p"])
    raise ValueError(f"unknown family {family!r}")


def delta_g_bound_perturbed(budget: PerturbationBudget) -> float:
    """||Delta g|| <= 1/(2 gamma/omega - 2 epsilon) under the assumption
    epsilon < gamma/omega; refuses with the margin otherwise."""
    if budget.margin <= 0.0:
        raise AssumptionError(
            f"perturbation too large: epsilon={budget.epsilon!r} "
            f"vs threshold {budget.gamma / budget.omega!r}"
        )
    return 1.0 / (2.0 * budget.margin)


@dataclass(frozen=True)
class ThetaConstants:
    """theta (must be < 1/2) and the assembled prefactor Theta."""

    theta: float
    big_theta: float


def theta_constants(params, which: str | None = None) -> ThetaConstants:
    """theta/Theta for M1 or M2 parameters; |lam| is used when lam < 0.

    theta1 = |lam| / (floor(n + lam/p) q),  Theta1 = 1/((1-2 theta1)
    floor(n + lam/p) p); theta2 = |lam| q_bar/(r q_bar + lam p_bar),
    Theta2 = 1/((1-2 theta2)(r q_bar + lam p_bar)).
    """
    if isinstance(params, TargetParamsM1):
        if params.lam == 0.0:
            raise InapplicableError("theta/Theta undefined at lam = 0")
        gamma = math.floor(params.n + params.lam / params.p)
        if gamma <= 0:
            raise InapplicableError("floor(n + lam/p) must be positive")
        theta = abs(params.lam) / (gamma * params.q)
        if theta >= 0.5:
            raise InapplicableError(f"theta1 = {theta!r} >= 1/2")
        big = 1.0 / ((1.0 - 2.0 * theta) * gamma * params.p)
    elif isinstance(params, TargetParamsM2):
        if params.lam == 0.0:
            raise InapplicableError("theta/Theta undefined at lam = 0")
        gamma = params.r * params.q_bar + params.lam * params.p_bar
        if gamma <= 0.0:
            raise InapplicableError("r q_bar + lam p_bar must be positive")
        theta = abs(params.lam) * params.q_bar / gamma
        if theta >= 0.5:
            raise InapplicableError(f"theta2 = {theta!r} >= 1/2")
        big = 1.0 / ((1.0 - 2.0 * theta) * gamma)
    else:
        raise TypeError("expected TargetParamsM1 or TargetParamsM2")
    return ThetaConstants(theta=theta, big_theta=big)
