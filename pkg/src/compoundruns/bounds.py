"""
Certified total-variation error bounds for the compound approximations.

The central object is the per-index ledger Xi_{i,j}: a collection of
fourth-order mixed local moments of (X_i, X*_{A_i}, X*_{B_i}, X*_{C_i}),
each weighted by the conditional smoothness D(W | X_{C_i}) (the "exact"
mode) or by 1 (the "prime" mode).  The main assembly multiplies the summed
ledger by the Theta prefactor of the matched target; the run-specific
bounds replace the conditional smoothness by closed-form constants derived
from independence structure left after conditioning on alternate blocks.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .measures import TargetParamsM1, TargetParamsM2
from .matching import MatchResult
from . import runs as runs_mod
from . import stein


@dataclass(frozen=True)
class XiTerms:
    """One evaluated ledger entry Xi_{i,j} and its four blocks."""

    i: int
    target: str                 # "M1" or "M2"
    mode: str                   # "exact" or "prime"
    value: float
    components: dict


@dataclass(frozen=True)
class BoundReport:
    """A bound value together with its applicability diagnostics."""

    bound_value: float | None
    applicable: bool
    reasons: dict
    components: dict


# ---------------------------------------------------------------------------
# the Xi ledger


def _xi_assembly(w, Xi, SA, SB, SC, D, beta) -> tuple:
    """Evaluate the four blocks of the ledger from enumerated samples.

    ``w`` are configuration probabilities; ``Xi, SA, SB, SC`` the values of
    X_i and the neighborhood sums X*_{A_i}, X*_{B_i}, X*_{C_i}; ``D`` the
    conditional-smoothness weight per configuration (1 in prime mode).
    """
    SCmB = SC - SB
    SCmA = SC - SA
    SBmA = SB - SA

    def E(arr):
        return float(np.dot(w, arr))

    EXi = E(Xi)
    P1 = SA * (SA + 1.0) * (6.0 * SC - 4.0 * SA - 8.0) \
        + 6.0 * SA * (SCmB + SCmA - 2.0) * (SBmA - 1.0)
    P2 = Xi * SA * (SA - 1.0) * (6.0 * SC - 4.0 * SA - 10.0) \
        + 6.0 * Xi * (SA - 1.0) * (SCmB + SCmA - 2.0) * (SBmA - 1.0)
    term1 = (1.0 - beta) / 12.0 * (EXi * E(P1 * D) + E(P2 * D))
    term2 = abs(beta) / 2.0 * E(Xi * (SB - 1.0) * (2.0 * SC - SB - 2.0) * D)
    coef3 = (1.0 - beta) * (EXi * E(SA) - (E(Xi * SA) - EXi)) + beta * EXi
    term3 = 0.5 * abs(coef3) * E(SB * (2.0 * SC - SB - 1.0) * D)
    coef4 = ((1.0 - beta) * (EXi * E(SA * SB) - E(Xi * SA * SB)
                             - EXi * E(SA) * E(SB) + E(Xi * SA) * E(SB))
             + (1.0 - beta) / 2.0 * (E(Xi * SA * SA) - EXi * E(SA * SA)
                                     + E(Xi * SA) - EXi * E(SA))
             + E(Xi * SB) - EXi * E(SB) - EXi)
    term4 = abs(coef4) * E(SC * D)
    return term1, term2, term3, term4


def _neighborhood_sums(model, i):
    """Enumerate the C_i trial arc; return (weights, Xi, SA, SB, SC, x_key)
    as float/int arrays over every arc configuration."""
    nbh = runs_mod.neighborhoods(model, i)
    a_set, b_set = set(nbh.a), set(nbh.b)
    c_order, trials, posmap = runs_mod.arc_info(model, i)
    codes, weights = runs_mod.enumerate_arc(model, trials)
    n = codes.size
    SA, SB, SC = np.zeros(n), np.zeros(n), np.zeros(n)
    x_key = np.zeros(n, dtype=np.int64)
    Xi = None
    for idx, j in enumerate(c_order):
        col = runs_mod._x_column(model, codes, posmap, j)
        SC += col
        if j in b_set:
            SB += col
        if j in a_set:
            SA += col
        x_key |= col.astype(np.int64) << idx
        if j == i % model.L:
            Xi = col.astype(np.float64)
    return weights, Xi, SA, SB, SC, x_key


def _d_per_config(table, x_key: np.ndarray) -> np.ndarray:
    """Vectorized lookup of D(W | X_{C_i} = x) per enumerated config."""
    lookup = table.d_lookup()
    keys = np.array(sorted(lookup), dtype=np.int64)
    vals = np.array([lookup[k] for k in keys])
    pos = np.searchsorted(keys, x_key)
    return vals[pos]


def xi_terms(model, i: int, match: MatchResult | None = None,
             mode: str = "exact", beta: float | None = None) -> XiTerms:
    """Evaluate Xi_{i,j} for the matched target (j fixed by the match).

    ``beta`` may be passed directly instead of a match result.  In exact
    mode every summand carries its conditional smoothness factor
    D(W | X_{C_i}); if the conditional tables are infeasible the evaluator
    falls back to prime mode (D = 1) with a warning.
    """
    if beta is None:
        beta = match.beta
    target = match.which if match is not None else "?"
    weights, Xi, SA, SB, SC, x_key = _neighborhood_sums(model, i)
    if mode == "exact":
        try:
            table = runs_mod.conditional_laws(model, i)
        except runs_mod.ModelError as exc:
            warnings.warn(f"conditional laws infeasible ({exc}); "
                          "falling back to prime mode")
            mode = "exact->prime"
            D = np.ones_like(weights)
        else:
            D = _d_per_config(table, x_key)
    else:
        D = np.ones_like(weights)
    t1, t2, t3, t4 = _xi_assembly(weights, Xi, SA, SB, SC, D, beta)
    value = t1 + t2 + t3 + t4
    return XiTerms(i=i, target=target, mode=mode, value=value,
                   components={"moment_block": t1, "beta_block": t2,
                               "linear_block": t3, "covariance_block": t4})


def xi_terms_blocks(model, i: int, beta: float) -> XiTerms:
    """Prime-mode ledger entry over the 1-dependent block variables T_i.

    T has neighborhood radii 1, 2, 3 on the block index; blocks i-3..i+3
    span 8m trials, which are enumerated exhaustively."""
    bs = runs_mod.block_sums(model)
    m, nb, L = bs.m, bs.n_blocks, model.L
    span = 8 * m
    if span > runs_mod.MAX_BRUTE_TRIALS:
        raise runs_mod.ModelError(f"block ledger needs {span} trial bits")
    if 7 * m >= L:
        raise runs_mod.ModelError("need more than 7 blocks on the circle")
    start = ((i - 3) % nb) * m
    trials = [(start + u) % L for u in range(span)]
    posmap = {t: pos for pos, t in enumerate(trials)}
    codes, weights = runs_mod.enumerate_arc(model, trials)

    def tcol(block):
        acc = np.zeros(codes.size)
        for idx in bs.block_indices(block):
            acc += runs_mod._x_column(model, codes, posmap, idx)
        return acc

    T = {d: tcol(i + d) for d in range(-3, 4)}
    SA = T[-1] + T[0] + T[1]
    SB = SA + T[-2] + T[2]
    SC = SB + T[-3] + T[3]
    D = np.ones_like(weights)
    t1, t2, t3, t4 = _xi_assembly(weights, T[0], SA, SB, SC, D, beta)
    return XiTerms(i=i, target="M1", mode="prime", value=t1 + t2 + t3 + t4,
                   components={"moment_block": t1, "beta_block": t2,
                               "linear_block": t3, "covariance_block": t4})


def _sum_xi(model, match, mode: str) -> tuple:
    """(sum over i of Xi_i, per-index value or None) using rotation
    symmetry when the trial probabilities are identical."""
    if model.identical_p():
        xi0 = xi_terms(model, 0, match, mode=mode)
        return model.L * xi0.value, xi0.value
    total = 0.0
    for i in range(model.L):
        total += xi_terms(model, i, match, mode=mode).value
    return total, None


# ---------------------------------------------------------------------------
# main assembly


def bound_theorem_main(model, match: MatchResult, mode: str = "exact",
                       K: float | None = None) -> BoundReport:
    """The master bound Theta * [sum_i Xi_i (+ delta p^2/q for M1)].

    In prime mode the ledger sum is multiplied by a constant K bounding
    every D(W | X_{C_i}); K defaults to the universal value 4.
    """
    reasons = {}
    try:
        theta = stein.theta_constants(match.params)
    except stein.InapplicableError as exc:
        return BoundReport(None, False, {"theta": str(exc)}, {})
    assumptions = stein.check_assumptions(match.params)
    reasons["theta"] = theta.theta
    reasons["h_margin"] = assumptions["margin"]
    reasons["h_ok"] = assumptions["margin"] > 0.0
    reasons["lambda_sign"] = math.copysign(1.0, match.params.lam)
    if not reasons["h_ok"]:
        return BoundReport(None, False, reasons, {})
    sum_xi, per_index = _sum_xi(model, match, mode)
    components = {"big_theta": theta.big_theta, "sum_xi": sum_xi,
                  "xi_per_index": per_index, "mode": mode}
    if mode == "prime":
        K = 4.0 if K is None else float(K)
        sum_xi *= K
        components["K"] = K
    if match.which == "M1":
        params = match.m1_params
        delta_term = params.delta * params.p ** 2 / params.q
        components["delta_term"] = delta_term
        value = theta.big_theta * (sum_xi + delta_term)
    else:
        value = theta.big_theta * sum_xi
    return BoundReport(value, True, reasons, components)


# ---------------------------------------------------------------------------
# (1,1)-runs: alternate-index conditioning


def _n_iz(N: int) -> float:
    """Count of surviving alternate indices outside C_i (same for every i):
    0.5N - 3 for odd N, 0.5N - 2 for even N; at least (N-6)/2."""
    value = 0.5 * N - 3.0 if N % 2 else 0.5 * N - 2.0
    assert value >= (N - 6) / 2.0
    return value


def _f2_inverse_moment_exact(probs: np.ndarray, i: int) -> float:
    """Exact E[sum_{j in F2(i,Z)} (1-p_{j-1}) p_j]^{-1} by enumerating the
    alternate ensemble Z = {X at even 1-based positions}.

    Those X's sit on disjoint trial pairs, hence are independent.  A
    surviving odd index j enters F2 exactly when both circular neighbors
    belong to Z and take the value 0.  Returns inf when the sum can be
    empty with positive probability."""
    N = probs.size
    nz = N // 2
    if nz > runs_mod.MAX_BRUTE_TRIALS:
        raise runs_mod.ModelError("alternate-ensemble enumeration too large")
    # 1-based: Z holds X_{2k}, k = 1..nz;  a_j = (1-p_{j-1}) p_j
    a = (1.0 - np.roll(probs, 1)) * probs        # a[j0] for 0-based j0
    pz = np.array([a[(2 * k - 1) % N] for k in range(1, nz + 1)])
    c_set = {(i + d) % N for d in range(-3, 4)}  # 0-based C_i
    codes = np.arange(1 << nz, dtype=np.int64)
    weights = np.ones(codes.size)
    for b in range(nz):
        bit = (codes >> b) & 1
        weights *= np.where(bit == 1, pz[b], 1.0 - pz[b])
    S = np.zeros(codes.size)
    for j in range(1, N + 1, 2):                 # odd 1-based candidates
        if (j - 1) % N in c_set:
            continue
        jm, jp = (j - 2) % N + 1, j % N + 1      # 1-based neighbors
        if jm % 2 or jp % 2:                     # a neighbor escapes Z
            continue
        bm, bp = jm // 2 - 1, jp // 2 - 1
        ok = (((codes >> bm) & 1) == 0) & (((codes >> bp) & 1) == 0)
        S += np.where(ok, a[(j - 1) % N], 0.0)
    if np.any((S == 0.0) & (weights > 0.0)):
        return math.inf
    return float(np.dot(weights, 1.0 / S))


def smoothness_K_11runs(N: int, probs) -> float:
    """Closed-form bound K on D(W | X_{C_i}) for (1,1)-runs.

    Identical p: K = 16 * [32 / (9 (N(i,Z) - 1))] / (p q), combining the
    16 E[sum a_j]^{-1} conditioning bound with the binomial inverse-moment
    chain (the surviving-count success probability p q (1-pq)^2 is at
    least 9/16 of p q).  Heterogeneous p: exact enumeration instead of the
    binomial chain.  Requires (1-p_{j-1}) p_j <= 1/2 throughout.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size == 1:
        probs = np.full(N, float(probs[0]))
    a = (1.0 - np.roll(probs, 1)) * probs
    if np.any(a > 0.5):
        raise stein.InapplicableError("(1-p_{j-1}) p_j <= 1/2 fails")
    if np.all(probs == probs[0]):
        p = float(probs[0])
        niz = _n_iz(N)
        inv_count = 32.0 / (9.0 * (niz - 1.0))
        return 16.0 * inv_count / (p * (1.0 - p))
    best = 0.0
    for i in range(N):
        best = max(best, 16.0 * _f2_inverse_moment_exact(probs, i))
    return best


def bound_11runs(N: int, probs, match: MatchResult) -> BoundReport:
    """(1,1)-runs bound: Xi'_1/((1-2 theta1) floor(n+lam/p) p q) times
    {16 q sum_i E[sum_{F2(i,Z)} (1-p_{j-1}) p_j]^{-1} + p^2 delta}."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size == 1:
        probs = np.full(N, float(probs[0]))
    if match.which != "M1":
        return BoundReport(None, False, {"target_not_m1": True}, {})
    model = runs_mod.one_one_runs(probs=probs)
    params = match.m1_params
    reasons = {}
    a = (1.0 - np.roll(probs, 1)) * probs
    reasons["a_le_half"] = bool(np.all(a <= 0.5))
    try:
        theta = stein.theta_constants(params)
        reasons["theta"] = theta.theta
    except stein.InapplicableError as exc:
        return BoundReport(None, False, {"theta": str(exc), **reasons}, {})
    if not reasons["a_le_half"]:
        return BoundReport(None, False, reasons, {})
    p, q, lam, delta = params.p, params.q, params.lam, params.delta
    gamma = math.floor(params.n + lam / p)
    if model.identical_p():
        inv_each = (32.0 / (9.0 * (_n_iz(N) - 1.0))) / (probs[0] * (1.0 - probs[0]))
        inv_sum = N * inv_each
    else:
        inv_sum = 0.0
        for i in range(N):
            val = _f2_inverse_moment_exact(probs, i)
            if math.isinf(val):
                reasons["empty_f2"] = True
                return BoundReport(None, False, reasons, {})
            inv_sum += val
    if model.identical_p():
        xi_prime = xi_terms(model, 0, match, mode="prime").value
    else:
        xi_prime = max(xi_terms(model, i, match, mode="prime").value
                       for i in range(N))
    braces = 16.0 * q * inv_sum + p ** 2 * delta
    value = xi_prime / ((1.0 - 2.0 * theta.theta) * gamma * p * q) * braces
    components = {"xi_prime_max": xi_prime, "gamma": gamma,
                  "inverse_moment_sum": inv_sum, "braces": braces,
                  "delta_term": p ** 2 * delta}
    return BoundReport(value, True, reasons, components)


# ---------------------------------------------------------------------------
# (k1,k2)-runs via 1-dependent blocks


def c_m_threshold(m: int) -> float:
    """Applicability threshold c_m = 2(2m+1)/(2(2m+1)^2 + 3m(m+1))."""
    return 2.0 * (2 * m + 1) / (2.0 * (2 * m + 1) ** 2 + 3.0 * m * (m + 1))


def theta1_limit_k1k2(b: float, m: int) -> float:
    """Large-N limit of theta1 for identical-p (k1,k2)-runs:
    m(m+1) b / (2(2m+1) - [2(2m+1)^2 + m(m+1)] b)."""
    return m * (m + 1) * b / (2.0 * (2 * m + 1)
                              - (2.0 * (2 * m + 1) ** 2 + m * (m + 1)) * b)


def bound_k1k2(N: int, k1: int, k2: int, p: float,
               match: MatchResult) -> BoundReport:
    """(k1,k2)-runs bound via the 1-dependent block variables T_i.

    Mirrors the (1,1) display with (1 - a_bar_j) in place of the survival
    probabilities, where a_bar_j = 1 - min over binary neighbor values of
    P(T_j = 1 | T_{j-1}, T_{j+1}).  For m = 2 that minimum is structurally
    zero (three pattern occurrences cannot fit in three consecutive blocks
    with pairwise gaps > m), so a_bar = 1 and the bound is infinite: the
    report comes back inapplicable with reason "a_bar_degenerate".
    """
    m = k1 + k2 - 1
    if m == 1:
        return bound_11runs(N, np.full(N, p), match)
    if match.which != "M1":
        return BoundReport(None, False, {"target_not_m1": True}, {})
    model = runs_mod.k1k2_runs(N=N, k1=k1, k2=k2, p=p)
    params = match.m1_params
    b = (1.0 - p) ** k1 * p ** k2
    reasons = {"m": m, "b": b, "c_m": c_m_threshold(m),
               "b_below_c_m": b < c_m_threshold(m)}
    bs = runs_mod.block_sums(model)
    a_bar = bs.a_bar(0)
    reasons["a_bar"] = a_bar
    reasons["a_bar_ge_half"] = a_bar >= 0.5
    try:
        theta = stein.theta_constants(params)
        reasons["theta"] = theta.theta
    except stein.InapplicableError as exc:
        return BoundReport(None, False, {"theta": str(exc), **reasons}, {})
    if not reasons["a_bar_ge_half"]:
        return BoundReport(None, False, reasons, {})
    if a_bar >= 1.0:
        reasons["a_bar_degenerate"] = True
        return BoundReport(None, False, reasons, {})
    pm, qm, lam, delta = params.p, params.q, params.lam, params.delta
    gamma = math.floor(params.n + lam / pm)
    niz = _n_iz(N)
    inv_sum = N / (niz * (1.0 - a_bar))
    xi_prime = xi_terms_blocks(model, 0, match.beta).value
    braces = 16.0 * qm * inv_sum + pm ** 2 * delta
    value = xi_prime / ((1.0 - 2.0 * theta.theta) * gamma * pm * qm) * braces
    components = {"xi_prime_max": xi_prime, "gamma": gamma,
                  "inverse_moment_sum": inv_sum, "braces": braces,
                  "a_bar": a_bar}
    return BoundReport(value, True, reasons, components)


# ---------------------------------------------------------------------------
# k-runs closed forms


def smoothness_kruns_product(N: int, k: int, p: float) -> float:
    """Product-chain smoothness constant for k-runs:
    D(W | X_{C_i}) <= 1 ∧ 10.58 / ((N - 10k + 8) p^k (1-p)^3)."""
    denom = (N - 10 * k + 8) * p ** k * (1.0 - p) ** 3
    return min(1.0, 10.58 / denom) if denom > 0 else 1.0


def bound_kruns_T5(N: int, k: int, p: float) -> BoundReport:
    """Closed-form k-runs bound:
    (9 ∧ 95.22(1-2p)/((N-10k+8) p^k (1-p)^2)) (2k-1)(4k-3)(6k-5) p^3."""
    reasons = {"p_lt_half": p < 0.5, "N_gt_10k": N > 10 * k}
    if not (reasons["p_lt_half"] and reasons["N_gt_10k"]):
        return BoundReport(None, False, reasons, {})
    decay = 95.22 * (1.0 - 2.0 * p) / ((N - 10 * k + 8) * p ** k
                                       * (1.0 - p) ** 2)
    prefactor = min(9.0, decay)
    poly = (2 * k - 1) * (4 * k - 3) * (6 * k - 5) * p ** 3
    return BoundReport(prefactor * poly, True, reasons,
                       {"prefactor": prefactor, "decay_branch": decay,
                        "polynomial": poly})


def bound_wang_xia(N: int, k: int, p: float) -> float:
    """Comparison bound 4.5(4k-3)(2k-1) p^2 (2 ∧ 4.6/sqrt((N-4k+2) p^k (1-p)^3))."""
    root = math.sqrt((N - 4 * k + 2) * p ** k * (1.0 - p) ** 3)
    return 4.5 * (4 * k - 3) * (2 * k - 1) * p ** 2 * min(2.0, 4.6 / root)
