"""
Circular Bernoulli run statistics: exact laws, cumulants, conditional laws.

Three families of locally dependent indicator sums on a circle of
independent Bernoulli trials are supported (trial indices are 0-based and
circular throughout):

* ``one_one``:  X_i = (1 - I_{i-1}) I_i            (a failure-success adjacency)
* ``k1k2``:     X_j = (1-xi_j)...(1-xi_{j+k1-1}) xi_{j+k1}...xi_{j+k1+k2-1}
                over L = N * m trials, m = k1 + k2 - 1
* ``kruns``:    X_j = xi_j ... xi_{j+k-1}          (k consecutive successes)

The exact law of W = sum X_j is computed by a transfer DP over the last
``pattern_len - 1`` trial bits, conditioning on the opening window and
closing the circle by evaluating the wrap-around windows.  The module also
provides a brute-force oracle, closed-form factorial cumulants, the
conditional laws L(W | X_{C_i}) needed for smoothness terms, and the
1-dependent block decomposition of the k1k2 family.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .measures import LatticeMeasure, CumulantTriple, smoothness_D
from .matching import cumulants_from_raw_moments

#: Largest supported DP state window (pattern_len - 1 bits).
MAX_WINDOW = 12

#: Largest trial count for exhaustive enumeration.
MAX_BRUTE_TRIALS = 24


class ModelError(ValueError):
    """Invalid run-model specification or infeasible computation size."""


@dataclass(frozen=True)
class RunsModel:
    """A circular run statistic: pattern, per-trial success probabilities."""

    kind: str                 # "one_one" | "k1k2" | "kruns"
    k1: int
    k2: int
    probs: np.ndarray         # success probability per trial, length L

    def __post_init__(self):
        if self.kind not in ("one_one", "k1k2", "kruns"):
            raise ModelError(f"unknown kind {self.kind!r}")
        if self.kind == "one_one" and (self.k1, self.k2) != (1, 1):
            raise ModelError("one_one requires k1 = k2 = 1")
        if self.kind == "kruns" and (self.k1 != 0 or self.k2 < 1):
            raise ModelError("kruns requires k1 = 0 and k2 >= 1")
        if self.kind == "k1k2" and (self.k1 < 1 or self.k2 < 1):
            raise ModelError("k1k2 requires k1, k2 >= 1")
        p = np.ascontiguousarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size < self.pattern_len:
            raise ModelError("probs must be 1-D with length >= pattern length")
        if np.any((p <= 0.0) | (p >= 1.0)):
            raise ModelError("all trial probabilities must lie in (0,1)")
        if self.kind == "k1k2" and p.size % (self.k1 + self.k2 - 1) != 0:
            raise ModelError("k1k2 trial count must be a multiple of m")
        object.__setattr__(self, "probs", p)

    # -- derived structure --------------------------------------------

    @property
    def L(self) -> int:
        """Number of trials (= number of X indices)."""
        return self.probs.size

    @property
    def pattern_len(self) -> int:
        return self.k1 + self.k2

    @property
    def window(self) -> int:
        """DP state width: pattern length minus one."""
        return self.pattern_len - 1

    @property
    def pattern(self) -> tuple:
        """Required trial bits, oldest first."""
        return (0,) * self.k1 + (1,) * self.k2

    @property
    def shift(self) -> int:
        """X_j reads trials (j + shift) .. (j + shift + pattern_len - 1)."""
        return -1 if self.kind == "one_one" else 0

    @property
    def n_blocks(self) -> int:
        """Block count N for the k1k2 family (L = N * m)."""
        m = self.window
        if m == 0:
            return self.L
        return self.L // m

    def identical_p(self) -> bool:
        return bool(np.all(self.probs == self.probs[0]))

    def trial_window(self, j: int) -> list:
        """Absolute trial indices read by X_j, oldest first."""
        return [(j + self.shift + u) % self.L for u in range(self.pattern_len)]

    def mean_x(self) -> np.ndarray:
        """E X_j for every index j."""
        p = self.probs
        out = np.ones_like(p)
        for u, bit in enumerate(self.pattern):
            rolled = np.roll(p, -(self.shift + u))
            out = out * (rolled if bit else 1.0 - rolled)
        return out


def one_one_runs(N: int | None = None, p: float | None = None,
                 probs=None) -> RunsModel:
    """(1,1)-runs model from identical p (give N, p) or per-trial probs."""
    if probs is None:
        probs = np.full(N, p)
    return RunsModel("one_one", 1, 1, np.asarray(probs, dtype=np.float64))


def k1k2_runs(N: int | None = None, k1: int = 1, k2: int = 1,
              p: float | None = None, probs=None) -> RunsModel:
    """(k1,k2)-runs model over L = N*m trials, m = k1 + k2 - 1."""
    m = k1 + k2 - 1
    if probs is None:
        probs = np.full(N * m, p)
    return RunsModel("k1k2", k1, k2, np.asarray(probs, dtype=np.float64))


def k_runs(N: int | None = None, k: int = 1, p: float | None = None,
           probs=None) -> RunsModel:
    """k-runs model (k consecutive successes) over N trials."""
    if probs is None:
        probs = np.full(N, p)
    return RunsModel("kruns", 0, k, np.asarray(probs, dtype=np.float64))


# ---------------------------------------------------------------------------
# dependence neighborhoods


@dataclass(frozen=True)
class Neighborhoods:
    """Nested circular index sets A ⊆ B ⊆ C around an index i."""

    i: int
    a: tuple
    b: tuple
    c: tuple


def _radii(model: RunsModel, convention: str) -> tuple:
    m = model.window
    if model.kind == "one_one":
        return (1, 2, 3)
    if model.kind == "kruns":
        k = model.k2
        return (k, 2 * k, 3 * k)
    if convention == "ld3":
        return (m + 1, 2 * (m + 1), 3 * (m + 1))
    if convention == "moment":
        return (m, 2 * m, 3 * m)
    raise ValueError(f"unknown radius convention {convention!r}")


def _circular_range(i: int, radius: int, L: int) -> tuple:
    if 2 * radius + 1 >= L:
        return tuple(range(L))
    return tuple(sorted((i + d) % L for d in range(-radius, radius + 1)))


def neighborhoods(model: RunsModel, i: int,
                  convention: str = "ld3") -> Neighborhoods:
    """The A_i ⊆ B_i ⊆ C_i sets; ``convention`` chooses between the
    dependence radii used by the error bounds ("ld3") and the tighter
    radii valid for the moment/cumulant formulas ("moment")."""
    rA, rB, rC = _radii(model, convention)
    L = model.L
    return Neighborhoods(
        i=i,
        a=_circular_range(i, rA, L),
        b=_circular_range(i, rB, L),
        c=_circular_range(i, rC, L),
    )


# ---------------------------------------------------------------------------
# exact law via transfer DP


def _transition_tables(model: RunsModel):
    """State transition and pattern-match tables.

    State = last ``window`` trial bits, bit q holding trial t-1-q."""
    P = model.pattern_len
    w = model.window
    nstates = 1 << w
    pat = model.pattern
    sprime = np.empty((nstates, 2), dtype=np.int64)
    matched = np.zeros((nstates, 2), dtype=bool)
    maskw = nstates - 1
    for s in range(nstates):
        for b in (0, 1):
            sprime[s, b] = ((s << 1) | b) & maskw if w else 0
            ok = (b == pat[P - 1])
            for u in range(P - 1):
                if (s >> (P - 2 - u)) & 1 != pat[u]:
                    ok = False
                    break
            matched[s, b] = ok
    return sprime, matched


def _count_cap(model: RunsModel) -> int:
    """Column count for the DP count dimension.

    Any configuration with c pattern occurrences has c distinct success
    trials, hence weight at most max(p)^c; beyond the double-precision
    underflow point those weights are exactly zero and need no columns.
    """
    pmax = float(model.probs.max())
    cap = int(math.ceil(324.0 / -math.log10(pmax))) + model.window + 10
    return min(model.L + 1, cap)


def _law_dp(model: RunsModel, frozen: dict | None = None,
            count_mask: np.ndarray | None = None) -> np.ndarray:
    """Weight vector over counts (index = count).  With ``frozen`` trial
    bits the result is unnormalized (total = probability of the frozen
    configuration); ``count_mask[j]`` switches counting of X_j."""
    L, P, w = model.L, model.pattern_len, model.window
    if w > MAX_WINDOW:
        raise ModelError(f"pattern window {w} exceeds the DP limit {MAX_WINDOW}")
    if L < P:
        raise ModelError("need at least pattern_len trials")
    frozen = frozen or {}
    if count_mask is None:
        count_mask = np.ones(L, dtype=bool)
    probs = model.probs
    shift = model.shift
    sprime, matched = _transition_tables(model)
    nstates = 1 << w
    ncols = _count_cap(model)
    law = np.zeros(ncols + w + 1)

    def allowed(t):
        if t in frozen:
            return (frozen[t],)
        return (0, 1)

    for init in range(1 << w):
        init_bits = [(init >> t) & 1 for t in range(w)]
        weight = 1.0
        ok = True
        for t in range(w):
            if t in frozen and frozen[t] != init_bits[t]:
                ok = False
                break
            weight *= probs[t] if init_bits[t] else 1.0 - probs[t]
        if not ok:
            continue
        s0 = 0
        for t in range(w):
            s0 |= init_bits[t] << (w - 1 - t)
        dp = np.zeros((nstates, ncols))
        dp[s0, 0] = weight
        for t in range(w, L):
            j = (t - P + 1 - shift) % L
            counted = bool(count_mask[j])
            new = np.zeros_like(dp)
            for b in allowed(t):
                wt = probs[t] if b else 1.0 - probs[t]
                contrib = dp * wt
                inc = matched[:, b] & counted
                plain = ~inc
                if plain.any():
                    np.add.at(new, sprime[plain, b], contrib[plain])
                if inc.any():
                    np.add.at(new[:, 1:], sprime[inc, b], contrib[inc, :-1])
            dp = new
        # close the circle: windows ending at trials 0..w-1
        for s in range(nstates):
            col = dp[s]
            if not col.any():
                continue
            wrap = 0
            for e in range(w):
                j = (e - P + 1 - shift) % L
                if not count_mask[j]:
                    continue
                hit = True
                for u in range(P):
                    tr = (e - P + 1 + u) % L
                    bit = (s >> (L - 1 - tr)) & 1 if tr >= L - w else init_bits[tr]
                    if bit != model.pattern[u]:
                        hit = False
                        break
                if hit:
                    wrap += 1
            law[wrap : wrap + ncols] += col
    if law[-1] != 0.0:
        raise ModelError("count cap reached; law truncated")  # pragma: no cover
    return law


def exact_law(model: RunsModel) -> LatticeMeasure:
    """Exact pmf of W by the transfer DP (normalized; mass checked)."""
    law = _law_dp(model)
    total = law.sum()
    if abs(total - 1.0) > 1e-9:
        raise ModelError(f"DP mass {total!r} differs from 1")
    law = law / total
    hi = int(np.nonzero(law)[0][-1]) + 1
    return LatticeMeasure(0, law[:hi])


# ---------------------------------------------------------------------------
# brute-force oracle and trial enumeration helpers


def _enumerate_bits(probs: np.ndarray):
    """All 2^n configurations of n trials: (codes, weights)."""
    n = probs.size
    if n > MAX_BRUTE_TRIALS:
        raise ModelError(f"enumeration over {n} trials refused (> {MAX_BRUTE_TRIALS})")
    codes = np.arange(1 << n, dtype=np.int64)
    weights = np.ones(1 << n)
    for pos in range(n):
        bit = (codes >> pos) & 1
        weights *= np.where(bit == 1, probs[pos], 1.0 - probs[pos])
    return codes, weights


def _x_column(model: RunsModel, codes: np.ndarray, posmap: dict,
              j: int) -> np.ndarray:
    """Indicator of X_j = 1 as a uint8 column over enumerated configs.

    ``posmap`` maps absolute trial index -> bit position in ``codes``."""
    col = np.ones(codes.size, dtype=np.uint8)
    for u, bit in enumerate(model.pattern):
        tr = (j + model.shift + u) % model.L
        v = ((codes >> posmap[tr]) & 1).astype(np.uint8)
        col &= v if bit else 1 - v
    return col


def brute_force_law(model: RunsModel) -> LatticeMeasure:
    """Exhaustive 2^L enumeration of the law of W (L <= 22)."""
    L = model.L
    codes, weights = _enumerate_bits(model.probs)
    posmap = {t: t for t in range(L)}
    W = np.zeros(codes.size, dtype=np.int64)
    for j in range(L):
        W += _x_column(model, codes, posmap, j)
    law = np.bincount(W, weights=weights)
    hi = int(np.nonzero(law)[0][-1]) + 1
    return LatticeMeasure(0, law[:hi] / law.sum())


# ---------------------------------------------------------------------------
# closed-form factorial cumulants


def _cumulants_from_local_means(b: np.ndarray, rA: int) -> CumulantTriple:
    """Cumulant assembly for indicator families whose products vanish
    within distance rA and are independent beyond:

        Gamma1 = sum_i b_i,   Gamma2 = -sum_i sum_{j in A_i} b_i b_j,
        Gamma3 = sum_i b_i (sum_{A_i} b_j)^2
                 + (1/2) sum_i sum_{j in B_i \\ A_i} sum_{l in A_i ∩ A_j}
                   b_i b_j b_l,

    with A (resp. B) the radius-rA (resp. 2 rA) circular neighborhoods."""
    sA = b.copy()
    for d in range(1, rA + 1):
        sA = sA + np.roll(b, d) + np.roll(b, -d)
    g1 = float(b.sum())
    g2 = -float((b * sA).sum())
    g3 = float((b * sA ** 2).sum())
    extra = 0.0
    for d2 in list(range(-2 * rA, -rA)) + list(range(rA + 1, 2 * rA + 1)):
        lo, hi = max(-rA, d2 - rA), min(rA, d2 + rA)
        bj = np.roll(b, -d2)
        for d3 in range(lo, hi + 1):
            extra += float((b * bj * np.roll(b, -d3)).sum())
    return CumulantTriple(g1, g2, g3 + 0.5 * extra)


def closed_cumulants_11(probs) -> CumulantTriple:
    """Closed-form cumulants of (1,1)-runs with a_i = (1 - p_{i-1}) p_i."""
    p = np.asarray(probs, dtype=np.float64)
    a = (1.0 - np.roll(p, 1)) * p
    return _cumulants_from_local_means(a, 1)


def closed_cumulants_k1k2(probs, k1: int, k2: int) -> CumulantTriple:
    """Closed-form cumulants of (k1,k2)-runs.

    The product-moment sums run over radius-m neighborhoods (X_j X_l = 0
    exactly when 0 < |j-l| <= m), which reproduces the identical-p values
    Gamma2 = -N m (2m+1) b^2 and
    Gamma3 = N m [(2m+1)^2 + m(m+1)/2] b^3."""
    model = k1k2_runs(k1=k1, k2=k2, probs=probs)
    return _cumulants_from_local_means(model.mean_x(), model.window)


def _kruns_union_exponent_sums(N: int, k: int, p: float) -> dict:
    """Subtotals of sum_{j,l} E X_1 X_j X_l for identical-p k-runs.

    E X_1 X_j X_l = p^(size of the union of the three length-k windows);
    for circular windows starting at sorted positions s1 <= s2 <= s3 the
    union size is min(g1,k) + min(g2,k) + min(g3,k) over the cyclic gaps.
    The double sum is regrouped by the gap composition (u, v, w) of N,
    which splits into the coincidence cases (two or three equal start
    positions) and the distinct-position cases."""
    phi = np.minimum(np.arange(N + 1), k).astype(np.float64)
    phi = p ** phi                       # phi[a] = p^min(a,k)
    H = np.convolve(phi, phi)            # H[M] = sum_{u+v=M} phi_u phi_v
    # distinct-triple and one-coincidence compositions, double-counted:
    paired = 2.0 * float(np.dot(phi[1:], H[N - 1 :: -1]))
    # compositions with v = 0 were double-counted once too many:
    diagonal = float(np.dot(phi[: N], phi[N : 0 : -1]))
    return {"paired": paired, "diagonal": diagonal,
            "total": paired - diagonal}


def closed_cumulants_kruns(p: float, k: int, N: int) -> CumulantTriple:
    """Exact factorial cumulants of identical-p k-runs for any N >= k.

    m1 and m2 come from the pairwise window-union sums; m3 from the exact
    triple-union assembly (see _kruns_union_exponent_sums)."""
    if N < k:
        raise ModelError("need N >= k")
    m1 = N * p ** k
    d = np.arange(N)
    m2 = N * float(np.sum(p ** (np.minimum(d, k) + np.minimum(N - d, k))))
    m3 = N * _kruns_union_exponent_sums(N, k, p)["total"]
    return cumulants_from_raw_moments(m1, m2, m3)


# ---------------------------------------------------------------------------
# conditional laws given X_{C_i}


@dataclass(frozen=True)
class ConditionalEntry:
    """One conditioning class: P(X_{C_i} = x), the class count sum, the
    conditional law of W and its second-difference smoothness."""

    weight: float
    x_key: int
    x_sum: int
    law: LatticeMeasure
    d_value: float


@dataclass(frozen=True)
class ConditionalLawTable:
    """Mixture decomposition of L(W) over the values of X_{C_i}."""

    i: int
    c_indices: tuple
    entries: tuple

    def reassembled(self) -> LatticeMeasure:
        """Mixture of the entries; equals the unconditional law of W."""
        size = max(e.law.offset + e.law.weights.size for e in self.entries)
        acc = np.zeros(size)
        for e in self.entries:
            acc[e.law.offset : e.law.offset + e.law.weights.size] += (
                e.weight * e.law.weights
            )
        hi = int(np.nonzero(acc)[0][-1]) + 1
        return LatticeMeasure(0, acc[:hi])

    def max_d(self) -> float:
        return max(e.d_value for e in self.entries)

    def expected_d(self) -> float:
        return sum(e.weight * e.d_value for e in self.entries)

    def d_lookup(self) -> dict:
        return {e.x_key: e.d_value for e in self.entries}


def arc_info(model: RunsModel, i: int) -> tuple:
    """C_i (bound radii), the covering trial arc and its position map.

    Returns (c_indices, trials, posmap) where ``trials`` lists, in arc
    order, every trial read by some X_j with j in C_i.  If the arc wraps
    the whole circle it is simply all L trials."""
    L = model.L
    rC = _radii(model, "ld3")[2]
    nbh = neighborhoods(model, i)
    span = 2 * rC + model.pattern_len
    if span >= L:
        trials = list(range(L))
    else:
        start = (i - rC + model.shift) % L
        trials = [(start + u) % L for u in range(span)]
    posmap = {t: pos for pos, t in enumerate(trials)}
    # circular order around i for the C indices
    if len(nbh.c) == L:
        c_order = tuple((i + d) % L for d in range(L))
    else:
        c_order = tuple((i + d) % L for d in range(-rC, rC + 1))
    return c_order, trials, posmap


def enumerate_arc(model: RunsModel, trials: list) -> tuple:
    """(codes, weights) over all configurations of the given trials."""
    return _enumerate_bits(model.probs[np.asarray(trials, dtype=np.int64)])


def _remainder_laws(model: RunsModel, trials: list, boundary_pos: list,
                    c_set: set) -> list:
    """For each assignment of the boundary trials: the normalized law of
    sum_{j not in C} X_j given those boundary bits (the outside sum is
    independent of the arc interior given the boundary trials)."""
    out = []
    mask = np.ones(model.L, dtype=bool)
    for j in c_set:
        mask[j] = False
    interior = [t for pos, t in enumerate(trials) if pos not in set(boundary_pos)]
    for assign in range(1 << len(boundary_pos)):
        frozen = {t: 0 for t in interior}
        for t_idx, pos in enumerate(boundary_pos):
            frozen[trials[pos]] = (assign >> t_idx) & 1
        law = _law_dp(model, frozen=frozen, count_mask=mask)
        total = law.sum()
        hi = int(np.nonzero(law)[0][-1]) + 1 if total > 0 else 1
        out.append(law[:hi] / total)
    return out


def conditional_laws(model: RunsModel, i: int) -> ConditionalLawTable:
    """The mixture decomposition of L(W) over the values of X_{C_i}.

    The trial arc determining X_{C_i} is enumerated exhaustively; the law
    of the remaining sum depends on the arc only through its first/last
    pattern_len - 1 trials, so one constrained DP per boundary assignment
    suffices.  Conditioning classes are grouped by the induced X vector.
    """
    L = model.L
    c_order, trials, posmap = arc_info(model, i)
    codes, weights = enumerate_arc(model, trials)
    xcols = [_x_column(model, codes, posmap, j) for j in c_order]
    x_key = np.zeros(codes.size, dtype=np.int64)
    x_sum = np.zeros(codes.size, dtype=np.int64)
    for idx, col in enumerate(xcols):
        x_key |= col.astype(np.int64) << idx
        x_sum += col

    if len(trials) == L:
        # the arc is the whole circle: W is determined per configuration
        W = x_sum.copy()
        outside = [j for j in range(L) if j not in set(c_order)]
        for j in outside:
            W += _x_column(model, codes, posmap, j)
        entries = []
        for key in np.unique(x_key):
            sel = x_key == key
            wsel = weights[sel]
            law = np.bincount(W[sel], weights=wsel)
            lo = int(np.nonzero(law)[0][0])
            hi = int(np.nonzero(law)[0][-1]) + 1
            meas = LatticeMeasure(lo, law[lo:hi] / wsel.sum())
            entries.append(ConditionalEntry(
                weight=float(wsel.sum()), x_key=int(key),
                x_sum=int(x_sum[sel][0]), law=meas,
                d_value=smoothness_D(meas)))
        return ConditionalLawTable(i=i, c_indices=c_order, entries=tuple(entries))

    P = model.pattern_len
    nb_each = min(P - 1, len(trials))
    boundary_pos = sorted(set(range(nb_each))
                          | set(range(len(trials) - nb_each, len(trials))))
    rem = _remainder_laws(model, trials, boundary_pos, set(c_order))
    bkey = np.zeros(codes.size, dtype=np.int64)
    for t_idx, pos in enumerate(boundary_pos):
        bkey |= ((codes >> pos) & 1) << t_idx
    nb = 1 << len(boundary_pos)
    combo = x_key * nb + bkey
    uniq, first, inv = np.unique(combo, return_index=True, return_inverse=True)
    wsum = np.bincount(inv, weights=weights, minlength=uniq.size)
    u_x = uniq // nb
    u_b = uniq % nb
    u_c = x_sum[first]
    entries = []
    for key in np.unique(u_x):
        sel = np.nonzero(u_x == key)[0]
        total = float(wsum[sel].sum())
        c_val = int(u_c[sel[0]])
        size = max(rem[int(u_b[s])].size for s in sel)
        mix = np.zeros(size)
        for s in sel:
            r = rem[int(u_b[s])]
            mix[: r.size] += wsum[s] * r
        mix /= total
        meas = LatticeMeasure(c_val, mix)
        entries.append(ConditionalEntry(
            weight=total, x_key=int(key), x_sum=c_val, law=meas,
            d_value=smoothness_D(meas)))
    return ConditionalLawTable(i=i, c_indices=c_order, entries=tuple(entries))


# ---------------------------------------------------------------------------
# 1-dependent block decomposition of the k1k2 family


@dataclass(frozen=True)
class BlockStructure:
    """The 1-dependent block variables T_i = sum of X over block i.

    Block i (0-based, i < n_blocks) covers X indices i*m .. i*m + m - 1;
    consecutive blocks are dependent only through their shared pattern
    overhang, so (T_i) is 1-dependent with neighborhood radii 1, 2, 3.
    """

    model: RunsModel

    @property
    def m(self) -> int:
        return self.model.window

    @property
    def n_blocks(self) -> int:
        return self.model.n_blocks

    def block_indices(self, i: int) -> list:
        m = self.m
        return [(i % self.n_blocks) * m + u for u in range(m)]

    def a_bar(self, j: int) -> float:
        """1 - min over (t-,t+) in {0,1}^2 of P(T_j = 1 | T_{j-1}=t-,
        T_{j+1}=t+), by exact enumeration of the 4m trials spanning blocks
        j-1 .. j+1 (only achievable neighbor values enter the min)."""
        model = self.model
        m = self.m
        L = model.L
        if 4 * m > MAX_BRUTE_TRIALS:
            raise ModelError("block enumeration too large")
        if 4 * m >= L:
            raise ModelError("need more than 4 blocks for a_bar enumeration")
        start = ((j - 1) % self.n_blocks) * m
        trials = [(start + u) % L for u in range(4 * m)]
        posmap = {t: pos for pos, t in enumerate(trials)}
        codes, weights = enumerate_arc(model, trials)

        def tcol(block):
            acc = np.zeros(codes.size, dtype=np.int64)
            for idx in self.block_indices(block):
                acc += _x_column(model, codes, posmap, idx)
            return acc

        t_prev, t_mid, t_next = tcol(j - 1), tcol(j), tcol(j + 1)
        p1_min = 1.0
        for a in (0, 1):
            for c in (0, 1):
                sel = (t_prev == a) & (t_next == c)
                tot = weights[sel].sum()
                if tot <= 0.0:
                    continue
                p1 = weights[sel & (t_mid == 1)].sum() / tot
                p1_min = min(p1_min, float(p1))
        return 1.0 - p1_min

    def law(self) -> LatticeMeasure:
        """Law of sum T_i (identical to the law of W by regrouping)."""
        return exact_law(self.model)


def block_sums(model: RunsModel) -> BlockStructure:
    """1-dependent block view of a k1k2 (or one_one, m = 1) model."""
    if model.kind == "kruns":
        raise ModelError("block decomposition applies to the k1k2 family")
    return BlockStructure(model)
