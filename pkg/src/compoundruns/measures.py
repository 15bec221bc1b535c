"""
Finitely supported (possibly signed) measures on the integers.

This module is the numeric currency of the package: exact laws of counting
statistics, compound approximation targets, and conditional laws are all
represented as a LatticeMeasure (an offset plus a dense weight vector).
Builders for the standard target families are provided, together with
convolution, total-variation distance, the first/second-difference
smoothness functionals and factorial-cumulant extraction.
"""

from dataclasses import dataclass
import math

import numpy as np

#: Default truncation tolerance for infinite-support builders.
DEFAULT_TAIL_TOL = 1e-14

#: Hard cap on recursion length before declaring divergence.
_MAX_SUPPORT = 100_000


class ParameterError(ValueError):
    """A builder parameter lies outside its admissible domain."""


class MassError(ValueError):
    """An operation's mass contract (total mass = 1) is violated."""


class NumericalInstabilityError(ArithmeticError):
    """A recursion diverged instead of producing a summable weight sequence."""


@dataclass(frozen=True, eq=False)
class LatticeMeasure:
    """A finitely supported signed measure on the integers.

    ``weights[j]`` is the mass at integer ``offset + j``.  When
    ``is_probability`` is set, tiny negative weights (>= -1e-15, float
    noise) are clamped to zero and anything more negative is rejected.
    """

    offset: int
    weights: np.ndarray
    is_probability: bool = True

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D array")
        if self.is_probability:
            if np.any(w < -1e-15):
                raise ValueError(
                    "is_probability measure has weight below -1e-15; "
                    "construct with is_probability=False for signed measures"
                )
            w = np.maximum(w, 0.0)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "offset", int(self.offset))

    # -- basic queries -------------------------------------------------

    @property
    def support(self) -> np.ndarray:
        """Integer points carrying the stored weights."""
        return np.arange(self.offset, self.offset + self.weights.size)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def pmf(self, k: int) -> float:
        """Mass at the integer ``k`` (zero outside the stored window)."""
        j = k - self.offset
        if 0 <= j < self.weights.size:
            return float(self.weights[j])
        return 0.0

    def mean(self) -> float:
        return float(np.dot(self.support, self.weights))

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {"offset": self.offset, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeMeasure":
        w = np.asarray(d["weights"], dtype=np.float64)
        return cls(offset=int(d["offset"]), weights=w,
                   is_probability=bool(np.all(w >= -1e-15)))


@dataclass(frozen=True)
class CumulantTriple:
    """First three factorial cumulants (derivatives of log PGF at 1,
    with the third halved, matching the matching-system convention)."""

    gamma1: float
    gamma2: float
    gamma3: float

    def as_tuple(self) -> tuple:
        return (self.gamma1, self.gamma2, self.gamma3)


@dataclass(frozen=True)
class TargetParamsM1:
    """Parameters of the Binomial(n, p) * Poisson(lam) target.

    ``n_tilde = n + delta`` is the real-valued size before flooring.
    """

    n: int
    p: float
    lam: float
    delta: float = 0.0

    def __post_init__(self):
        if self.n < 0 or self.n != int(self.n):
            raise ParameterError("n must be a non-negative integer")
        if not 0.0 < self.p < 1.0:
            raise ParameterError("p must lie in (0,1)")
        if not 0.0 <= self.delta < 1.0:
            raise ParameterError("delta must lie in [0,1)")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def n_tilde(self) -> float:
        return self.n + self.delta

    @property
    def signed(self) -> bool:
        return self.lam < 0.0


@dataclass(frozen=True)
class TargetParamsM2:
    """Parameters of the NegBinomial(r, p_bar) * Poisson(lam) target."""

    r: float
    p_bar: float
    lam: float

    def __post_init__(self):
        if self.r <= 0.0:
            raise ParameterError("r must be positive")
        if not 0.0 < self.p_bar < 1.0:
            raise ParameterError("p_bar must lie in (0,1)")

    @property
    def q_bar(self) -> float:
        return 1.0 - self.p_bar

    @property
    def signed(self) -> bool:
        return self.lam < 0.0


# ---------------------------------------------------------------------------
# construction helpers


def _trim(offset: int, weights: np.ndarray, floor: float = 0.0) -> tuple:
    """Strip leading/trailing weights with |w| <= floor (keeping >= 1 entry)."""
    absw = np.abs(weights)
    keep = np.nonzero(absw > floor)[0]
    if keep.size == 0:
        # degenerate: keep the single largest entry
        j = int(np.argmax(absw))
        return offset + j, weights[j : j + 1]
    lo, hi = int(keep[0]), int(keep[-1]) + 1
    return offset + lo, weights[lo:hi]


def make_binomial(n: int, p: float) -> LatticeMeasure:
    """Binomial(n, p) on {0..n}; weights by the stable ratio recursion."""
    if not 0.0 < p < 1.0:
        raise ParameterError("p must lie in (0,1)")
    if n < 0 or n != int(n):
        raise ParameterError("n must be a non-negative integer")
    n = int(n)
    q = 1.0 - p
    w = np.empty(n + 1)
    w[0] = q ** n
    for k in range(n):
        w[k + 1] = w[k] * (n - k) / (k + 1) * (p / q)
    w /= w.sum()
    return LatticeMeasure(0, w)


def make_negative_binomial(r: float, p_bar: float,
                           tail_tol: float = DEFAULT_TAIL_TOL) -> LatticeMeasure:
    """NegBinomial(r, p_bar) on {0,1,...}: C(r+k-1, k) p_bar^r q_bar^k,
    truncated once the omitted tail mass drops below ``tail_tol``."""
    if r <= 0.0:
        raise ParameterError("r must be positive")
    if not 0.0 < p_bar < 1.0:
        raise ParameterError("p_bar must lie in (0,1)")
    if not 0.0 < tail_tol <= 1e-6:
        raise ParameterError("tail_tol must lie in (0, 1e-6]")
    q_bar = 1.0 - p_bar
    out = [p_bar ** r]
    total = out[0]
    k = 0
    while total < 1.0 - tail_tol:
        out.append(out[-1] * q_bar * (r + k) / (k + 1))
        total += out[-1]
        k += 1
        if k > _MAX_SUPPORT:
            raise NumericalInstabilityError("negative binomial tail did not close")
    w = np.array(out)
    w /= w.sum()
    return LatticeMeasure(0, w)


def make_pseudo_binomial(N: float, p: float) -> LatticeMeasure:
    """Pseudo-binomial PB(N, p), real N > 1: generalized binomial weights
    C(N,k) p^k q^(N-k) on {0..floor(N)}, renormalized."""
    if N <= 1.0:
        raise ParameterError("N must exceed 1")
    if not 0.0 < p < 1.0:
        raise ParameterError("p must lie in (0,1)")
    q = 1.0 - p
    top = int(math.floor(N))
    w = np.empty(top + 1)
    w[0] = q ** N
    for k in range(top):
        w[k + 1] = w[k] * (N - k) / (k + 1) * (p / q)
    w /= w.sum()
    return LatticeMeasure(0, w)


def make_poisson(lam: float, tail_tol: float = DEFAULT_TAIL_TOL) -> LatticeMeasure:
    """Poisson(lam), truncated once the omitted tail is below ``tail_tol``."""
    if lam <= 0.0:
        raise ParameterError("lam must be positive")
    out = [math.exp(-lam)]
    total = out[0]
    k = 0
    while total < 1.0 - tail_tol:
        out.append(out[-1] * lam / (k + 1))
        total += out[-1]
        k += 1
        if k > _MAX_SUPPORT:
            raise NumericalInstabilityError("Poisson tail did not close")
    w = np.array(out)
    w /= w.sum()
    return LatticeMeasure(0, w)


def _poisson_series(lam: float, tail_tol: float) -> np.ndarray:
    """Weights e^(-lam) lam^k / k!, valid for either sign of lam.

    Negative lam gives the alternating-sign pseudo-Poisson factor used by
    signed compound targets; |terms| decay once k exceeds |lam|."""
    out = [math.exp(-lam)]
    k = 0
    while not (k > abs(lam) + 20 and abs(out[-1]) < tail_tol):
        out.append(out[-1] * lam / (k + 1))
        k += 1
        if k > _MAX_SUPPORT:
            raise NumericalInstabilityError("Poisson series did not close")
    return np.array(out)


def _run_panjer(mu0: float, step, lam: float, tail_tol: float,
                min_len: int) -> np.ndarray:
    """Shared driver for the two compound forward recursions.

    ``step(k, mu_k, mu_km1)`` returns mu_{k+1}.  Stops once past ``min_len``
    with two consecutive weights below ``tail_tol``.
    """
    mu = [mu0]
    prev = 0.0
    k = 0
    while True:
        nxt = step(k, mu[k], prev)
        prev = mu[k]
        mu.append(nxt)
        k += 1
        if abs(nxt) > 1e6:
            raise NumericalInstabilityError("compound recursion diverged")
        if k > min_len and abs(mu[k]) < tail_tol and abs(mu[k - 1]) < tail_tol:
            break
        if k > _MAX_SUPPORT:
            raise NumericalInstabilityError("compound recursion did not close")
    return np.array(mu)


def make_compound_m1(params: TargetParamsM1,
                     tail_tol: float = DEFAULT_TAIL_TOL) -> LatticeMeasure:
    """Binomial(n,p) * Poisson(lam) via the forward recursion

        q (k+1) mu_{k+1} = (np + lam q - p k) mu_k + lam p mu_{k-1},

    seeded with mu_0 = q^n e^(-lam).  For lam < 0 the output is a signed
    measure; its mass is asserted equal to 1 (no renormalization)."""
    n, p, lam = params.n, params.p, params.lam
    q = 1.0 - p
    mu0 = q ** n * math.exp(-lam)

    def step(k, mk, mkm1):
        return ((n * p + lam * q - p * k) * mk + lam * p * mkm1) / (q * (k + 1))

    min_len = n + int(math.ceil(abs(lam))) + 20
    try:
        mu = _run_panjer(mu0, step, lam, tail_tol, min_len)
    except NumericalInstabilityError:
        # the forward recursion amplifies roundoff by ~p/q per step and
        # diverges for p well above 1/2; the convolution form is exact
        # and stable, so fall back to it
        binom = make_binomial(n, p)
        pois = _poisson_series(lam, tail_tol)
        mu = np.convolve(binom.weights, pois)
    total = mu.sum()
    if abs(total - 1.0) > 1e-9:
        raise MassError(f"compound M1 mass {total!r} differs from 1 beyond 1e-9")
    signed = lam < 0.0
    if not signed:
        mu = np.maximum(mu, 0.0)
        mu /= mu.sum()
    off, w = _trim(0, mu, floor=0.0)
    return LatticeMeasure(off, w, is_probability=not signed)


def make_compound_m2(params: TargetParamsM2,
                     tail_tol: float = DEFAULT_TAIL_TOL) -> LatticeMeasure:
    """NegBinomial(r, p_bar) * Poisson(lam) via the forward recursion

        (k+1) mu_{k+1} = [q_bar (r+k) + lam] mu_k - lam q_bar mu_{k-1},

    seeded with mu_0 = p_bar^r e^(-lam).  lam < 0 yields a signed measure."""
    r, p_bar, lam = params.r, params.p_bar, params.lam
    q_bar = 1.0 - p_bar
    mu0 = p_bar ** r * math.exp(-lam)

    def step(k, mk, mkm1):
        return ((q_bar * (r + k) + lam) * mk - lam * q_bar * mkm1) / (k + 1)

    min_len = int(math.ceil(r * q_bar / p_bar + abs(lam))) + 20
    mu = _run_panjer(mu0, step, lam, tail_tol, min_len)
    total = mu.sum()
    if abs(total - 1.0) > 1e-9:
        raise MassError(f"compound M2 mass {total!r} differs from 1 beyond 1e-9")
    signed = lam < 0.0
    if not signed:
        mu = np.maximum(mu, 0.0)
        mu /= mu.sum()
    off, w = _trim(0, mu, floor=0.0)
    return LatticeMeasure(off, w, is_probability=not signed)


# ---------------------------------------------------------------------------
# operations


def convolve(a: LatticeMeasure, b: LatticeMeasure) -> LatticeMeasure:
    """Exact discrete convolution: offsets add, masses multiply."""
    w = np.convolve(a.weights, b.weights)
    prob = a.is_probability and b.is_probability
    return LatticeMeasure(a.offset + b.offset, w, is_probability=prob)


def _aligned(a: LatticeMeasure, b: LatticeMeasure) -> tuple:
    lo = min(a.offset, b.offset)
    hi = max(a.offset + a.weights.size, b.offset + b.weights.size)
    wa = np.zeros(hi - lo)
    wb = np.zeros(hi - lo)
    wa[a.offset - lo : a.offset - lo + a.weights.size] = a.weights
    wb[b.offset - lo : b.offset - lo + b.weights.size] = b.weights
    return wa, wb


def tv_distance(a: LatticeMeasure, b: LatticeMeasure,
                mass_tol: float = 1e-6) -> float:
    """Total variation distance (1/2) sum_k |a_k - b_k| between equal-mass
    measures; for mass-1 pairs this equals sup_A |a(A) - b(A)|."""
    if abs(a.total_mass - b.total_mass) > mass_tol:
        raise MassError("tv_distance requires equal total masses")
    wa, wb = _aligned(a, b)
    return 0.5 * float(np.abs(wa - wb).sum())


def smoothness_D(a: LatticeMeasure) -> float:
    """Second-difference smoothness D = sum_m |p_{m-2} - 2 p_{m-1} + p_m|
    (the TV norm of the law convolved with (delta_1 - delta_0)^{*2})."""
    return float(np.abs(np.convolve(a.weights, [1.0, -2.0, 1.0])).sum())


def smoothness_D1(a: LatticeMeasure) -> float:
    """First-difference smoothness sum_k |p_{k-1} - p_k|."""
    return float(np.abs(np.convolve(a.weights, [1.0, -1.0])).sum())


def raw_moments(a: LatticeMeasure) -> tuple:
    """First three raw moments (m1, m2, m3) over the stored support."""
    k = a.support.astype(np.float64)
    w = a.weights
    return (float(np.dot(k, w)),
            float(np.dot(k ** 2, w)),
            float(np.dot(k ** 3, w)))


def factorial_cumulants(a: LatticeMeasure) -> CumulantTriple:
    """Factorial cumulants (Gamma1, Gamma2, Gamma3) of a mass-1 measure:

        Gamma1 = t1,  Gamma2 = t2 - m1^2,
        Gamma3 = (t3 - 3 m1 t2 + 2 m1^3) / 2,

    with t_j the j-th factorial moment.  Truncation of infinite supports
    limits the accuracy to roughly 1e-9 relative."""
    k = a.support.astype(np.float64)
    w = a.weights
    t1 = float(np.dot(k, w))
    t2 = float(np.dot(k * (k - 1.0), w))
    t3 = float(np.dot(k * (k - 1.0) * (k - 2.0), w))
    return CumulantTriple(
        gamma1=t1,
        gamma2=t2 - t1 * t1,
        gamma3=0.5 * (t3 - 3.0 * t1 * t2 + 2.0 * t1 ** 3),
    )


def point_mass(k: int) -> LatticeMeasure:
    """The degenerate measure concentrated at ``k``."""
    return LatticeMeasure(k, np.array([1.0]))
