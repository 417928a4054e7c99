"""Multiplicative measures on integer partitions.

A measure is determined by a weight sequence b_k, an activity x in (0,1),
and a statistics kind. Occupation numbers r_k are independent with

* Bose:  f_k(z) = (1-z)^(-b_k),  r_k ~ negative binomial (shape b_k, z = x^k)
* Fermi: f_k(z) = (1+z)^(b_k),   r_k ~ binomial (b_k trials, p = z/(1+z))

The probability that the maximal summand is at most M is the tail product
prod_{k>M} 1/f_k(x^k) = exp(-L(M)); everything is evaluated in log space with
a certified truncation horizon, so each returned value carries an explicit
error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError, ResourceError, ValidationError
from .weights import WeightSequence

BOSE = "bose"
FERMI = "fermi"

# Default certified remainder for truncated tail sums.
DEFAULT_TOL = 1e-12

# Hard ceiling on any truncation horizon search.
DEFAULT_LEVEL_CAP = 200_000_000

# Budgets for small-canonical (fixed-weight) computations.
COUNTS_BUDGET = 60

# Chunk length for streaming tail sums; bounds peak memory.
_SUM_CHUNK = 1 << 20


@dataclass(frozen=True)
class Partition:
    """Sparse partition: sorted tuple of (level k, occupation r_k), r_k >= 1."""

    occupations: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        last = 0
        for k, r in self.occupations:
            if k <= last:
                raise ValidationError("occupation levels must be strictly increasing")
            if r < 1:
                raise ValidationError("stored occupations must be >= 1")
            last = k

    @classmethod
    def from_occupations(cls, occ: dict[int, int]) -> "Partition":
        if any(r < 0 for r in occ.values()):
            raise ValidationError("occupation numbers must be >= 0")
        items = tuple(sorted((int(k), int(r)) for k, r in occ.items() if r > 0))
        return cls(items)

    @classmethod
    def from_parts(cls, parts) -> "Partition":
        occ: dict[int, int] = {}
        for p in parts:
            occ[p] = occ.get(p, 0) + 1
        return cls.from_occupations(occ)

    @property
    def weight(self) -> int:
        return sum(k * r for k, r in self.occupations)

    @property
    def length(self) -> int:
        return sum(r for _, r in self.occupations)

    @property
    def max_part(self) -> int:
        return self.occupations[-1][0] if self.occupations else 0

    def parts_desc(self) -> list[int]:
        out: list[int] = []
        for k, r in reversed(self.occupations):
            out.extend([k] * r)
        return out

    def to_dict(self) -> dict[int, int]:
        return dict(self.occupations)


@dataclass(frozen=True)
class MultiplicativeMeasure:
    """Weight sequence + activity + statistics kind; immutable."""

    weights: WeightSequence
    x: float
    kind: str = BOSE

    def __post_init__(self):
        if not (0.0 < self.x < 1.0):
            raise ValidationError(f"activity must lie in (0,1), got {self.x}")
        if self.kind not in (BOSE, FERMI):
            raise ValidationError(f"kind must be {BOSE!r} or {FERMI!r}, got {self.kind!r}")
        if self.kind == FERMI and not self.weights.is_integer_valued():
            raise ValidationError("Fermi statistics requires integer weights b_k")
        c, beta = self.weights.power_majorant()
        if not (c >= 0 and math.isfinite(c) and math.isfinite(beta)):
            raise ValidationError("weight sequence admits no finite power majorant")


@dataclass(frozen=True)
class CountTable:
    """Weighted partition counts Q(0..N); exact integers for integer b_k."""

    seq: WeightSequence
    Q: tuple
    level_cutoff: int | None = None  # counts restricted to levels k <= cutoff

    @property
    def nmax(self) -> int:
        return len(self.Q) - 1

    def q(self, n: int):
        if not (0 <= n <= self.nmax):
            raise ValidationError(f"count index {n} outside table 0..{self.nmax}")
        return self.Q[n]


def _log_majorant_tail(c: float, beta: float, x: float, K: int) -> float:
    """log of a rigorous bound for sum_{k>K} c*k^beta*x^k / (1 - x^(K+1)).

    Uses k^beta <= (K+1)^beta * exp(beta*(k-K-1)/(K+1)) for beta > 0 (concavity
    of log) and plain monotonicity for beta <= 0. Returns +inf when the
    geometric comparison does not yet contract.
    """
    if c == 0.0:
        return -math.inf
    logx = math.log(x)
    if beta > 0:
        w = x * math.exp(beta / (K + 1))
        if w >= 1.0:
            return math.inf
    else:
        w = x
    zK1 = math.exp((K + 1) * logx)
    return (
        math.log(c)
        + beta * math.log(K + 1)
        + (K + 1) * logx
        - math.log1p(-w)
        - math.log1p(-zK1)
    )


def _find_horizon(
    c: float, beta: float, x: float, tol: float, cap: int, support: int | None
) -> int:
    """Smallest K (up to doubling/bisection resolution) with certified
    remainder sum_{k>K} b_k * x^k / (1-x^(K+1)) < tol."""
    if c == 0.0:
        return support if support is not None else 0
    log_tol = math.log(tol)
    K = max(1, int(beta / -math.log(x)) + 1) if beta > 0 else 1
    while _log_majorant_tail(c, beta, x, K) >= log_tol:
        if support is not None and K >= support:
            return support
        if K >= cap:
            raise ResourceError(
                f"truncation horizon exceeds cap {cap} (x={x}, majorant c={c}, beta={beta})"
            )
        K = min(2 * K, cap if support is None else min(cap, support))
    lo, hi = K // 2, K
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if _log_majorant_tail(c, beta, x, mid) < log_tol:
            hi = mid
        else:
            lo = mid
    if support is not None:
        hi = min(hi, support)
    return hi


def truncation_horizon(
    m: MultiplicativeMeasure, tol: float = DEFAULT_TOL, cap: int = DEFAULT_LEVEL_CAP
) -> int:
    """K such that sum_{k>K} log f_k(x^k) < tol, certified by the majorant."""
    if not (tol > 0):
        raise ValidationError("tolerance must be positive")
    c, beta = m.weights.power_majorant()
    return _find_horizon(c, beta, m.x, tol, cap, m.weights.support_limit())


def _log_level_terms(m: MultiplicativeMeasure, b: np.ndarray, k_lo: int, k_hi: int) -> np.ndarray:
    """log f_k(x^k) for k = k_lo..k_hi; b is the full weight vector b_1..b_K."""
    ks = np.arange(k_lo, k_hi + 1, dtype=np.float64)
    z = np.exp(ks * math.log(m.x))
    bk = b[k_lo - 1 : k_hi]
    if m.kind == BOSE:
        return -bk * np.log1p(-z)
    return bk * np.log1p(z)


def log_tail_product(m: MultiplicativeMeasure, M: int, tol: float = DEFAULT_TOL) -> float:
    """L(M) = sum_{k>M} log f_k(x^k), truncated with certified remainder < tol."""
    if M < 0:
        raise ValidationError(f"need M >= 0, got {M}")
    K = truncation_horizon(m, tol)
    if M >= K:
        return 0.0
    b = m.weights.weights_upto(K)
    partials = []
    for lo in range(M + 1, K + 1, _SUM_CHUNK):
        hi = min(lo + _SUM_CHUNK - 1, K)
        partials.append(float(np.sum(_log_level_terms(m, b, lo, hi))))
    return math.fsum(partials)


def max_cdf(m: MultiplicativeMeasure, M: int, tol: float = DEFAULT_TOL) -> float:
    """mu_x{max(lambda) <= M} = exp(-L(M))."""
    return math.exp(-log_tail_product(m, M, tol))


def max_cdf_batch(m: MultiplicativeMeasure, Ms, tol: float = DEFAULT_TOL) -> np.ndarray:
    """max_cdf at many thresholds sharing one pass over the level terms.

    Segment sums between consecutive distinct thresholds are pairwise-summed,
    then suffix-accumulated with fsum, so the float error stays far below tol.
    """
    Ms = np.asarray(Ms, dtype=np.int64)
    if Ms.size == 0:
        return np.zeros(0, dtype=np.float64)
    if np.any(Ms < 0):
        raise ValidationError("thresholds must be >= 0")
    K = truncation_horizon(m, tol)
    uniq = np.unique(Ms)
    inner = uniq[uniq < K]
    L_at: dict[int, float] = {int(M): 0.0 for M in uniq[uniq >= K]}
    if inner.size:
        b = m.weights.weights_upto(K)
        bounds = list(inner) + [K]
        seg_sums = []
        for i in range(len(inner)):
            lo, hi = int(bounds[i]) + 1, int(bounds[i + 1])
            parts = []
            for clo in range(lo, hi + 1, _SUM_CHUNK):
                chi = min(clo + _SUM_CHUNK - 1, hi)
                parts.append(float(np.sum(_log_level_terms(m, b, clo, chi))))
            seg_sums.append(math.fsum(parts))
        for i in range(len(inner)):
            L_at[int(inner[i])] = math.fsum(seg_sums[i:])
    return np.array([math.exp(-L_at[int(M)]) for M in Ms], dtype=np.float64)


def _log_s(kind: str, b: float, j: int) -> float:
    """log s_k(j): Taylor coefficient of f_k at order j (log scale; -inf if 0)."""
    if j == 0:
        return 0.0
    if kind == BOSE:
        if b == 0.0:
            return -math.inf
        return math.lgamma(j + b) - math.lgamma(b) - math.lgamma(j + 1)
    bi = int(b)
    if j > bi:
        return -math.inf
    return math.lgamma(bi + 1) - math.lgamma(j + 1) - math.lgamma(bi - j + 1)


def occupation_pmf(m: MultiplicativeMeasure, k: int, j: int) -> float:
    """P(r_k = j) = s_k(j) * x^(k j) / f_k(x^k)."""
    if k < 1:
        raise ValidationError(f"level index must be >= 1, got {k}")
    if j < 0:
        raise ValidationError(f"occupation must be >= 0, got {j}")
    b = m.weights.weight_at(k)
    z = math.exp(k * math.log(m.x))
    log_s = _log_s(m.kind, b, j)
    if log_s == -math.inf:
        return 0.0
    if m.kind == BOSE:
        log_norm = -b * math.log1p(-z)
    else:
        log_norm = b * math.log1p(z)
    return math.exp(log_s + j * k * math.log(m.x) - log_norm)


def occupation_mean(m: MultiplicativeMeasure, k: int) -> float:
    """E r_k: Bose b_k*z/(1-z); Fermi b_k*z/(1+z), z = x^k."""
    if k < 1:
        raise ValidationError(f"level index must be >= 1, got {k}")
    b = m.weights.weight_at(k)
    z = math.exp(k * math.log(m.x))
    if m.kind == BOSE:
        return b * z / (1.0 - z)
    return b * z / (1.0 + z)


def expected_weight(m: MultiplicativeMeasure, tol: float = DEFAULT_TOL) -> float:
    """E sum_k k*r_k, truncated with certified remainder < tol."""
    if not (tol > 0):
        raise ValidationError("tolerance must be positive")
    c, beta = m.weights.power_majorant()
    # per-term majorant k*b_k*x^k/(1 -+ x^k) <= c*k^(beta+1)*x^k / (1-x^(K+1))
    K = _find_horizon(c, beta + 1.0, m.x, tol, DEFAULT_LEVEL_CAP, m.weights.support_limit())
    if K == 0:
        return 0.0
    b = m.weights.weights_upto(K)
    logx = math.log(m.x)
    partials = []
    for lo in range(1, K + 1, _SUM_CHUNK):
        hi = min(lo + _SUM_CHUNK - 1, K)
        ks = np.arange(lo, hi + 1, dtype=np.float64)
        z = np.exp(ks * logx)
        denom = (1.0 - z) if m.kind == BOSE else (1.0 + z)
        partials.append(float(np.sum(ks * b[lo - 1 : hi] * z / denom)))
    return math.fsum(partials)


def exact_top_levels_pmf(
    m: MultiplicativeMeasure, levels, tol: float = DEFAULT_TOL
) -> float:
    """P(r_k = 1 exactly at the given levels k_1 > ... > k_d, r_k = 0 at all
    other levels above k_d; levels <= k_d unconstrained)."""
    levels = [int(k) for k in levels]
    if not levels:
        raise ValidationError("need at least one level")
    if any(k < 1 for k in levels):
        raise ValidationError("levels must be positive integers")
    if any(a <= b for a, b in zip(levels, levels[1:])):
        raise ValidationError("levels must be strictly decreasing")
    logx = math.log(m.x)
    log_p = 0.0
    for k in levels:
        b = m.weights.weight_at(k)
        if b == 0.0:
            return 0.0
        log_p += math.log(b) + k * logx
    # pmf(0) factors for every unnamed level >= k_d; the named levels' own
    # 1/f factors are part of their pmf(1) = s(1) x^k / f.
    log_p -= log_tail_product(m, levels[-1] - 1, tol)
    return math.exp(log_p)


def log_prob(m: MultiplicativeMeasure, p: Partition, tol: float = DEFAULT_TOL) -> float:
    """log mu_x(lambda) = sum_k [log s_k(r_k) + k*r_k*log x] - log F(x)."""
    logx = math.log(m.x)
    acc = -log_tail_product(m, 0, tol)
    for k, r in p.occupations:
        b = m.weights.weight_at(k)
        ls = _log_s(m.kind, b, r)
        if ls == -math.inf:
            return -math.inf
        acc += ls + k * r * logx
    return acc


def _integer_weights(seq: WeightSequence, N: int) -> list[int] | None:
    if not seq.is_integer_valued():
        return None
    return [int(round(v)) for v in seq.weights_upto(N)]


def _divisor_power_sums(b: list, N: int) -> list:
    """sigma_b(m) = sum_{k | m} k*b_k for m = 1..N (index 0 unused)."""
    zero = 0 if all(isinstance(v, int) for v in b) else 0.0
    sigma = [zero] * (N + 1)
    for k in range(1, N + 1):
        kb = k * b[k - 1]
        if kb == 0:
            continue
        for mult in range(k, N + 1, k):
            sigma[mult] += kb
    return sigma


def weighted_counts(
    seq: WeightSequence,
    N: int,
    budget: int | None = COUNTS_BUDGET,
    level_cutoff: int | None = None,
) -> CountTable:
    """Coefficients Q(0..N) of prod_{k} (1-x^k)^(-b_k) (Bose product).

    Uses the log-derivative recurrence n*Q(n) = sum_m sigma_b(m)*Q(n-m); exact
    big-integer arithmetic whenever the weights are integer valued. With
    level_cutoff set, only levels k <= cutoff enter the product.
    """
    if N < 0:
        raise ValidationError(f"need N >= 0, got {N}")
    if budget is not None and N > budget:
        raise BudgetError(f"count table size {N} exceeds budget {budget}")
    ints = _integer_weights(seq, N)
    if ints is not None:
        b: list = ints
    else:
        b = [float(v) for v in seq.weights_upto(N)]
    if level_cutoff is not None:
        if level_cutoff < 0:
            raise ValidationError("level cutoff must be >= 0")
        for k in range(level_cutoff + 1, N + 1):
            b[k - 1] = 0 if ints is not None else 0.0
    sigma = _divisor_power_sums(b, N)
    exact = ints is not None
    Q: list = [1 if exact else 1.0]
    for n in range(1, N + 1):
        s = sum(sigma[mm] * Q[n - mm] for mm in range(1, n + 1))
        if exact:
            q, rem = divmod(s, n)
            if rem:
                raise ValidationError("integer count recurrence produced a non-integer")
            Q.append(q)
        else:
            Q.append(s / n)
    return CountTable(seq=seq, Q=tuple(Q), level_cutoff=level_cutoff)


def small_canonical_max_cdf(
    seq: WeightSequence, n: int, M: int, budget: int | None = COUNTS_BUDGET
) -> float:
    """mu^n{max(lambda) <= M} = Q_{<=M}(n) / Q(n) (fixed-weight conditional law)."""
    if n < 0:
        raise ValidationError(f"need n >= 0, got {n}")
    if M < 1:
        raise ValidationError(f"need M >= 1, got {M}")
    full = weighted_counts(seq, n, budget=budget)
    qn = full.q(n)
    if qn == 0:
        raise ValidationError(f"Q({n}) = 0: the conditional measure is undefined")
    if M >= n:
        return 1.0
    restricted = weighted_counts(seq, n, budget=budget, level_cutoff=M)
    qm = restricted.q(n)
    if isinstance(qn, int) and isinstance(qm, int):
        return float(Fraction(qm, qn))
    return qm / qn
