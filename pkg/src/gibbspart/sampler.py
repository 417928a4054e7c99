"""Seeded sampling of random partitions under multiplicative measures.

Occupation numbers are independent across levels, so a partition is sampled
level by level up to a truncation horizon K with tail mass below tail_tol:

* bulk levels (mean occupation >= 10^-3): one vectorized draw per sample;
  Bose negative binomials with real shape come from the gamma-Poisson
  mixture, Fermi occupations from binomials;
* tail levels: occupied levels are located by an exponential race over the
  cumulative hazard H(m) = sum_{k>m} log f_k(x^k) (exact: the probability
  that no level in (a,b] is occupied equals exp(H(b)-H(a))), and the
  multiplicity at an occupied level is drawn from the conditional pmf given
  r >= 1 by sequential inversion.

The race runs before the bulk draw, so the top-statistics path (race stopped
after d parts, bulk vector scanned from the top when fewer than d parts live
above the boundary) consumes the same variates as the full sampler and
reproduces its top-d rows exactly. Every sample uses its own generator derived
from (seed, index), so results do not depend on execution order or batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError, ResourceError, ValidationError
from .measure import BOSE, MultiplicativeMeasure, Partition, truncation_horizon
from .weights import WeightSequence

DEFAULT_TAIL_TOL = 1e-9
DEFAULT_LEVEL_CAP = 50_000_000
ENUMERATION_BUDGET = 30

# Levels with mean occupation below this are handled by the race sampler.
BULK_MEAN_CUTOFF = 1e-3

# Rejection-sampling controls.
DEFAULT_ATTEMPT_CAP = 1_000_000
_ATTEMPT_BLOCK = 32

# Safety cap for sequential pmf inversion (never reached in practice).
_INVERSION_CAP = 10_000_000


@dataclass(frozen=True)
class SamplerConfig:
    """Seed plus truncation controls shared by all sampling operations."""

    seed: int
    tail_tol: float = DEFAULT_TAIL_TOL
    level_cap: int = DEFAULT_LEVEL_CAP

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if not (0.0 < self.tail_tol < 1.0):
            raise ValidationError("tail_tol must lie in (0,1)")
        if self.level_cap < 1:
            raise ValidationError("level_cap must be >= 1")


def derived_generator(seed: int, *path: int) -> np.random.Generator:
    """Independent stream keyed by (seed, *path); stable across runs."""
    entropy = (int(seed),) + tuple(int(p) for p in path)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


class _SamplerTables:
    """Per-(measure, horizon) arrays shared by all samples."""

    def __init__(self, m: MultiplicativeMeasure, cfg: SamplerConfig, k_cap: int | None = None):
        K = truncation_horizon(m, cfg.tail_tol)
        if k_cap is not None:
            K = min(K, k_cap)
        if K > cfg.level_cap:
            raise ResourceError(
                f"truncation horizon {K} exceeds level cap {cfg.level_cap}"
            )
        self.m = m
        self.K = K
        self.b = m.weights.weights_upto(K)
        ks = np.arange(1, K + 1, dtype=np.float64)
        self.z = np.exp(ks * math.log(m.x))
        if m.kind == BOSE:
            self.mean = self.b * self.z / (1.0 - self.z)
            haz = -self.b * np.log1p(-self.z)
        else:
            self.mean = self.b * self.z / (1.0 + self.z)
            haz = self.b * np.log1p(self.z)
        # L[idx] = sum_{k>idx, k<=K} log f_k(x^k), idx = 0..K (decreasing).
        L = np.zeros(K + 1, dtype=np.float64)
        if K:
            L[:K] = np.cumsum(haz[::-1])[::-1]
        self.negL = -L
        bulk = np.nonzero(self.mean >= BULK_MEAN_CUTOFF)[0]
        self.bulk_end = int(bulk[-1]) + 1 if bulk.size else 0  # levels 1..bulk_end
        nb = self.bulk_end
        if m.kind == BOSE:
            self.bulk_shape = self.b[:nb]
            self.bulk_scale = self.z[:nb] / (1.0 - self.z[:nb])
        else:
            self.bulk_trials = np.rint(self.b[:nb]).astype(np.int64)
            self.bulk_p = self.z[:nb] / (1.0 + self.z[:nb])

    def next_occupied_below(self, U: int, E: float) -> int:
        """Largest occupied level <= U given that levels above U are resolved;
        0 when no level in [1, U] fires for this exponential draw."""
        if U <= 0:
            return 0
        target = -self.negL[U] + E
        cnt = int(np.searchsorted(self.negL, -target, side="right"))
        return cnt if cnt >= 1 else 0

    def conditional_multiplicity(self, level: int, u: float) -> int:
        """Inverse-CDF draw of r_level given r_level >= 1."""
        b = float(self.b[level - 1])
        z = float(self.z[level - 1])
        if self.m.kind == BOSE:
            log_p0 = b * math.log1p(-z)
        else:
            log_p0 = -b * math.log1p(z)
        p0 = math.exp(log_p0)
        target = p0 + u * (1.0 - p0)
        pmf = b * z * p0
        cum = p0 + pmf
        j = 1
        while cum < target:
            if self.m.kind == BOSE:
                pmf *= z * (j + b) / (j + 1)
            else:
                if j >= b:
                    break  # float roundoff; the binomial support ends at b
                pmf *= z * (b - j) / (j + 1)
            j += 1
            cum += pmf
            if j > _INVERSION_CAP:
                raise BudgetError("occupation inversion exceeded iteration cap")
        return j

    def bulk_draw(self, rng: np.random.Generator) -> np.ndarray:
        """Occupations at levels 1..bulk_end in one vectorized draw."""
        if not self.bulk_end:
            return np.zeros(0, dtype=np.int64)
        if self.m.kind == BOSE:
            lam = rng.gamma(self.bulk_shape, self.bulk_scale)
            return rng.poisson(lam)
        return rng.binomial(self.bulk_trials, self.bulk_p)

    def sample_occupations(self, rng: np.random.Generator) -> dict[int, int]:
        """One full draw of all occupation numbers up to the horizon.

        Race first, bulk second: the tail variates form a prefix shared with
        the top-statistics path."""
        occ: dict[int, int] = {}
        nb = self.bulk_end
        U = self.K
        while U > nb:
            level = self.next_occupied_below(U, float(rng.standard_exponential()))
            if level <= nb:
                break
            occ[level] = self.conditional_multiplicity(level, float(rng.random()))
            U = level - 1
        r = self.bulk_draw(rng)
        for idx in np.nonzero(r)[0]:
            occ[int(idx) + 1] = int(r[idx])
        return occ


def sample_partition(
    m: MultiplicativeMeasure, cfg: SamplerConfig, index: int | None = None
) -> Partition:
    """One partition under mu_x; deterministic given (measure, seed, index)."""
    tables = _SamplerTables(m, cfg)
    rng = derived_generator(cfg.seed) if index is None else derived_generator(cfg.seed, index)
    return Partition.from_occupations(tables.sample_occupations(rng))


def sample_partitions(m: MultiplicativeMeasure, cfg: SamplerConfig, N: int) -> list[Partition]:
    """N partitions with per-sample derived streams (seed, i)."""
    if N < 0:
        raise ValidationError("need N >= 0")
    tables = _SamplerTables(m, cfg)
    out = []
    for i in range(N):
        rng = derived_generator(cfg.seed, i)
        out.append(Partition.from_occupations(tables.sample_occupations(rng)))
    return out


def sample_top_statistics(
    m: MultiplicativeMeasure, cfg: SamplerConfig, N: int, d: int
) -> np.ndarray:
    """Top-d order statistics of N independent partitions, shape (N, d).

    Row i equals top_order_statistics(sample_partitions(m, cfg, N)[i], d): the
    race consumes the same variate prefix as the full sampler and the bulk
    fallback replays the same vector draw; only the work below the d-th part
    is skipped. Missing parts are zeros (partition shorter than d).
    """
    if d < 1:
        raise ValidationError(f"need d >= 1, got {d}")
    if N < 0:
        raise ValidationError("need N >= 0")
    tables = _SamplerTables(m, cfg)
    nb = tables.bulk_end
    out = np.zeros((N, d), dtype=np.int64)
    for i in range(N):
        rng = derived_generator(cfg.seed, i)
        U = tables.K
        filled = 0
        while filled < d and U > nb:
            level = tables.next_occupied_below(U, float(rng.standard_exponential()))
            if level <= nb:
                break
            r = tables.conditional_multiplicity(level, float(rng.random()))
            take = min(r, d - filled)
            out[i, filled : filled + take] = level
            filled += take
            U = level - 1
        if filled < d and nb:
            bulk = tables.bulk_draw(rng)
            for idx in np.nonzero(bulk)[0][::-1]:
                take = min(int(bulk[idx]), d - filled)
                out[i, filled : filled + take] = int(idx) + 1
                filled += take
                if filled == d:
                    break
    return out


def top_order_statistics(p: Partition, d: int) -> list[int]:
    """m_1 >= ... >= m_d with multiplicity, zero-padded beyond length(p)."""
    if d < 1:
        raise ValidationError(f"need d >= 1, got {d}")
    parts = p.parts_desc()[:d]
    return parts + [0] * (d - len(parts))


def _weights_from_occ_matrix(levels: np.ndarray, r: np.ndarray) -> np.ndarray:
    return r @ levels


def sample_small_canonical(
    seq: WeightSequence,
    n: int,
    cfg: SamplerConfig,
    attempt_cap: int = DEFAULT_ATTEMPT_CAP,
    x: float | None = None,
    index: int | None = None,
) -> Partition:
    """One partition of weight exactly n: calibrated grand-canonical sampling
    rejected until the weight hits n (the conditional law does not depend
    on the activity used)."""
    parts, _ = sample_small_canonical_batch(
        seq, n, cfg, 1, attempt_cap=attempt_cap, x=x, first_index=0 if index is None else index
    )
    return parts[0]


def _calibrated_activity(seq: WeightSequence, n: int) -> float:
    from .asymptotics import CLOSED_FORM, NUMERIC, calibrate_x

    try:
        return calibrate_x(seq, n, CLOSED_FORM)
    except ValidationError:
        # Closed form unavailable (tabulated weights) or outside (0,1) at
        # small n; the conditional law is activity-independent, so any
        # calibration that brackets n works.
        return calibrate_x(seq, n, NUMERIC)


def sample_small_canonical_batch(
    seq: WeightSequence,
    n: int,
    cfg: SamplerConfig,
    N: int,
    attempt_cap: int = DEFAULT_ATTEMPT_CAP,
    x: float | None = None,
    first_index: int = 0,
) -> tuple[list[Partition], int]:
    """N fixed-weight partitions plus the total number of attempts.

    Attempts for sample i consume the stream (seed, first_index + i) in blocks,
    so the result is reproducible for any batching. Levels above n are never
    occupied in an accepted partition and are excluded from the proposals (the
    conditional law is unchanged).
    """
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    if N < 0:
        raise ValidationError("need N >= 0")
    activity = _calibrated_activity(seq, n) if x is None else x
    m = MultiplicativeMeasure(seq, activity, BOSE)
    tables = _SamplerTables(m, cfg, k_cap=n)
    K = tables.K
    levels = np.arange(1, K + 1, dtype=np.int64)
    out: list[Partition] = []
    total_attempts = 0
    use_bulk_matrix = K == tables.bulk_end  # all levels in one vector draw
    for i in range(N):
        rng = derived_generator(cfg.seed, first_index + i)
        attempts = 0
        found = None
        while found is None:
            if attempts >= attempt_cap:
                raise BudgetError(
                    f"rejection sampler exhausted {attempt_cap} attempts at n={n}"
                )
            if use_bulk_matrix:
                block = min(_ATTEMPT_BLOCK, attempt_cap - attempts)
                if m.kind == BOSE:
                    lam = rng.gamma(
                        np.broadcast_to(tables.bulk_shape, (block, K)),
                        np.broadcast_to(tables.bulk_scale, (block, K)),
                    )
                    r = rng.poisson(lam)
                else:
                    r = rng.binomial(tables.bulk_trials, tables.bulk_p, size=(block, K))
                w = _weights_from_occ_matrix(levels, r)
                attempts += block
                hits = np.nonzero(w == n)[0]
                if hits.size:
                    row = r[int(hits[0])]
                    nz = np.nonzero(row)[0]
                    found = {int(levels[j]): int(row[j]) for j in nz}
            else:
                occ = tables.sample_occupations(rng)
                attempts += 1
                if sum(k * r_ for k, r_ in occ.items()) == n:
                    found = occ
        total_attempts += attempts
        out.append(Partition.from_occupations(found))
    return out, total_attempts


def _log_s_bose(b: float, r: int) -> float:
    if r == 0:
        return 0.0
    if b == 0.0:
        return -math.inf
    return math.lgamma(r + b) - math.lgamma(b) - math.lgamma(r + 1)


def enumerate_partitions(
    seq: WeightSequence, n: int, budget: int | None = ENUMERATION_BUDGET
):
    """All partitions of n with fixed-weight probabilities (Bose kind).

    Each partition lambda carries prod_k s_k(r_k) / Q(n) with
    s_k(r) = C(r + b_k - 1, r); exact integer numerators when the weights are
    integers. Partitions are listed in descending lexicographic part order.
    """
    if n < 0:
        raise ValidationError(f"need n >= 0, got {n}")
    if budget is not None and n > budget:
        raise BudgetError(f"enumeration of n={n} exceeds budget {budget}")
    b = seq.weights_upto(n) if n else np.zeros(0)
    integer = seq.is_integer_valued()

    def s_factor(k: int, r: int):
        bk = b[k - 1]
        if integer:
            return math.comb(r + int(round(bk)) - 1, r)
        return math.exp(_log_s_bose(float(bk), r))

    results: list[tuple[Partition, object]] = []
    stack_occ: list[tuple[int, int]] = []

    def rec(remaining: int, max_part: int, mass):
        if remaining == 0:
            results.append((Partition(tuple(sorted(stack_occ))), mass))
            return
        for k in range(min(remaining, max_part), 0, -1):
            for r in range(remaining // k, 0, -1):
                factor = s_factor(k, r)
                if factor == 0:
                    continue
                stack_occ.append((k, r))
                rec(remaining - k * r, k - 1, mass * factor)
                stack_occ.pop()

    rec(n, n, 1 if integer else 1.0)
    total = sum(mass for _, mass in results)
    if total == 0:
        raise ValidationError(f"no partition of {n} has positive weight")
    if integer:
        return [(p, float(Fraction(mass, total))) for p, mass in results]
    return [(p, mass / total) for p, mass in results]
