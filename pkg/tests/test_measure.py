"""Exact measure layer: tail products, occupation laws, count recurrences.

Expected values are either closed forms evaluated inline or direct numeric
oracles (fsum over an explicit far horizon / exact Fraction enumeration),
independent of the library's certified-truncation machinery.
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from gibbspart import (
    BOSE,
    FERMI,
    BudgetError,
    LatticeWeights,
    MultiplicativeMeasure,
    Partition,
    PlaneDiagonalWeights,
    PowerWeights,
    ResourceError,
    TabulatedWeights,
    ValidationError,
    exact_top_levels_pmf,
    expected_weight,
    log_prob,
    log_tail_product,
    max_cdf,
    max_cdf_batch,
    occupation_mean,
    occupation_pmf,
    small_canonical_max_cdf,
    truncation_horizon,
    weighted_counts,
)


def direct_log_tail(seq, x, M, kind=BOSE, K=4000):
    """Oracle: sum_{k>M} log f_k(x^k) by fsum over an explicit far horizon."""
    terms = []
    for k in range(M + 1, K + 1):
        z = x**k
        b = seq.weight_at(k)
        terms.append(-b * math.log1p(-z) if kind == BOSE else b * math.log1p(z))
    return math.fsum(terms)


def bose_measure(x, c=1.0, beta=0.0):
    return MultiplicativeMeasure(PowerWeights(c, beta), x)


def test_measure_validation():
    with pytest.raises(ValidationError):
        MultiplicativeMeasure(PowerWeights(1, 0), 0.0)
    with pytest.raises(ValidationError):
        MultiplicativeMeasure(PowerWeights(1, 0), 1.0)
    with pytest.raises(ValidationError):
        MultiplicativeMeasure(PowerWeights(1, 0), 0.5, "boltzmann")
    # Fermi needs integer weights: binomial f_k(z) = (1+z)^(b_k)
    with pytest.raises(ValidationError):
        MultiplicativeMeasure(PowerWeights(1.0, 0.5), 0.5, FERMI)
    MultiplicativeMeasure(LatticeWeights(3), 0.5, FERMI)  # integer: fine


def test_partition_type():
    p = Partition.from_parts([3, 1, 1])
    assert p.occupations == ((1, 2), (3, 1))
    assert p.weight == 5
    assert p.length == 3
    assert p.max_part == 3
    assert p.parts_desc() == [3, 1, 1]
    assert p.to_dict() == {1: 2, 3: 1}
    empty = Partition.from_parts([])
    assert empty.weight == 0 and empty.max_part == 0
    assert Partition.from_occupations({2: 1, 5: 3}).parts_desc() == [5, 5, 5, 2]
    with pytest.raises(ValidationError):
        Partition.from_parts([0])
    with pytest.raises(ValidationError):
        Partition.from_occupations({2: -1})


def test_occupation_pmf_closed_forms():
    m = bose_measure(0.5)
    # b=1: geometric in z = x^k
    for k in (1, 3):
        z = 0.5**k
        for j in range(6):
            assert occupation_pmf(m, k, j) == pytest.approx((1 - z) * z**j, rel=1e-14)
    # b=2: negative binomial pmf(j) = (j+1) z^j (1-z)^2
    m2 = bose_measure(0.5, c=2.0)
    z = 0.5
    for j in range(5):
        assert occupation_pmf(m2, 1, j) == pytest.approx((j + 1) * z**j * (1 - z) ** 2, rel=1e-14)
    # Fermi b=3: binomial(3, z/(1+z))
    mf = MultiplicativeMeasure(PowerWeights(3, 0), 0.5, FERMI)
    for j in range(4):
        want = math.comb(3, j) * z**j / (1 + z) ** 3
        assert occupation_pmf(mf, 1, j) == pytest.approx(want, rel=1e-14)
    assert occupation_pmf(mf, 1, 4) == 0.0  # beyond binomial support
    with pytest.raises(ValidationError):
        occupation_pmf(m, 0, 1)
    with pytest.raises(ValidationError):
        occupation_pmf(m, 1, -1)


def test_occupation_pmf_normalizes():
    cases = [
        bose_measure(0.7),
        bose_measure(0.9, c=2.5, beta=0.5),
        MultiplicativeMeasure(PlaneDiagonalWeights(), 0.6),
        MultiplicativeMeasure(LatticeWeights(3), 0.4, FERMI),
    ]
    for m in cases:
        for k in (1, 2, 7):
            total = math.fsum(occupation_pmf(m, k, j) for j in range(400))
            assert abs(total - 1.0) < 1e-10


def test_occupation_mean_matches_pmf_sum():
    for m in (bose_measure(0.8, c=1.5, beta=0.3), MultiplicativeMeasure(LatticeWeights(2), 0.5, FERMI)):
        for k in (1, 4):
            direct = math.fsum(j * occupation_pmf(m, k, j) for j in range(600))
            assert occupation_mean(m, k) == pytest.approx(direct, rel=1e-11)


def test_log_tail_product_against_direct_sums():
    cases = [
        (PowerWeights(1, 0), 0.5, BOSE),
        (PowerWeights(1, 0), 0.5, FERMI),
        (PowerWeights(2.5, 0.5), 0.9, BOSE),
        (PlaneDiagonalWeights(), 0.8, BOSE),
        (LatticeWeights(3), 0.6, BOSE),
        (LatticeWeights(2), 0.7, FERMI),
    ]
    for seq, x, kind in cases:
        m = MultiplicativeMeasure(seq, x, kind)
        for M in (0, 1, 5, 40):
            want = direct_log_tail(seq, x, M, kind)
            assert log_tail_product(m, M) == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_log_tail_product_monotone_and_max_cdf_range():
    m = bose_measure(0.9, c=1.0, beta=1.0)
    prev = math.inf
    last_cdf = 0.0
    for M in range(0, 120, 3):
        L = log_tail_product(m, M)
        assert L <= prev + 1e-15
        prev = L
        cdf = max_cdf(m, M)
        assert 0.0 <= cdf <= 1.0
        assert cdf >= last_cdf - 1e-15
        last_cdf = cdf
    assert max_cdf(m, 10**9) == pytest.approx(1.0, abs=1e-12)


def test_max_cdf_values():
    # b=1, x=1/2: P(max <= M) = prod_{k>M} (1 - 2^-k)
    m = bose_measure(0.5)
    ks = np.arange(1, 200)
    for M in (0, 1, 3):
        want = float(np.prod(1 - 0.5 ** ks[M:]))
        assert max_cdf(m, M) == pytest.approx(want, abs=2e-12)


def test_max_cdf_batch_matches_scalar():
    for m in (bose_measure(0.99), MultiplicativeMeasure(LatticeWeights(3), 0.9, FERMI)):
        Ms = np.array([0, 1, 7, 7, 100, 53, 2000])
        batch = max_cdf_batch(m, Ms)
        scalar = np.array([max_cdf(m, int(M)) for M in Ms])
        assert np.allclose(batch, scalar, rtol=0, atol=1e-12)


def test_exact_top_levels_pmf():
    m = bose_measure(0.5)
    ks = np.arange(1, 200)
    # levels=[2]: pmf_2(1) * prod_{k>=3} pmf_k(0), pmf_2(1) = x^2(1-x^2)
    want = 0.1875 * float(np.prod(1 - 0.5 ** ks[2:]))
    assert exact_top_levels_pmf(m, [2]) == pytest.approx(want, abs=1e-12)
    # multi-level event probability as an explicit product of level pmfs
    want2 = (
        occupation_pmf(m, 4, 1)
        * occupation_pmf(m, 3, 0)
        * occupation_pmf(m, 2, 1)
        * math.exp(-direct_log_tail(PowerWeights(1, 0), 0.5, 4))
    )
    assert exact_top_levels_pmf(m, [4, 2]) == pytest.approx(want2, rel=1e-10)
    # leading order b_k x^k as x -> 0
    tiny = bose_measure(1e-4, c=2.0, beta=1.0)
    val = exact_top_levels_pmf(tiny, [3])
    assert val == pytest.approx(2.0 * 3.0 * 1e-12, rel=1e-3)
    with pytest.raises(ValidationError):
        exact_top_levels_pmf(m, [])
    with pytest.raises(ValidationError):
        exact_top_levels_pmf(m, [2, 2])
    with pytest.raises(ValidationError):
        exact_top_levels_pmf(m, [1, 2])
    with pytest.raises(ValidationError):
        exact_top_levels_pmf(m, [0])


def test_max_cdf_increment_dominates_top_pmf():
    # P(max = M) >= P(max = M with multiplicity exactly 1)
    for m in (bose_measure(0.6), MultiplicativeMeasure(PlaneDiagonalWeights(), 0.8)):
        for M in range(1, 41):
            inc = max_cdf(m, M) - max_cdf(m, M - 1)
            assert inc >= exact_top_levels_pmf(m, [M]) - 1e-13


def test_expected_weight():
    # b=1, x=1/2: E W = sum k x^k/(1-x^k), direct fsum oracle
    want = math.fsum(k * 0.5**k / (1 - 0.5**k) for k in range(1, 200))
    assert expected_weight(bose_measure(0.5)) == pytest.approx(want, rel=1e-12)
    mf = MultiplicativeMeasure(PowerWeights(2, 0), 0.5, FERMI)
    wantf = math.fsum(2 * k * 0.5**k / (1 + 0.5**k) for k in range(1, 200))
    assert expected_weight(mf) == pytest.approx(wantf, rel=1e-12)
    # looser tolerance must agree within the sum of both certified remainders
    m9 = bose_measure(0.9, c=1.0, beta=1.0)
    assert abs(expected_weight(m9, tol=1e-6) - expected_weight(m9, tol=1e-12)) < 2e-6


def test_truncation_horizon_is_certified():
    for seq, x in [(PowerWeights(1, 0), 0.9), (PlaneDiagonalWeights(), 0.8), (LatticeWeights(2), 0.7)]:
        m = MultiplicativeMeasure(seq, x)
        K = truncation_horizon(m, 1e-12)
        remainder = direct_log_tail(seq, x, K, BOSE, K=4 * K)
        assert remainder < 1e-12
    # support-limited sequences stop at the support end
    mt = MultiplicativeMeasure(TabulatedWeights((1.0, 2.0, 3.0)), 0.999999)
    assert truncation_horizon(mt, 1e-12) <= 3


def test_log_prob():
    # mu(lambda) = prod_k s(r_k) x^(k r_k) * prod_k (1 - x^k) for b == 1
    m = bose_measure(0.5)
    lam = Partition.from_parts([2, 1])
    want = math.log(0.5**3) - direct_log_tail(PowerWeights(1, 0), 0.5, 0)
    assert log_prob(m, lam) == pytest.approx(want, rel=1e-12)
    # Fermi with multiplicity beyond b: impossible configuration
    mf = MultiplicativeMeasure(PowerWeights(1, 0), 0.5, FERMI)
    assert log_prob(mf, Partition.from_parts([1, 1])) == -math.inf


@lru_cache(maxsize=None)
def _pcount(n, maxp):
    # classic two-variable partition-count recursion (independent of the
    # divisor-sum recurrence under test)
    if n == 0:
        return 1
    if maxp == 0:
        return 0
    return sum(_pcount(n - k, k) for k in range(1, min(n, maxp) + 1))


def test_weighted_counts_examples_and_pn():
    assert [int(q) for q in weighted_counts(PowerWeights(1, 0), 5).Q] == [1, 1, 2, 3, 5, 7]
    assert [int(q) for q in weighted_counts(PlaneDiagonalWeights(), 4).Q] == [1, 1, 3, 6, 13]
    assert [int(q) for q in weighted_counts(PowerWeights(2, 0), 2).Q] == [1, 2, 5]
    table = weighted_counts(PowerWeights(1, 0), 40)
    for n in range(41):
        assert table.q(n) == _pcount(n, n)


def test_weighted_counts_real_shape_against_enumeration():
    from gibbspart import enumerate_partitions

    seq = PowerWeights(1.5, 0.5)
    table = weighted_counts(seq, 12)

    def s_factor(k, r):
        b = seq.weight_at(k)
        return math.exp(math.lgamma(r + b) - math.lgamma(b) - math.lgamma(r + 1))

    # direct total mass: sum over enumerated partitions of prod_k s_k(r_k)
    for n in range(13):
        total = 0.0
        for lam, _ in enumerate_partitions(PowerWeights(1, 0), n):
            total += math.prod(s_factor(k, r) for k, r in lam.occupations)
        assert table.q(n) == pytest.approx(total, rel=1e-11)


def test_weighted_counts_restrictions_and_errors():
    # parts <= 2 only: Q_{<=2}(5) counts (2,2,1),(2,1,1,1),(1^5)
    restricted = weighted_counts(PowerWeights(1, 0), 5, level_cutoff=2)
    assert restricted.q(5) == 3
    with pytest.raises(ResourceError):
        weighted_counts(PowerWeights(1, 0), 100)
    assert weighted_counts(PowerWeights(1, 0), 100, budget=None).q(100) == _pcount(100, 100)


def test_small_canonical_max_cdf():
    seq = PowerWeights(1, 0)
    assert small_canonical_max_cdf(seq, 5, 2) == pytest.approx(3 / 7, abs=0)
    assert small_canonical_max_cdf(seq, 5, 1) == pytest.approx(1 / 7, abs=0)
    assert small_canonical_max_cdf(seq, 5, 5) == 1.0
    assert small_canonical_max_cdf(seq, 5, 50) == 1.0
    # exact Fraction oracle for plane-diagonal weights
    plane = PlaneDiagonalWeights()
    for n in (4, 9):
        qn = weighted_counts(plane, n).q(n)
        for M in range(1, n + 1):
            direct = Fraction(weighted_counts(plane, n, level_cutoff=M).q(n), qn)
            assert small_canonical_max_cdf(plane, n, M) == float(direct)
    # zero-count weight: only even total weights reachable
    evens = TabulatedWeights((0.0, 1.0))
    with pytest.raises(ValidationError):
        small_canonical_max_cdf(evens, 3, 2)
    with pytest.raises(ValidationError):
        small_canonical_max_cdf(seq, 5, 0)
