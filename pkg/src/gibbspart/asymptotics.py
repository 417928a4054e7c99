"""Limit-law layer: rescaling shifts A(x), activity calibration x(n), the
Gumbel family, order-statistics limit densities, and distribution distances.

The max-summand limit theorems say that m(lambda)*(1-x) - A(x) converges to
the Gumbel law as x -> 1, with A(x) depending on the weight family:

* power weights c*k^beta:
      A(x) = (beta+1)|log(1-x)| + beta*log|log(1-x)| + beta*log(beta+1) + log c
* lattice weights j_d(k) (d-dimensional ideal Bose gas):
      A(x) = (d/2)|log(1-x)| + ((d-2)/2)*log|log(1-x)|
             + (d/2)*log(d/2) + log(pi^(d/2)/Gamma(d/2+1))
* plane-diagonal weights b_k = k: the power case at c = 1, beta = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.special import zeta as _scipy_zeta

from .errors import BudgetError, ValidationError
from .measure import BOSE, MultiplicativeMeasure, expected_weight
from .weights import (
    LatticeWeights,
    PlaneDiagonalWeights,
    PowerWeights,
    WeightSequence,
    ball_volume_coefficient,
)

CLOSED_FORM = "closed_form"
NUMERIC = "numeric"

# Bisection controls for numeric calibration.
_CALIBRATE_MAX_ITER = 500


def _zeta(s: float) -> float:
    return float(_scipy_zeta(s, 1))


@dataclass(frozen=True)
class RescalingSpec:
    """Affine rescaling y = m*scale - shift with scale = 1-x, shift = A(x)."""

    scale: float
    shift: float

    def __post_init__(self):
        if not (0.0 < self.scale < 1.0):
            raise ValidationError(f"scale must lie in (0,1), got {self.scale}")

    def rescale(self, m):
        return np.asarray(m, dtype=np.float64) * self.scale - self.shift

    def level(self, t: float) -> float:
        """M(x,t) = (A(x)+t)/(1-x), the real-valued threshold for y <= t."""
        return (self.shift + t) / self.scale


def _check_x(x: float) -> float:
    if not (0.0 < x < 1.0):
        raise ValidationError(f"activity must lie in (0,1), got {x}")
    return -math.log1p(-x)  # |log(1-x)|


def rescaling_power(c: float, beta: float, x: float) -> RescalingSpec:
    if not (c > 0):
        raise ValidationError(f"need c > 0, got {c}")
    if not (beta > -1):
        raise ValidationError(f"need beta > -1, got {beta}")
    L = _check_x(x)
    shift = (beta + 1) * L + beta * math.log(L) + beta * math.log(beta + 1) + math.log(c)
    return RescalingSpec(scale=1.0 - x, shift=shift)


def rescaling_gas(d: int, x: float) -> RescalingSpec:
    if d < 1:
        raise ValidationError(f"need d >= 1, got {d}")
    L = _check_x(x)
    shift = (
        (d / 2) * L
        + ((d - 2) / 2) * math.log(L)
        + (d / 2) * math.log(d / 2)
        + math.log(ball_volume_coefficient(d))
    )
    return RescalingSpec(scale=1.0 - x, shift=shift)


def rescaling_plane(x: float) -> RescalingSpec:
    return rescaling_power(1.0, 1.0, x)


def rescaling_for(seq: WeightSequence, x: float) -> RescalingSpec:
    """The natural rescaling for a weight family (power/gas/plane)."""
    if isinstance(seq, PowerWeights):
        return rescaling_power(seq.c, seq.beta, x)
    if isinstance(seq, LatticeWeights):
        return rescaling_gas(seq.d, x)
    if isinstance(seq, PlaneDiagonalWeights):
        return rescaling_plane(x)
    raise ValidationError(f"no limit rescaling for weight family {seq.spec_string()!r}")


def _closed_form_x(seq: WeightSequence, n: float) -> float:
    if isinstance(seq, PowerWeights):
        c, beta = seq.c, seq.beta
        r = (c * math.gamma(beta + 2) * _zeta(beta + 2) / n) ** (1.0 / (beta + 2))
    elif isinstance(seq, PlaneDiagonalWeights):
        r = (math.gamma(3) * _zeta(3) / n) ** (1.0 / 3.0)
    elif isinstance(seq, LatticeWeights):
        d = seq.d
        r = (d * math.pi ** (d / 2) * _zeta(d / 2 + 1) / (2 * n)) ** (2.0 / (d + 2))
    else:
        raise ValidationError(
            f"no closed-form calibration for weight family {seq.spec_string()!r}"
        )
    x = 1.0 - r
    if not (0.0 < x < 1.0):
        raise ValidationError(f"closed-form calibration left (0,1): n={n} gives x={x}")
    return x


def calibrate_x(seq: WeightSequence, n: float, mode: str = CLOSED_FORM) -> float:
    """Activity x(n) with expected partition weight n.

    ClosedForm uses the explicit formulas for power/plane/lattice families;
    Numeric solves expected_weight(x) = n by bisection (Bose kind), stopping
    at |E - n| <= max(1, 1e-6*n).
    """
    if not (n > 0):
        raise ValidationError(f"need n > 0, got {n}")
    mode_norm = mode.replace("-", "_").lower()
    if mode_norm == CLOSED_FORM:
        return _closed_form_x(seq, n)
    if mode_norm != NUMERIC:
        raise ValidationError(f"unknown calibration mode {mode!r}")
    c_maj, _ = seq.power_majorant()
    if c_maj == 0.0:
        raise ValidationError("cannot calibrate a weight sequence that is identically zero")
    target_tol = max(1.0, 1e-6 * n)
    sum_tol = min(1e-6, target_tol / 100.0)

    def ew(x: float) -> float:
        return expected_weight(MultiplicativeMeasure(seq, x, BOSE), tol=sum_tol)

    lo, hi = 1e-12, 0.9
    iters = 0
    while ew(hi) < n:
        hi = 1.0 - (1.0 - hi) / 8.0
        iters += 1
        if iters > _CALIBRATE_MAX_ITER:
            raise BudgetError("calibration bracket expansion exceeded iteration cap")
    for _ in range(_CALIBRATE_MAX_ITER):
        mid = 0.5 * (lo + hi)
        val = ew(mid)
        if abs(val - n) <= target_tol:
            return mid
        if val < n:
            lo = mid
        else:
            hi = mid
    raise BudgetError("calibration bisection exceeded iteration cap")


def _power_shift_n(c: float, beta: float, n: float) -> float:
    ln = math.log(n)
    lln = math.log(ln)
    gz = math.gamma(beta + 2) * _zeta(beta + 2)
    return (
        (beta + 1) / (beta + 2) * ln
        + beta * lln
        + beta * math.log((beta + 1) / (beta + 2))
        - (beta + 1) / (beta + 2) * math.log(gz)
        + math.log(c) / (beta + 2)
    )


def shift_small_canonical(seq: WeightSequence, n: float) -> float:
    """A_n, the shift paired with scale (1 - x(n)) in the fixed-weight limit.

    Substituting x(n) into A(x) gives, for power weights,
    A_n = (b+1)/(b+2)*log n + b*log log n + b*log((b+1)/(b+2))
          - (b+1)/(b+2)*log(Gamma(b+2)*zeta(b+2)) + log(c)/(b+2).
    The lattice family reduces to the power case at the effective parameters
    c = C_d*d/2, beta = d/2 - 1 (the growth rate of the cumulative counts),
    which expands to
    A_n = d/(d+2)*log n + (d-2)/2*log log n + d^2/(2(d+2))*log(d/2)
          + (d-2)/2*log(2/(d+2)) - d/(d+2)*log(zeta(d/2+1)/pi) - log Gamma(d/2+1).
    """
    if not (n >= 3):
        raise ValidationError(f"need n >= 3 so that log log n > 0, got {n}")
    if isinstance(seq, PowerWeights):
        return _power_shift_n(seq.c, seq.beta, n)
    if isinstance(seq, PlaneDiagonalWeights):
        return _power_shift_n(1.0, 1.0, n)
    if isinstance(seq, LatticeWeights):
        d = seq.d
        c_eff = ball_volume_coefficient(d) * d / 2.0
        return _power_shift_n(c_eff, d / 2.0 - 1.0, n)
    raise ValidationError(f"no small-canonical shift for weight family {seq.spec_string()!r}")


def _apply_elementwise(fn, t):
    arr = np.asarray(t, dtype=np.float64)
    out = fn(arr)
    if np.ndim(t) == 0:
        return float(out)
    return out


def gumbel_cdf(t):
    return _apply_elementwise(lambda a: np.exp(-np.exp(-a)), t)


def gumbel_pdf(t):
    return _apply_elementwise(lambda a: np.exp(-a - np.exp(-a)), t)


def gumbel_quantile(p):
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValidationError("quantile needs p strictly inside (0,1)")
    out = -np.log(-np.log(arr))
    return float(out) if np.ndim(p) == 0 else out


def order_joint_density(t) -> float:
    """Joint limit density exp(-e^(-t_d) - sum t_i) on t_1 > ... > t_d."""
    ts = [float(v) for v in np.atleast_1d(np.asarray(t, dtype=np.float64))]
    if not ts:
        raise ValidationError("need at least one coordinate")
    if any(a <= b for a, b in zip(ts, ts[1:])):
        return 0.0
    inner = -ts[-1]
    if inner > 700.0:
        return 0.0  # e^(-t_d) overflows but the density itself underflows
    return math.exp(-math.exp(inner) - sum(ts))


def order_marginal_cdf(i: int, t):
    """G_i(t) = exp(-e^(-t)) * sum_{j<i} e^(-j t)/j!, the law of the i-th
    largest rescaled summand; G_1 is the Gumbel CDF."""
    if i < 1:
        raise ValidationError(f"order index must be >= 1, got {i}")

    def eval_arr(arr: np.ndarray) -> np.ndarray:
        js = np.arange(i, dtype=np.float64)[:, None]
        log_terms = -js * arr[None, :] - np.array(
            [math.lgamma(j + 1) for j in range(i)]
        )[:, None]
        log_g = -np.exp(-arr) + logsumexp(log_terms, axis=0)
        return np.clip(np.exp(log_g), 0.0, 1.0)

    arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = eval_arr(arr)
    return float(out[0]) if np.ndim(t) == 0 else out


def _eval_cdf(cdf, s: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(cdf(s), dtype=np.float64)
        if vals.shape == s.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(v)) for v in s], dtype=np.float64)


def ks_distance(sample, cdf) -> float:
    """sup_i max(|i/N - F(s_i)|, |(i-1)/N - F(s_i)|) over the sorted sample."""
    s = np.asarray(sample, dtype=np.float64)
    if s.size == 0:
        raise ValidationError("sample must be nonempty")
    if np.any(np.diff(s) < 0):
        raise ValidationError("sample must be sorted nondecreasing")
    F = _eval_cdf(cdf, s)
    n = s.size
    hi = np.arange(1, n + 1, dtype=np.float64) / n
    lo = np.arange(0, n, dtype=np.float64) / n
    return float(max(np.max(np.abs(hi - F)), np.max(np.abs(lo - F))))


def ks_distance_discrete(sample, cdf_at) -> float:
    """Exact sup_m |Fhat(m) - F(m)| over the integer grid for integer samples.

    ``cdf_at`` maps an int64 array of thresholds to exact CDF values. The sup
    of the difference of two right-continuous step functions is attained at an
    observed value or one step before the next observed value; both sets are
    evaluated.
    """
    s = np.asarray(sample, dtype=np.int64)
    if s.size == 0:
        raise ValidationError("sample must be nonempty")
    uniq, counts = np.unique(s, return_counts=True)
    emp = np.cumsum(counts, dtype=np.float64) / s.size
    F_at = np.asarray(cdf_at(uniq), dtype=np.float64)
    d = float(np.max(np.abs(emp - F_at)))
    prev = np.concatenate(([0.0], emp[:-1]))
    before = uniq - 1
    keep = before >= 0
    if np.any(keep):
        F_before = np.asarray(cdf_at(before[keep]), dtype=np.float64)
        d = max(d, float(np.max(np.abs(prev[keep] - F_before))))
    return d
