"""Weight sequences b_k for multiplicative partition measures.

Four families are supported:

* power law       b_k = c * k**beta          (c > 0, beta > -1)
* lattice         b_k = j_d(k), the number of integer points of Z^d with
                  squared norm k (the d-dimensional ideal-gas degeneracy)
* plane diagonal  b_k = k (diagonal section of random plane partitions)
* tabulated       b_k read from a finite list, zero beyond it

Lattice count tables are exact integer tables built by iterated convolution
with the one-dimensional counts j_1 and cached per dimension.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ResourceError, ValidationError

# Hard cap on lattice table entries (per table); guards run-away activities.
LATTICE_TABLE_CAP = 100_000_000

# Default slack exponent delta used in the d=4 cumulative error bound 1+delta.
DEFAULT_ALPHA4_DELTA = 0.01


@dataclass(frozen=True)
class LatticeCountTable:
    """Exact counts j_d(k) for k = 0..K with cumulative sums J_d(k)."""

    d: int
    j: np.ndarray  # int64, length K+1, j[0] == 1
    J: np.ndarray  # int64 cumulative sums of j

    @property
    def kmax(self) -> int:
        return len(self.j) - 1


def _convolve_with_j1(prev: np.ndarray) -> np.ndarray:
    # out[k] = sum_m j_1(m^2 term) * prev[k - m^2]; j_1 is 1 at 0 and 2 at squares.
    K = len(prev) - 1
    out = prev.copy()
    for m in range(1, math.isqrt(K) + 1):
        out[m * m :] += 2 * prev[: K + 1 - m * m]
    return out


def lattice_counts(d: int, K: int, cap: int = LATTICE_TABLE_CAP) -> LatticeCountTable:
    """Exact j_d(0..K) by (d-1)-fold convolution of j_1 with itself.

    Raises ResourceError if the table would exceed ``cap`` entries.
    """
    if d < 1:
        raise ValidationError(f"lattice dimension must be >= 1, got {d}")
    if K < 0:
        raise ValidationError(f"table extent must be >= 0, got {K}")
    if K + 1 > cap:
        raise ResourceError(f"lattice table of {K + 1} entries exceeds cap {cap}")
    if K > 0:
        # J_d(K) ~ C_d*K^(d/2); refuse tables whose cumulative sums could
        # wrap int64 (1.5x slack on the leading-order volume term).
        est = 1.5 * ball_volume_coefficient(d) * float(K) ** (d / 2) + 2.0 * K
        if est > 8e18:
            raise ResourceError(
                f"lattice table d={d}, K={K} would overflow 64-bit cumulative counts"
            )
    j1 = np.zeros(K + 1, dtype=np.int64)
    j1[0] = 1
    for m in range(1, math.isqrt(K) + 1):
        j1[m * m] = 2
    j = j1
    for _ in range(d - 1):
        j = _convolve_with_j1(j)
    return LatticeCountTable(d=d, j=j, J=np.cumsum(j))


def lattice_counts_bruteforce(d: int, K: int) -> LatticeCountTable:
    """j_d(0..K) by direct enumeration of all lattice points with norm^2 <= K.

    Deliberately independent of the convolution path; used for
    cross-validation. Enumerates the full cube [-isqrt(K), isqrt(K)]^d,
    vectorized over the trailing d-1 coordinates.
    """
    if d < 1 or K < 0:
        raise ValidationError("need d >= 1 and K >= 0")
    m = math.isqrt(K)
    axis = np.arange(-m, m + 1, dtype=np.int64) ** 2
    if d == 1:
        grid = axis
    else:
        # squared-norm grid over the last d-1 coordinates, all tuples visited
        grid = axis
        for _ in range(d - 2):
            grid = grid[..., None] + axis
        counts = np.zeros(K + 1, dtype=np.int64)
        for a2 in axis:
            s = (a2 + grid).ravel()
            s = s[s <= K]
            counts += np.bincount(s, minlength=K + 1)
        return LatticeCountTable(d=d, j=counts, J=np.cumsum(counts))
    s = grid[grid <= K]
    counts = np.bincount(s, minlength=K + 1).astype(np.int64)
    return LatticeCountTable(d=d, j=counts, J=np.cumsum(counts))


_table_lock = threading.Lock()
_table_cache: dict[int, LatticeCountTable] = {}


def cached_lattice_counts(d: int, K: int, cap: int = LATTICE_TABLE_CAP) -> LatticeCountTable:
    """Per-dimension cache; grows by building a fresh, larger table."""
    with _table_lock:
        table = _table_cache.get(d)
        if table is None or table.kmax < K:
            table = lattice_counts(d, K, cap=cap)
            _table_cache[d] = table
        return table


def ball_volume_coefficient(d: int) -> float:
    """Volume of the unit ball in R^d: pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise ValidationError(f"dimension must be >= 1, got {d}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def error_exponent(d: int, alpha4_delta: float = DEFAULT_ALPHA4_DELTA) -> float:
    """Exponent alpha_d bounding |J_d(k) - C_d k^(d/2)| = O(k^alpha_d).

    alpha_1=0, alpha_2=1/3, alpha_3=3/4, alpha_4=1+delta (delta configurable),
    alpha_d=d/2-1 for d >= 5.
    """
    if d < 1:
        raise ValidationError(f"dimension must be >= 1, got {d}")
    if d == 1:
        return 0.0
    if d == 2:
        return 1.0 / 3.0
    if d == 3:
        return 0.75
    if d == 4:
        if alpha4_delta <= 0:
            raise ValidationError("alpha4 slack must be positive")
        return 1.0 + alpha4_delta
    return d / 2 - 1.0


class WeightSequence:
    """Base class; concrete families implement weight evaluation."""

    def weight_at(self, k: int) -> float:
        raise NotImplementedError

    def weights_upto(self, K: int) -> np.ndarray:
        """Vector [b_1, ..., b_K] as float64."""
        raise NotImplementedError

    def power_majorant(self) -> tuple[float, float]:
        """(c, beta) with b_k <= c * k**beta for all k >= 1; used for
        certified tail truncation."""
        raise NotImplementedError

    def support_limit(self) -> int | None:
        """Largest k with possibly nonzero b_k, or None if unbounded."""
        return None

    def is_integer_valued(self) -> bool:
        return False

    def spec_string(self) -> str:
        raise NotImplementedError

    def _check_positive_level(self, k: int) -> None:
        if k < 1:
            raise ValidationError(f"level index must be >= 1, got {k}")


@dataclass(frozen=True)
class PowerWeights(WeightSequence):
    """b_k = c * k**beta with c > 0 and beta > -1."""

    c: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.c > 0):
            raise ValidationError(f"power weight needs c > 0, got {self.c}")
        if not (self.beta > -1):
            raise ValidationError(f"power weight needs beta > -1, got {self.beta}")

    def weight_at(self, k: int) -> float:
        self._check_positive_level(k)
        return self.c * k**self.beta

    def weights_upto(self, K: int) -> np.ndarray:
        return self.c * np.arange(1, K + 1, dtype=np.float64) ** self.beta

    def power_majorant(self) -> tuple[float, float]:
        return self.c, self.beta

    def is_integer_valued(self) -> bool:
        if self.beta == 0.0:
            return float(self.c).is_integer()
        return float(self.c).is_integer() and float(self.beta).is_integer() and self.beta > 0

    def spec_string(self) -> str:
        return f"power:c={self.c:g},beta={self.beta:g}"


@dataclass(frozen=True)
class LatticeWeights(WeightSequence):
    """b_k = j_d(k), exact lattice point counts at squared radius k."""

    d: int
    cap: int = LATTICE_TABLE_CAP

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError(f"lattice dimension must be >= 1, got {self.d}")

    def weight_at(self, k: int) -> float:
        self._check_positive_level(k)
        return float(cached_lattice_counts(self.d, k, cap=self.cap).j[k])

    def weights_upto(self, K: int) -> np.ndarray:
        table = cached_lattice_counts(self.d, K, cap=self.cap)
        return table.j[1 : K + 1].astype(np.float64)

    def power_majorant(self) -> tuple[float, float]:
        # j_d(k) <= (2*sqrt(k)+1)^d <= (3*sqrt(k))^d for k >= 1
        return float(3**self.d), self.d / 2

    def is_integer_valued(self) -> bool:
        return True

    def spec_string(self) -> str:
        return f"lattice:d={self.d}"


@dataclass(frozen=True)
class PlaneDiagonalWeights(WeightSequence):
    """b_k = k; the law of the diagonal section of a random plane partition."""

    def weight_at(self, k: int) -> float:
        self._check_positive_level(k)
        return float(k)

    def weights_upto(self, K: int) -> np.ndarray:
        return np.arange(1, K + 1, dtype=np.float64)

    def power_majorant(self) -> tuple[float, float]:
        return 1.0, 1.0

    def is_integer_valued(self) -> bool:
        return True

    def spec_string(self) -> str:
        return "plane"


@dataclass(frozen=True)
class TabulatedWeights(WeightSequence):
    """Finite list of weights; b_k = 0 beyond the list."""

    values: tuple[float, ...]
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if any(v < 0 or not math.isfinite(v) for v in self.values):
            raise ValidationError("tabulated weights must be finite and >= 0")

    def weight_at(self, k: int) -> float:
        self._check_positive_level(k)
        return self.values[k - 1] if k <= len(self.values) else 0.0

    def weights_upto(self, K: int) -> np.ndarray:
        out = np.zeros(K, dtype=np.float64)
        n = min(K, len(self.values))
        out[:n] = self.values[:n]
        return out

    def power_majorant(self) -> tuple[float, float]:
        return (max(self.values) if self.values else 0.0), 0.0

    def support_limit(self) -> int | None:
        return len(self.values)

    def is_integer_valued(self) -> bool:
        return all(float(v).is_integer() for v in self.values)

    def spec_string(self) -> str:
        if self.source is not None:
            return f"table:@{self.source}"
        return "table:" + ",".join(f"{v:g}" for v in self.values)


def parse_weight_spec(spec: str) -> WeightSequence:
    """Parse a compact weight-sequence spec string.

    Accepted forms: ``power:c=1,beta=0``, ``lattice:d=3``, ``plane``,
    ``table:@file.csv`` (one weight per line, row i is b_i) or
    ``table:v1,v2,...`` inline.
    """
    spec = spec.strip()
    if spec == "plane":
        return PlaneDiagonalWeights()
    head, _, rest = spec.partition(":")
    if head == "power":
        kv = {}
        for item in filter(None, rest.split(",")):
            key, _, val = item.partition("=")
            kv[key.strip()] = val
        try:
            return PowerWeights(c=float(kv.get("c", 1.0)), beta=float(kv.get("beta", 0.0)))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad power spec {spec!r}: {exc}") from exc
    if head == "lattice":
        key, _, val = rest.partition("=")
        if key.strip() != "d":
            raise ValidationError(f"bad lattice spec {spec!r}, expected lattice:d=<int>")
        try:
            return LatticeWeights(d=int(val))
        except ValueError as exc:
            raise ValidationError(f"bad lattice spec {spec!r}: {exc}") from exc
    if head == "table":
        if rest.startswith("@"):
            path = Path(rest[1:])
            try:
                with open(path, newline="") as fh:
                    values = tuple(float(row[0]) for row in csv.reader(fh) if row)
            except OSError as exc:
                raise ValidationError(f"cannot read weight table {path}: {exc}") from exc
            return TabulatedWeights(values=values, source=str(path))
        try:
            values = tuple(float(v) for v in rest.split(",") if v != "")
        except ValueError as exc:
            raise ValidationError(f"bad table spec {spec!r}: {exc}") from exc
        return TabulatedWeights(values=values)
    raise ValidationError(f"unrecognized weight spec {spec!r}")
