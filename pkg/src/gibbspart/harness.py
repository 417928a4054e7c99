"""Experiment orchestration and machine-readable reports.

Experiments mirror the limit statements: ``run_converge`` measures the exact
sup-distance between the rescaled max-summand law and the Gumbel CDF along an
activity grid (no sampling involved), ``run_order_stats`` checks sampled
top-d order statistics against the limit marginals and the exact finite-x max
law, ``run_small_canonical`` explores the fixed-weight ensemble (reported as
CONJECTURAL: the equivalence of ensembles is not a theorem), and
``run_oracle`` cross-validates the independent computation paths.

Reports serialize to a CSV metric table (deterministic given config and seed)
plus a JSON envelope that additionally carries wall-clock timings; timings are
kept out of the CSV so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._version import VERSION
from .asymptotics import (
    calibrate_x,
    gumbel_cdf,
    ks_distance,
    ks_distance_discrete,
    order_marginal_cdf,
    rescaling_for,
    rescaling_gas,
    rescaling_plane,
    rescaling_power,
    RescalingSpec,
    shift_small_canonical,
)
from .errors import ValidationError
from .measure import (
    BOSE,
    DEFAULT_TOL,
    MultiplicativeMeasure,
    log_prob,
    max_cdf_batch,
    small_canonical_max_cdf,
    truncation_horizon,
    weighted_counts,
)
from .sampler import (
    DEFAULT_LEVEL_CAP,
    DEFAULT_TAIL_TOL,
    SamplerConfig,
    enumerate_partitions,
    sample_small_canonical_batch,
    sample_top_statistics,
)
from .weights import (
    LatticeWeights,
    PlaneDiagonalWeights,
    PowerWeights,
    WeightSequence,
    lattice_counts,
    lattice_counts_bruteforce,
)

DEFAULT_T_MIN = -4.0
DEFAULT_T_MAX = 8.0
DEFAULT_T_POINTS = 241

# Exact fixed-weight distributions are used below this n; sampling above.
SMALL_EXACT_CUTOFF = 25

_ORACLE_FLOAT_TOL = 1e-12
_ORACLE_XINDEP_TOL = 1e-9


def default_t_grid(
    t_min: float = DEFAULT_T_MIN, t_max: float = DEFAULT_T_MAX, points: int = DEFAULT_T_POINTS
) -> np.ndarray:
    if points < 2 or not (t_min < t_max):
        raise ValidationError("t-grid needs t_min < t_max and at least 2 points")
    return np.linspace(t_min, t_max, points)


def default_x_grid(j_lo: int = 1, j_hi: int = 5) -> list[float]:
    if not (1 <= j_lo <= j_hi):
        raise ValidationError("x-grid decades need 1 <= j1 <= j2")
    return [1.0 - 10.0**-j for j in range(j_lo, j_hi + 1)]


@dataclass
class ExperimentReport:
    """Metric table plus the full configuration needed to reproduce it."""

    experiment: str
    measure_spec: str
    kind: str
    config: dict
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict = field(default_factory=dict)
    timings_sec: list[float] = field(default_factory=list)
    version: str = VERSION

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "version": self.version,
            "experiment": self.experiment,
            "measure": self.measure_spec,
            "kind": self.kind,
            "config": self.config,
            "columns": list(self.columns),
            "rows": [[_jsonable(v) for v in row] for row in self.rows],
            "summary": {k: _jsonable(v) for k, v in self.summary.items()},
            "timings_sec": self.timings_sec,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _resolve_rescaling(seq: WeightSequence, x: float, choice: str) -> RescalingSpec:
    if choice == "auto":
        return rescaling_for(seq, x)
    if choice == "plane":
        return rescaling_plane(x)
    if choice == "gas":
        if not isinstance(seq, LatticeWeights):
            raise ValidationError("gas rescaling needs lattice weights")
        return rescaling_gas(seq.d, x)
    if choice == "power":
        if isinstance(seq, PowerWeights):
            return rescaling_power(seq.c, seq.beta, x)
        if isinstance(seq, PlaneDiagonalWeights):
            return rescaling_power(1.0, 1.0, x)
        raise ValidationError("power rescaling needs power or plane-diagonal weights")
    raise ValidationError(f"unknown rescaling {choice!r}")


def _converge_distance(
    m: MultiplicativeMeasure, spec: RescalingSpec, t_grid: np.ndarray, tol: float
) -> float:
    levels = np.array([spec.level(float(t)) for t in t_grid])
    Ms = np.floor(levels).astype(np.int64)
    cdf = np.zeros(len(t_grid))
    valid = Ms >= 0
    if np.any(valid):
        cdf[valid] = max_cdf_batch(m, Ms[valid], tol)
    return float(np.max(np.abs(cdf - gumbel_cdf(t_grid))))


def run_converge(
    seq: WeightSequence,
    kind: str = BOSE,
    x_grid=None,
    t_grid=None,
    tol: float = DEFAULT_TOL,
    rescaling: str = "auto",
) -> ExperimentReport:
    """Exact sup-distance D(x) between the rescaled max law and Gumbel.

    D(x) = sup over the t-grid of |max_cdf(floor(M(x,t))) - exp(-exp(-t))|,
    computed from the exact tail product only.
    """
    xs = list(default_x_grid() if x_grid is None else x_grid)
    if not xs or any(not (0.0 < x < 1.0) for x in xs):
        raise ValidationError("activity grid must lie inside (0,1)")
    if any(a >= b for a, b in zip(xs, xs[1:])):
        raise ValidationError("activity grid must be strictly increasing")
    ts = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    if ts[0] > DEFAULT_T_MIN or ts[-1] < DEFAULT_T_MAX:
        raise ValidationError(f"t-grid must cover [{DEFAULT_T_MIN}, {DEFAULT_T_MAX}]")
    rows_by_x: dict[float, tuple] = {}
    timings: dict[float, float] = {}
    # Largest activity first: weight tables grow monotonically and are cached,
    # so the biggest horizon is built once and reused by the smaller ones.
    for x in sorted(xs, reverse=True):
        start = time.perf_counter()
        m = MultiplicativeMeasure(seq, x, kind)
        spec = _resolve_rescaling(seq, x, rescaling)
        d = _converge_distance(m, spec, ts, tol)
        horizon = truncation_horizon(m, tol)
        rows_by_x[x] = (x, d, horizon, len(ts))
        timings[x] = time.perf_counter() - start
    return ExperimentReport(
        experiment="converge",
        measure_spec=seq.spec_string(),
        kind=kind,
        config={
            "measure": seq.spec_string(),
            "kind": kind,
            "x_grid": xs,
            "t_min": float(ts[0]),
            "t_max": float(ts[-1]),
            "t_points": int(len(ts)),
            "tol": tol,
            "rescaling": rescaling,
        },
        columns=("x", "sup_distance", "horizon", "t_points"),
        rows=[rows_by_x[x] for x in xs],
        summary={"sup_distances": [float(rows_by_x[x][1]) for x in xs]},
        timings_sec=[timings[x] for x in xs],
    )


def run_order_stats(
    seq: WeightSequence,
    kind: str,
    d: int,
    x: float,
    N: int,
    seed: int,
    tail_tol: float = DEFAULT_TAIL_TOL,
    level_cap: int = DEFAULT_LEVEL_CAP,
) -> ExperimentReport:
    """Sampled top-d order statistics vs the limit marginals G_i and the
    exact finite-x max law (first coordinate, discrete KS)."""
    if d < 1:
        raise ValidationError(f"need d >= 1, got {d}")
    if N < 1:
        raise ValidationError(f"need N >= 1, got {N}")
    start = time.perf_counter()
    m = MultiplicativeMeasure(seq, x, kind)
    cfg = SamplerConfig(seed=seed, tail_tol=tail_tol, level_cap=level_cap)
    tops = sample_top_statistics(m, cfg, N, d)
    spec = rescaling_for(seq, x)
    rescaled = spec.rescale(tops)
    rows = []
    for i in range(1, d + 1):
        ys = np.sort(rescaled[:, i - 1])
        ks_i = ks_distance(ys, lambda a, _i=i: order_marginal_cdf(_i, a))
        rows.append((i, ks_i))
    ks_exact = ks_distance_discrete(tops[:, 0], lambda Ms: max_cdf_batch(m, Ms))
    if d >= 2:
        ties = np.any((tops[:, :-1] == tops[:, 1:]) & (tops[:, 1:] > 0), axis=1)
        tie_rate = float(np.mean(ties))
    else:
        tie_rate = 0.0
    elapsed = time.perf_counter() - start
    return ExperimentReport(
        experiment="order",
        measure_spec=seq.spec_string(),
        kind=kind,
        config={
            "measure": seq.spec_string(),
            "kind": kind,
            "d": d,
            "x": x,
            "samples": N,
            "seed": seed,
            "tail_tol": tail_tol,
            "level_cap": level_cap,
        },
        columns=("coordinate", "ks_vs_marginal"),
        rows=rows,
        summary={
            "ks_exact_max": ks_exact,
            "tie_rate": tie_rate,
            "horizon": truncation_horizon(m, tail_tol),
            "truncation_bias_bound": tail_tol,
        },
        timings_sec=[elapsed],
    )


def _calibrate_with_fallback(seq: WeightSequence, n: float) -> float:
    try:
        return calibrate_x(seq, n, "closed_form")
    except ValidationError:
        return calibrate_x(seq, n, "numeric")


def run_small_canonical(
    seq: WeightSequence,
    n_list,
    N: int,
    seed: int,
    exact_cutoff: int = SMALL_EXACT_CUTOFF,
    t_grid=None,
    tail_tol: float = DEFAULT_TAIL_TOL,
    attempt_cap: int = 1_000_000,
) -> ExperimentReport:
    """Fixed-weight max-summand law vs Gumbel along an n-grid (CONJECTURAL).

    The rescaling uses scale 1-x(n) and the n-dependent shift; for n up to
    exact_cutoff the exact conditional law replaces sampling. The theorem
    behind this experiment is only conjectured, so distances are reported,
    never asserted.
    """
    ns = [int(n) for n in n_list]
    if not ns or any(n < 3 for n in ns):
        raise ValidationError("n-grid must be nonempty with every n >= 3")
    ts = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    rows = []
    timings = []
    for n in ns:
        start = time.perf_counter()
        x_n = _calibrate_with_fallback(seq, n)
        spec = RescalingSpec(scale=1.0 - x_n, shift=shift_small_canonical(seq, n))
        if n <= exact_cutoff:
            cache: dict[int, float] = {}

            def exact_cdf(M: int, _n=n) -> float:
                if M < 1:
                    return 0.0
                if M >= _n:
                    return 1.0
                if M not in cache:
                    cache[M] = small_canonical_max_cdf(seq, _n, M)
                return cache[M]

            dist = max(
                abs(exact_cdf(math.floor(spec.level(float(t)))) - gumbel_cdf(float(t)))
                for t in ts
            )
            rows.append((n, x_n, "exact", float(dist), None, "CONJECTURAL"))
        else:
            cfg = SamplerConfig(seed=seed, tail_tol=tail_tol)
            parts, attempts = sample_small_canonical_batch(
                seq, n, cfg, N, attempt_cap=attempt_cap, x=x_n
            )
            maxima = np.sort(spec.rescale([p.max_part for p in parts]))
            dist = ks_distance(maxima, gumbel_cdf)
            rows.append((n, x_n, "sampled", float(dist), N / attempts, "CONJECTURAL"))
        timings.append(time.perf_counter() - start)
    return ExperimentReport(
        experiment="small",
        measure_spec=seq.spec_string(),
        kind=BOSE,
        config={
            "measure": seq.spec_string(),
            "kind": BOSE,
            "n_list": ns,
            "samples": N,
            "seed": seed,
            "exact_cutoff": exact_cutoff,
            "tail_tol": tail_tol,
            "attempt_cap": attempt_cap,
            "status": "CONJECTURAL",
        },
        columns=("n", "x", "method", "ks_vs_gumbel", "acceptance_rate", "status"),
        rows=rows,
        summary={"status": "CONJECTURAL"},
        timings_sec=timings,
    )


def run_oracle(seq: WeightSequence, n_max: int) -> ExperimentReport:
    """Cross-validation of independent computation paths; failures are rows,
    not exceptions."""
    if n_max < 1:
        raise ValidationError(f"need n_max >= 1, got {n_max}")
    if n_max > 30:
        raise ValidationError("oracle enumeration is budgeted at n_max <= 30")
    start = time.perf_counter()
    rows = []

    # counts: recurrence vs direct enumeration mass
    table = weighted_counts(seq, n_max, budget=None)
    err_counts = 0.0
    enum_cache = {}
    for n in range(n_max + 1):
        enum_cache[n] = enumerate_partitions(seq, n, budget=None)
        total = sum(mass for _, mass in _enumerated_masses(seq, n, enum_cache[n]))
        qn = table.q(n)
        if isinstance(qn, int) and isinstance(total, int):
            err_counts = max(err_counts, float(abs(qn - total)))
        else:
            denom = max(1.0, abs(float(qn)))
            err_counts = max(err_counts, abs(float(qn) - float(total)) / denom)
    rows.append(("counts_vs_enumeration", _status(err_counts, _ORACLE_FLOAT_TOL), err_counts))

    # fixed-weight max CDF: restricted recurrence vs enumeration sums
    err_cdf = 0.0
    for n in range(1, n_max + 1):
        lam_probs = enum_cache[n]
        if not lam_probs:
            continue
        for M in range(1, n + 1):
            direct = sum(p for lam, p in lam_probs if lam.max_part <= M)
            err_cdf = max(err_cdf, abs(direct - small_canonical_max_cdf(seq, n, M)))
    rows.append(("max_cdf_vs_enumeration", _status(err_cdf, _ORACLE_FLOAT_TOL), err_cdf))

    # conditional-measure activity independence
    err_x = 0.0
    for n in range(1, min(n_max, 20) + 1):
        lam_probs = enum_cache[n]
        if not lam_probs:
            continue
        reference = np.array([p for _, p in lam_probs])
        for x in (0.3, 0.5, 0.7):
            m = MultiplicativeMeasure(seq, x, BOSE)
            logs = np.array([log_prob(m, lam) for lam, _ in lam_probs])
            probs = np.exp(logs - logs.max())
            probs /= probs.sum()
            err_x = max(err_x, float(np.max(np.abs(probs - reference))))
    rows.append(("conditional_x_independence", _status(err_x, _ORACLE_XINDEP_TOL), err_x))

    # lattice counts: convolution vs brute force
    if isinstance(seq, LatticeWeights):
        conv = lattice_counts(seq.d, 500)
        brute = lattice_counts_bruteforce(seq.d, 500)
        err_lat = float(np.max(np.abs(conv.j - brute.j)))
        rows.append(("lattice_conv_vs_bruteforce", _status(err_lat, 0.0), err_lat))

    return ExperimentReport(
        experiment="oracle",
        measure_spec=seq.spec_string(),
        kind=BOSE,
        config={"measure": seq.spec_string(), "kind": BOSE, "n_max": n_max},
        columns=("check", "status", "max_abs_err"),
        rows=rows,
        summary={"all_pass": all(r[1] == "PASS" for r in rows)},
        timings_sec=[time.perf_counter() - start],
    )


def _status(err: float, tol: float) -> str:
    return "PASS" if err <= tol else "FAIL"


def _enumerated_masses(seq: WeightSequence, n: int, lam_probs):
    """(partition, unnormalized product mass) recomputed from occupations."""
    integer = seq.is_integer_valued()
    b = seq.weights_upto(n) if n else []
    out = []
    for lam, _ in lam_probs:
        mass = 1 if integer else 1.0
        for k, r in lam.occupations:
            bk = b[k - 1]
            if integer:
                mass *= math.comb(r + int(round(bk)) - 1, r)
            else:
                mass *= math.exp(math.lgamma(r + bk) - math.lgamma(bk) - math.lgamma(r + 1))
        out.append((lam, mass))
    return out
