"""Multiplicative (Gibbs) measures on integer partitions.

Weight sequences b_k define independent occupation numbers r_k with either
Bose f_k(z) = (1-z)^(-b_k) or Fermi f_k(z) = (1+z)^(b_k) level laws. The
package evaluates exact max-summand CDFs through tail products, the limit
rescalings under which the maximum converges to the Gumbel law, order
statistics, fixed-weight (small canonical) distributions, and seeded
samplers, plus an experiment harness behind the ``gibbspart`` CLI.
"""

from ._version import VERSION as __version__
from .asymptotics import (
    RescalingSpec,
    calibrate_x,
    gumbel_cdf,
    gumbel_pdf,
    gumbel_quantile,
    ks_distance,
    ks_distance_discrete,
    order_joint_density,
    order_marginal_cdf,
    rescaling_for,
    rescaling_gas,
    rescaling_plane,
    rescaling_power,
    shift_small_canonical,
)
from .errors import BudgetError, ResourceError, ValidationError
from .harness import (
    ExperimentReport,
    run_converge,
    run_oracle,
    run_order_stats,
    run_small_canonical,
)
from .measure import (
    BOSE,
    FERMI,
    CountTable,
    MultiplicativeMeasure,
    Partition,
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
from .sampler import (
    SamplerConfig,
    derived_generator,
    enumerate_partitions,
    sample_partition,
    sample_partitions,
    sample_small_canonical,
    sample_small_canonical_batch,
    sample_top_statistics,
    top_order_statistics,
)
from .weights import (
    LatticeCountTable,
    LatticeWeights,
    PlaneDiagonalWeights,
    PowerWeights,
    TabulatedWeights,
    WeightSequence,
    ball_volume_coefficient,
    error_exponent,
    lattice_counts,
    lattice_counts_bruteforce,
    parse_weight_spec,
)

__all__ = [
    "__version__",
    "BOSE",
    "FERMI",
    "BudgetError",
    "CountTable",
    "ExperimentReport",
    "LatticeCountTable",
    "LatticeWeights",
    "MultiplicativeMeasure",
    "Partition",
    "PlaneDiagonalWeights",
    "PowerWeights",
    "RescalingSpec",
    "ResourceError",
    "SamplerConfig",
    "TabulatedWeights",
    "ValidationError",
    "WeightSequence",
    "ball_volume_coefficient",
    "calibrate_x",
    "derived_generator",
    "enumerate_partitions",
    "error_exponent",
    "exact_top_levels_pmf",
    "expected_weight",
    "gumbel_cdf",
    "gumbel_pdf",
    "gumbel_quantile",
    "ks_distance",
    "ks_distance_discrete",
    "lattice_counts",
    "lattice_counts_bruteforce",
    "log_prob",
    "log_tail_product",
    "max_cdf",
    "max_cdf_batch",
    "occupation_mean",
    "occupation_pmf",
    "order_joint_density",
    "order_marginal_cdf",
    "parse_weight_spec",
    "rescaling_for",
    "rescaling_gas",
    "rescaling_plane",
    "rescaling_power",
    "run_converge",
    "run_oracle",
    "run_order_stats",
    "run_small_canonical",
    "sample_partition",
    "sample_partitions",
    "sample_small_canonical",
    "sample_small_canonical_batch",
    "sample_top_statistics",
    "shift_small_canonical",
    "small_canonical_max_cdf",
    "top_order_statistics",
    "truncation_horizon",
    "weighted_counts",
]
