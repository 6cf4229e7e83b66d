"""Density-based clustering that detects structure inside dense regions.

The library clusters on the secondary directed differential of
normalized point densities rather than on density thresholds, which
separates regions that differ in density even when no low-density gap
lies between them. Hierarchical refinement with per-subset
renormalization and a self-adapting acceptance threshold make the
result independent of the dataset's overall coordinate scale.
"""

from .core import (
    Assignment,
    ParamSet,
    core_cluster,
    count_effective,
    effective_min_size,
    merge_small,
)
from .density import (
    DensityProfile,
    build_density_profile,
    compute_density,
    compute_differentials,
    detect_isolated,
    normalize_max,
    normalize_mean,
)
from .geometry import (
    NeighborTable,
    PointSet,
    build_neighbor_table,
    minmax_rescale,
)
from .hierarchy import adapt_eps, redistribute_isolated, sdc_hsdd_nd, sdc_hsdd_ndsa
from .metrics import ContingencyTable, ari, contingency, nmi
from .synthetic import GenSpec, SUITE_NAMES, add_noise, gen_suite, generate

__all__ = [
    "Assignment",
    "ContingencyTable",
    "DensityProfile",
    "GenSpec",
    "NeighborTable",
    "ParamSet",
    "PointSet",
    "SUITE_NAMES",
    "adapt_eps",
    "add_noise",
    "ari",
    "build_density_profile",
    "build_neighbor_table",
    "compute_density",
    "compute_differentials",
    "contingency",
    "core_cluster",
    "count_effective",
    "detect_isolated",
    "effective_min_size",
    "gen_suite",
    "generate",
    "merge_small",
    "minmax_rescale",
    "nmi",
    "normalize_max",
    "normalize_mean",
    "redistribute_isolated",
    "sdc_hsdd_nd",
    "sdc_hsdd_ndsa",
]

__version__ = "0.1.0"
