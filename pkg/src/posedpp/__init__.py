"""Diversity-driven exemplar selection and limb-warp augmentation for
class-incremental animal pose estimation."""

from .cluster import Clustering, clustered_kdpp_select, kmeans, num_clusters
from .dpp import (
    SubsetSelection,
    brute_force_map,
    elementary_symmetric,
    greedy_map_kdpp,
    greedy_with_fill,
    kdpp_log_prob,
    log_elementary_symmetric,
    subset_log_det,
    unconstrained_dpp_log_prob,
)
from .errors import (
    CannotInpaintError,
    ConfigError,
    DegenerateGeometryError,
    DegenerateSelectionWarning,
    InstanceTooLargeError,
    IntegrityError,
    NumericError,
    ParameterError,
    ParseError,
    PoseDPPError,
    RankError,
    RankFallbackWarning,
    SchemaError,
    ShapeError,
)
from .kernels import (
    FeatureMatrix,
    KernelMatrix,
    PoseInstance,
    build_kernel,
    check_kernel,
    flatten_poses,
    numerical_rank,
    pairwise_sq_dists,
)
from .memory import (
    ExemplarMemory,
    ExemplarSelection,
    SamplerStrategy,
    baseline_select,
    growing_update,
    per_class_quota,
    read_manifest,
    select_exemplars,
    update_memory,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "CannotInpaintError", "Clustering", "ConfigError", "DegenerateGeometryError",
    "DegenerateSelectionWarning", "ExemplarMemory", "ExemplarSelection", "FeatureMatrix",
    "InstanceTooLargeError", "IntegrityError", "KernelMatrix", "NumericError", "ParameterError",
    "ParseError", "PoseDPPError", "PoseInstance", "RankError", "RankFallbackWarning",
    "SamplerStrategy", "SchemaError", "ShapeError", "SubsetSelection", "baseline_select",
    "brute_force_map", "build_kernel", "check_kernel", "clustered_kdpp_select",
    "elementary_symmetric", "flatten_poses", "greedy_map_kdpp", "greedy_with_fill",
    "growing_update", "kdpp_log_prob", "kmeans", "log_elementary_symmetric", "num_clusters",
    "numerical_rank", "pairwise_sq_dists", "per_class_quota", "read_manifest",
    "select_exemplars", "subset_log_det", "unconstrained_dpp_log_prob", "update_memory",
    "write_manifest",
]
