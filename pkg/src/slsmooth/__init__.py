"""Structural label smoothing toolkit.

Computes data-dependent label-smoothing strengths by clustering a dataset,
bounding each cluster's Bayes error rate from minimum-spanning-tree
statistics, and solving a closed-form constrained objective; includes a
synthetic-data oracle and a soft-label MLP trainer for end-to-end validation.
"""

from .data import (
    Clustering,
    ClusterBerEstimate,
    Dataset,
    DomainError,
    NumericalError,
    SmoothingPlan,
    SoftLabelMatrix,
    alpha_to_epsilon,
    class_priors,
    clustering_from_assignments,
    epsilon_to_alpha,
    load_dataset_csv,
    save_dataset_csv,
    validate_dataset,
)
from .clustering import (
    GmmModel,
    PcaModel,
    cluster_weights,
    fit_gmm,
    fit_pca,
    gmm_assign,
    kmeans,
    pca_transform,
    preprocess_features,
    standardize,
)
from .divergence import (
    Mst,
    build_mst,
    ber_bounds_binary,
    ber_bounds_multiclass,
    cluster_ber,
    cross_edge_counts,
    hp_divergence_binary,
)
from .smoothing import (
    SmoothingConfig,
    none_plan,
    pointwise_bias,
    reverse_plan,
    smoothed_posterior,
    soft_labels,
    solve_strengths,
    uniform_plan,
)
from .datagen import (
    GmmSpec,
    bayes_posterior,
    default_spec,
    generate,
    oracle_ber,
    simulate_bias,
)
from .trainer import (
    MlpModel,
    TrainConfig,
    cross_entropy,
    evaluate,
    forward,
    gradient_check,
    init_mlp,
    train,
)

__version__ = "0.1.0"
