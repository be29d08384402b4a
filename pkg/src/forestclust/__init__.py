"""Differentiable clustering with maximum-weight spanning forests.

Hard clustering is an exact greedy solve over k-component spanning forests;
smoothing comes from averaging solutions under random similarity
perturbations, which turns the argmax into a differentiable soft operator
and yields stochastic gradients for partial-supervision losses.
"""

from .core import (
    DIFFERENT,
    SAME,
    UNOBSERVED,
    ForestAdjacency,
    InfeasibleConstraints,
    MembershipMatrix,
    PartialMembership,
    SimilarityMatrix,
    SoftForest,
    SoftMembership,
    clustering_error,
    membership_from_csv,
    membership_from_labels,
    membership_to_csv,
    partial_from_csv,
    partial_from_labeled_subset,
    partial_to_csv,
    validate_partial,
)
from .datasets import (
    Dataset,
    append_noise_dims,
    dataset_from_csv,
    dataset_to_csv,
    gen_circles,
    gen_four_gaussians,
    gen_two_moons,
    kmeans_baseline,
)
from .losses import (
    JensenGap,
    LossValue,
    fd_gradient_check,
    fy_loss,
    jensen_gap_check,
    partial_fy_loss,
    perturbed_partial_fy_loss,
)
from .models import (
    LinearModel,
    MLPModel,
    init_linear,
    init_mlp,
    model_from_arch,
    pairwise_similarity,
)
from .perturb import (
    PerturbationConfig,
    perturbed_constrained_forest,
    perturbed_forest,
    perturbed_membership,
    sample_noise,
)
from .solver import (
    ForestSolution,
    brute_force_all_k,
    brute_force_forest,
    components_of,
    constrained_max_spanning_forest,
    feasible_forests,
    max_spanning_forest,
)
from .training import (
    Adam,
    SGD,
    TrainConfig,
    TrainReport,
    load_checkpoint,
    loss_and_weight_grad,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "DIFFERENT",
    "SAME",
    "UNOBSERVED",
    "Adam",
    "Dataset",
    "ForestAdjacency",
    "ForestSolution",
    "InfeasibleConstraints",
    "JensenGap",
    "LinearModel",
    "LossValue",
    "MLPModel",
    "MembershipMatrix",
    "PartialMembership",
    "PerturbationConfig",
    "SGD",
    "SimilarityMatrix",
    "SoftForest",
    "SoftMembership",
    "TrainConfig",
    "TrainReport",
    "append_noise_dims",
    "brute_force_all_k",
    "brute_force_forest",
    "clustering_error",
    "components_of",
    "constrained_max_spanning_forest",
    "dataset_from_csv",
    "dataset_to_csv",
    "fd_gradient_check",
    "feasible_forests",
    "fy_loss",
    "gen_circles",
    "gen_four_gaussians",
    "gen_two_moons",
    "init_linear",
    "init_mlp",
    "jensen_gap_check",
    "kmeans_baseline",
    "load_checkpoint",
    "loss_and_weight_grad",
    "max_spanning_forest",
    "membership_from_csv",
    "membership_from_labels",
    "membership_to_csv",
    "model_from_arch",
    "pairwise_similarity",
    "partial_from_csv",
    "partial_from_labeled_subset",
    "partial_to_csv",
    "partial_fy_loss",
    "perturbed_constrained_forest",
    "perturbed_forest",
    "perturbed_membership",
    "perturbed_partial_fy_loss",
    "sample_noise",
    "save_checkpoint",
    "train",
    "validate_partial",
]
