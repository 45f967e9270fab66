"""Desk-scale graph contrastive learning with similarity-weighted objectives.

A from-scratch numpy/scipy toolkit: graph primitives, personalized-PageRank
and feature similarity, anchor-aware sample weights, contrastive and
neighborhood-contrastive losses with verified hand-written gradients, and
an experiment harness for two-view pretraining and semi-supervised MLP
training on synthetic and small real graphs.
"""

from .augmentation import AugmentConfig, View, drop_edges, make_view, make_views, mask_features
from .data import DataSplit, SbmSpec, gen_sbm, load_dataset, make_split, save_dataset
from .errors import ConfigError, NumericalError, ParseError
from .graph import Graph, NormalizedAdjacency, build_graph, normalized_adjacency, spmm
from .nn import (
    ForwardTrace,
    ParamStore,
    adam_step,
    backward,
    gcn_backward,
    gcn_forward,
    grad_check,
    init_gcn_params,
    init_mlp_params,
    load_checkpoint,
    mlp_backward,
    mlp_forward,
    save_checkpoint,
)
from .objectives import (
    GapStatistics,
    LossResult,
    ObjectiveConfig,
    PlantedPopulation,
    batch_contrastive_loss,
    combined_loss,
    cross_entropy,
    enhanced_loss,
    enhanced_nc_loss,
    ideal_loss,
    infonce,
    nc_loss,
    population_from_labels,
    sampled_ideal_loss,
    theorem1_gap,
)
from .pipeline import (
    AblationRow,
    ExperimentConfig,
    ProbeConfig,
    RunReport,
    config_from_dict,
    config_hash,
    linear_probe,
    run_ablation,
    train_grace,
    train_graphmlp,
)
from .similarity import (
    SimilarityConfig,
    SimilarityMatrix,
    compute_similarity,
    feature_similarity,
    fuse,
    load_similarity,
    ppr_exact,
    ppr_iterative,
    save_similarity,
    structural_similarity,
)
from .weighting import (
    CandidateSets,
    TemperaturePair,
    WeightSet,
    WeightTable,
    negative_weights,
    positive_weights,
    transform_neg,
    transform_pos,
    weight_set,
)

__version__ = "0.1.0"
