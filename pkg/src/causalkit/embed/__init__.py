"""Graph and node embedding machinery."""

from causalkit.embed.features import (
    NodeFeatures,
    feature_matrix,
    features_from_embeddings,
    hash_encode,
    hash_features,
    load_external_embeddings,
    save_embeddings,
    structural_features,
)
from causalkit.embed.feather import default_theta, feather_embed, transition_matrix
from causalkit.embed.gat import (
    GnnParams,
    TrainConfig,
    evaluate_corpus_loss,
    gat_embed,
    mask_nodes,
    masked_training_grads,
    masked_training_loss,
    train_gnn,
)
from causalkit.embed.pagerank import pagerank
from causalkit.embed.similarity import EPSILON, cosine_similarity, loss_cos_diff

__all__ = [
    "EPSILON",
    "GnnParams",
    "NodeFeatures",
    "TrainConfig",
    "cosine_similarity",
    "default_theta",
    "evaluate_corpus_loss",
    "feather_embed",
    "feature_matrix",
    "features_from_embeddings",
    "gat_embed",
    "hash_encode",
    "hash_features",
    "load_external_embeddings",
    "loss_cos_diff",
    "mask_nodes",
    "masked_training_grads",
    "masked_training_loss",
    "pagerank",
    "save_embeddings",
    "structural_features",
    "train_gnn",
    "transition_matrix",
]
