"""blockprobe: trainless visual-attribute probing of convnet blocks."""

__version__ = "0.1.0"

from .classify import CVReport, KnnConfig, cross_validate, knn_predict, stratified_folds
from .cluster import (
    AgreementScores,
    ClusterLabeling,
    HdbscanParams,
    adjusted_mutual_info,
    adjusted_rand_index,
    hdbscan,
)
from .datagen import SynthSpec, synth_color_dataset, synth_texture_dataset
from .matrix import EmbeddingMatrix
from .reducer import ReducedEmbedding, ReducerConfig, reduce, trustworthiness
from .retrieval import RetrievalQuery, RetrievalResult, combined_rank, emit_gallery
from .store import read_store, write_store

__all__ = [
    "AgreementScores",
    "ClusterLabeling",
    "CVReport",
    "EmbeddingMatrix",
    "HdbscanParams",
    "KnnConfig",
    "ReducedEmbedding",
    "ReducerConfig",
    "RetrievalQuery",
    "RetrievalResult",
    "SynthSpec",
    "adjusted_mutual_info",
    "adjusted_rand_index",
    "combined_rank",
    "cross_validate",
    "emit_gallery",
    "hdbscan",
    "knn_predict",
    "read_store",
    "reduce",
    "stratified_folds",
    "synth_color_dataset",
    "synth_texture_dataset",
    "trustworthiness",
    "write_store",
]
