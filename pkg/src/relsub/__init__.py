"""Toolkit for discovering substructures in knowledge-graph relations.

Pipeline: parse/sample/split a multi-relational triple collection, train
translation-based embeddings, validate them with the centroid-vector
protocol, cluster per-relation translation vectors, score cluster
cohesion/separation, and emit 2-D projections plus qualitative reports.
"""

from .clustering import (
    Clustering,
    KSelectionCurve,
    adjusted_rand_index,
    calinski_harabasz,
    davies_bouldin,
    k_sweep,
    kmeans,
    kmeans_best_of,
    silhouette,
    wss,
)
from .embedding import (
    EmbeddingTable,
    TrainConfig,
    TrainResult,
    export_table_tsv,
    load_table,
    rank_eval,
    save_table,
    score_triple,
    train_embeddings,
)
from .graph import (
    GraphSample,
    GraphStats,
    TripleRecord,
    compute_stats,
    filter_relations,
    parse_assertions,
    sample_triples,
    split_triples,
)
from .metrics import (
    ClusterQuality,
    cluster_centroid,
    cluster_quality,
    cohesion,
    normalize_unit,
    separation,
    summarize,
)
from .projection import Projection2D, project_2d
from .report import ClusterReport, render_scatter, sample_cluster_triples
from .synthetic import SyntheticSpec, generate_synthetic
from .validation import (
    RelationValidationReport,
    SimilarityListPair,
    TranslationSet,
    centroid_vector,
    kl_check,
    similarity_lists,
    spearman_abs,
    translation_vectors,
    validate_all,
)

__version__ = "0.1.0"
