"""newspulse: multi-scale temporal and content-selection analysis of
news-consumption logs, plus an agent-based click simulator that closes the
loop with the analysis pipeline."""

from .abm import (
    AgentConfig,
    EmpiricalIntervals,
    PowerLawIntervals,
    SimTrace,
    compare_activity,
    simulate_agent,
    simulate_population,
)
from .cohorts import (
    AgglomerativeClusterer,
    ClusterResult,
    GaussianMixtureEM,
    InterestSignature,
    KMeansClusterer,
    activity_clusters,
    agglomerative,
    gmm_em,
    group_deviation_profile,
    kmeans,
    select_best_clustering,
    silhouette,
    top_n_tags,
)
from .content import (
    EmbeddingStore,
    ExposureFeatures,
    cosine_similarity,
    diversity_binned_analysis,
    exposure_entropy,
    filter_exposure_length,
    hash_embed,
    joint_density_difference,
    mean_pairwise_distance,
    partition_by_click,
    proxy_exposure,
    similarity_matrix,
    wasserstein_1d,
)
from .ingest import (
    Article,
    Corpus,
    Event,
    Impression,
    build_realtime_history,
    filter_min_interactions,
    load_corpus,
    parse_jsonl_events,
    parse_mind_behaviors,
    parse_mind_news,
    save_corpus,
)
from .sessions import (
    ActivityProfile,
    Session,
    SessionGap,
    adaptive_threshold,
    hourly_activity_profile,
    segment_corpus,
    segment_sessions,
    session_stats,
)
from .temporal import (
    DensityEstimate,
    FitResult,
    FourierSeriesModel,
    compare_families,
    detect_inflection,
    estimate_density,
    eval_fourier,
    fit_exponential,
    fit_fourier,
    fit_power_law,
    interval_endpoint_profile,
)

__version__ = "0.1.0"
