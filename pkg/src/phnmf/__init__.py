"""Population-based hierarchical nonnegative matrix factorization.

Factorize nonnegative survey-style matrices, pick ranks by cross-seed
stability, split respondents into a hierarchy of disjoint subpopulations,
regenerate the synthetic benchmark populations, and score recovered
structure and downstream regressions.
"""

from .evaluation import (
    AccuracyReport,
    RankDeficiencyError,
    RegressionFit,
    coeff_alignment,
    label_match_accuracy,
    ols,
    ridge,
    ridge_cv,
)
from .hierarchy import (
    HnmfConfig,
    PopulationTree,
    TopicTree,
    assign_hard,
    assign_soft,
    hnmf_topdown,
    leaves,
    phnmf,
    tree_residuals,
    tree_to_dict,
    tree_to_dot,
)
from .ingest import (
    ColumnSpec,
    EncodedSurvey,
    SchemaError,
    SurveySchema,
    assemble,
    consolidate_satisfaction,
    encode_survey,
    indicator_encode,
    load_csv,
    text_topic_features,
    tfidf,
)
from .linalg import (
    Matrix,
    SeededRng,
    ShapeError,
    ValidationError,
    ZeroVectorWarning,
    cosine_similarity,
    derive_seed,
    frobenius_norm,
    load_matrix_bin,
    load_matrix_csv,
    matmul,
    save_matrix_bin,
    save_matrix_csv,
)
from .model_select import (
    RankSelection,
    SimilarityReport,
    feature_similarity,
    match_rows,
    select_rank,
)
from .nmf import (
    Factorization,
    NmfConfig,
    export_factorization,
    init_factors,
    mu_update_h,
    mu_update_w,
    nmf,
)
from .synthetic import (
    GROUP_LABELS,
    SyntheticDataset,
    SyntheticSpec,
    gen_categorical,
    gen_continuous,
    gen_response,
    gen_w_true,
    sample_trunc_normal,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "ColumnSpec",
    "EncodedSurvey",
    "Factorization",
    "GROUP_LABELS",
    "HnmfConfig",
    "Matrix",
    "NmfConfig",
    "PopulationTree",
    "RankDeficiencyError",
    "RankSelection",
    "RegressionFit",
    "SchemaError",
    "SeededRng",
    "ShapeError",
    "SimilarityReport",
    "SurveySchema",
    "SyntheticDataset",
    "SyntheticSpec",
    "TopicTree",
    "ValidationError",
    "ZeroVectorWarning",
    "assemble",
    "assign_hard",
    "assign_soft",
    "coeff_alignment",
    "consolidate_satisfaction",
    "cosine_similarity",
    "derive_seed",
    "encode_survey",
    "export_factorization",
    "feature_similarity",
    "frobenius_norm",
    "gen_categorical",
    "gen_continuous",
    "gen_response",
    "gen_w_true",
    "hnmf_topdown",
    "indicator_encode",
    "init_factors",
    "label_match_accuracy",
    "leaves",
    "load_csv",
    "load_matrix_bin",
    "load_matrix_csv",
    "match_rows",
    "matmul",
    "mu_update_h",
    "mu_update_w",
    "nmf",
    "ols",
    "phnmf",
    "ridge",
    "ridge_cv",
    "sample_trunc_normal",
    "save_matrix_bin",
    "save_matrix_csv",
    "select_rank",
    "text_topic_features",
    "tfidf",
    "tree_residuals",
    "tree_to_dict",
    "tree_to_dot",
]
