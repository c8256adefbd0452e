"""Pairwise correlation whitening for anatomically paired tabular features.

The package fits symmetric 2x2 whitening blocks over declared column
pairs (left/right homologues, GM/CSF tissue pairs), applies them in
ordered stages, maps classifier weights back to the original feature
axes, and wraps the whole thing in a leakage-safe cross-validation
harness with a seeded synthetic cohort generator for testing claims at
desk scale.
"""

from .config import NamingBlock, RunConfig, load_cohort_config, load_run_config
from .crossval import (
    DEFAULT_C_GRID,
    ComparisonResult,
    CvReport,
    FoldFit,
    feature_space_weights,
    fit_fold,
    fold_correlation_matrices,
    run_comparison,
    run_pipeline,
    top_k_weights,
    transform_rows,
    whitened_space_weights,
)
from .errors import ConfigError
from .folds import FoldAssignment, stratified_kfold
from .logistic import (
    GridSearchResult,
    LinearModel,
    grid_search_C,
    objective_and_grad,
    predict_scores,
    train_logreg,
)
from .manifest import (
    DerivedManifest,
    FeatureId,
    NamingConvention,
    PairManifest,
    WhiteningStage,
    derive_manifest_from_naming,
    manifest_digest,
    parse_manifest,
    serialize_manifest,
)
from .metrics import PairedTestResult, balanced_accuracy, fold_t_test, roc_auc
from .preprocess import ConfoundSpec, Residualizer, Scaler, assert_standardized
from .spectral import (
    EIG_FLOOR,
    WhiteningBlock,
    check_correlation,
    eig_sym_2x2,
    regularize_block,
    zca_cor_block,
)
from .synth import (
    DEFAULT_REGIONS,
    CohortSpec,
    GeneratedCohort,
    column_grid,
    default_bd_like_spec,
    generate,
    lateralized_spec,
)
from .table import FeatureTable, read_feature_table, write_feature_table
from .whitener import (
    FittedStage,
    FittedWhitener,
    PairOrderCheck,
    WeightVector,
    check_order_preservation,
    fit_whitener,
    pair_correlation,
)

__version__ = "0.1.0"
