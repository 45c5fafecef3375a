"""Active preference-based reward learning with anchored Gaussian processes."""

from .acquisition import (
    CandidatePool,
    QueryChoice,
    expected_cond_entropy,
    first_entropy,
    info_gain,
    pair_stats,
    select_query,
    select_random_query,
)
from .envs import (
    Environment,
    Normalizer,
    TrueReward,
    draw_true_reward,
    evaluate_true_reward,
    generate_pool,
    make_environment,
    noiseless_respond,
    oracle_respond,
    poly2_terms,
)
from .errors import (
    DimensionMismatchError,
    FitFailureError,
    InvalidInputError,
    InvalidQueryError,
    NumericalDegeneracyError,
    PrefGPError,
)
from .experiment import (
    METHODS,
    ExperimentConfig,
    LearningCurve,
    SeedResult,
    TestSet,
    build_test_set,
    config_text,
    emit_results,
    evaluate,
    load_config,
    run_learning_loop,
    run_seed,
    save_config,
    stream_rng,
)
from .gp import (
    GPPosterior,
    PairPrediction,
    PreferenceDatum,
    empty_model,
    fit,
    likelihood_grad_hess,
    log_likelihood,
    predict_pair,
    update,
)
from .kernels import (
    KernelConfig,
    anchored_rbf,
    default_anchor,
    gram_matrix,
    kernel_diag,
    kernel_matrix,
    kernel_value,
    linear_kernel,
)
from .sampling import SamplerConfig, poisson_disk_sample, poisson_target_sample
from .service import create_app
from .snapshot import (
    atomic_write_text,
    load_model,
    load_pool,
    load_test_set,
    save_model,
    save_pool,
    save_test_set,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
