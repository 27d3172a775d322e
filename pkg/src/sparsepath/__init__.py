"""Tuning-free sparse regression via solution-path thresholding."""

from .datagen import EquiCorrelated, GenConfig, generate, normalize_columns
from .errors import (
    DegenerateColumn,
    EpsilonInfeasible,
    Infeasible,
    InvalidConfig,
    NoCandidates,
    NonConverged,
    RankDeficient,
    SparsePathError,
    TooLarge,
    ZeroColumn,
    ZeroResidual,
)
from .evaluation import (
    Metrics,
    TheoremDiagnostics,
    compute_metrics,
    estimation_error,
    restricted_eigenvalue,
    sample_condition,
    support_metrics,
)
from .linalg import (
    FactorState,
    ProblemInstance,
    SupportSet,
    Truth,
    correlations,
    extend,
    loss,
    restricted_ls,
)
from .regressors import (
    LassoGrid,
    PathEntry,
    RegressorSpec,
    SolutionPath,
    entry_for_support,
    foba_path,
    lasso_path,
    marginal_path,
    omp_path,
    run_alg,
    solution_path,
)
from .scaled_lasso import (
    EquilibriumResult,
    ScaledLassoResult,
    equilibrium_iteration,
    lambda0_from_c,
    scaled_lasso,
)
from .threshold import (
    PATH_EXHAUSTED,
    THRESHOLD_MET,
    PathConfig,
    PathSelection,
    delta,
    run_path,
    run_path_for_c_grid,
)

__version__ = "0.1.0"
