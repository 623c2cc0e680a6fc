"""Erdelyi-Kober fractional diffusion: M-Wright function, EK operators,
Green functions, a deterministic solver and a path sampler for generalized
grey Brownian motion."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DiracOrder,
    DomainError,
    EKDiffError,
    InsufficientHistory,
    InsufficientPaths,
    NonConvergence,
    NotPositiveDefinite,
    ParamMismatch,
    ResolutionError,
    SingularityError,
    TableError,
    Unsupported,
)
from .mwright import (  # noqa: E402
    MWrightTable,
    WrightOrder,
    mwright_build_table,
    mwright_compose,
    mwright_eval,
    mwright_moment,
    mwright_tail_cut,
)
from .ekops import EKParams, SampledFunction, ek_derivative, ek_integral, ek_power_oracle, rl_integral  # noqa: E402
from .greenfn import (  # noqa: E402
    DiffusionParams,
    directing_pdf,
    gaussian_green,
    general_solution,
    ggbm_cdf,
    ggbm_cell_average,
    ggbm_green,
    green_mixture,
    green_profile,
    green_variance,
    stretched_gaussian_green,
    time_fractional_green,
)
from .solver import Grid1D, SolutionField, SolverConfig, ek_residual, solve, solve_reduced  # noqa: E402
from .sampler import EnsembleConfig, PathEnsemble, ensemble_stats, fbm_paths, ggbm_paths, sample_tau  # noqa: E402
