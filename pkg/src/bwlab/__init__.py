"""bwlab: a laboratory for kernel density bandwidth selection.

Exact finite-sample MISE evaluation through the difference density, a
Hermite-expansion plug-in family, roughness estimators for R(f'') and a
seeded Monte-Carlo harness comparing the selectors against the exact
optimal bandwidth.
"""

from .hermite import (
    HermiteModel,
    alphas_from_density,
    diagonals_in_alphas,
    estimate_alphas,
    expansion_density,
    hermite_poly,
    pair_differences,
)
from .kernels import Kernel, a_k, constants, kde, kernel_eval, self_convolution
from .mise import (
    DnaCurve,
    amise_optimal_h,
    default_bracket,
    exact_dna,
    hermite_dna,
    minimize_grid_polish,
    minimize_scalar,
    q0_normal,
    reference_constant,
    taylor_q,
)
from .mixtures import (
    PRESETS,
    DifferenceDensity,
    NormalMixture,
    cumulant_ratio_check,
    difference_density,
    roughness_true,
    sample_mixture,
    standard_normal,
)
from .roughness import (
    RoughnessEstimate,
    r2m_diag,
    r2m_hat,
    r_local_likelihood,
    r_normal_start,
)
from .selectors import (
    METHOD_NAMES,
    SelectionReport,
    estimate_sigma,
    run_method,
    select_hermite,
    select_normal_reference,
    select_normal_start,
    select_proposal1,
    select_proposal2,
    select_proposal3,
    select_t_tail,
    select_ucv,
)
from .simulate import (
    SimConfig,
    SimResult,
    run_roughness_contest,
    run_selector_comparison,
    true_optimal_h,
)

__version__ = "0.1.0"

__all__ = [
    "Kernel", "constants", "kernel_eval", "self_convolution", "a_k", "kde",
    "NormalMixture", "DifferenceDensity", "PRESETS", "standard_normal",
    "difference_density", "roughness_true", "sample_mixture",
    "cumulant_ratio_check",
    "HermiteModel", "hermite_poly", "pair_differences", "estimate_alphas",
    "diagonals_in_alphas", "alphas_from_density", "expansion_density",
    "exact_dna", "q0_normal", "reference_constant", "hermite_dna", "taylor_q",
    "amise_optimal_h", "minimize_scalar", "minimize_grid_polish", "DnaCurve",
    "default_bracket",
    "RoughnessEstimate", "r2m_hat", "r2m_diag", "r_normal_start",
    "r_local_likelihood",
    "SelectionReport", "estimate_sigma", "select_ucv",
    "select_normal_reference", "select_hermite", "select_proposal1",
    "select_proposal2", "select_proposal3", "select_t_tail",
    "select_normal_start", "run_method", "METHOD_NAMES",
    "SimConfig", "SimResult", "true_optimal_h", "run_selector_comparison",
    "run_roughness_contest",
]
