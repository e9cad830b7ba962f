"""Local linear smooth backfitting for additive regression models."""
from .backfit import (
    AdditiveFit,
    Dataset,
    FitConfig,
    FitDiagnostics,
    IdentifiabilityReport,
    check_identifiability,
    fit,
    predict,
)
from .domain import Domain, Grid1D, GridSet, integrate_1d, integrate_2d, make_uniform_grid
from .errors import (
    ConvergenceError,
    DataError,
    HarnessError,
    IdentifiabilityError,
    InvalidArgumentError,
    NumericalError,
    SmoothBackfitError,
)
from .kernel import KernelSpec, base_kernel, boundary_kernel_1d, kernel_moment, product_kernel
from .marginals import MarginalTables, cauchy_schwarz_ratio, compute_marginals
from .projection import AdditiveElement, project_P0, project_Pk, project_Pkprime, project_response
from .simulate import MCSummary, Scenario, generate, monte_carlo
from .theory import local_linear_1d, theory_bias, theory_variance, variance_term_vj

__version__ = "0.1.0"

__all__ = [
    "AdditiveElement", "AdditiveFit", "ConvergenceError", "DataError", "Dataset", "Domain",
    "FitConfig", "FitDiagnostics", "Grid1D", "GridSet", "HarnessError", "IdentifiabilityError",
    "IdentifiabilityReport", "InvalidArgumentError", "KernelSpec", "MCSummary", "MarginalTables",
    "NumericalError", "Scenario", "SmoothBackfitError", "base_kernel", "boundary_kernel_1d",
    "cauchy_schwarz_ratio", "check_identifiability", "compute_marginals", "fit", "generate",
    "integrate_1d", "integrate_2d", "kernel_moment", "local_linear_1d", "make_uniform_grid",
    "monte_carlo", "predict", "product_kernel", "project_P0", "project_Pk", "project_Pkprime",
    "project_response", "theory_bias", "theory_variance", "variance_term_vj",
]
