"""Infinite-width PINN prediction via GPR, neurally-informed equations,
and spectral-bias diagnostics on NNGP kernels."""

__version__ = "0.1.0"

from .errors import (
    AssemblyError,
    CapabilityError,
    DomainError,
    GridError,
    IllConditionedError,
    PinnSpectralError,
    QuadratureError,
    SingularSystemError,
    UnsupportedFamilyError,
    ZeroSourceError,
)
from .kernels import (
    KernelSpec,
    RandomFeatureNet,
    eval_gram,
    eval_kernel,
    monte_carlo_kernel,
    sample_network,
    scale_variances,
)
from .operators import (
    DomainGrid,
    IntervalGeometry,
    LinearDiffOp,
    SlabGeometry,
    apply_to_function,
    apply_to_kernel,
    diff_matrix_1d,
    diff_operator_matrix,
    identity_operator,
    interval_grid,
)
from .gpr import (
    CollocationSet,
    ProblemData,
    assemble_kpinn,
    gpr_predict,
    sample_collocation,
)
from .nie import (
    NieSolution,
    ToyConfig,
    effective_action,
    greens_function_toy,
    greens_single_pole,
    nie_solve_grid,
    toy_predict,
)
from .spectral import (
    SpectralDecomposition,
    attach_source,
    augmented_source,
    compute_khat,
    cumulative_spectral,
    discrepancy_filter,
    eig_lkhatl,
    figure_of_merit_qn,
)

__all__ = [
    "__version__",
    "AssemblyError",
    "CapabilityError",
    "DomainError",
    "GridError",
    "IllConditionedError",
    "PinnSpectralError",
    "QuadratureError",
    "SingularSystemError",
    "UnsupportedFamilyError",
    "ZeroSourceError",
    "KernelSpec",
    "RandomFeatureNet",
    "eval_gram",
    "eval_kernel",
    "monte_carlo_kernel",
    "sample_network",
    "scale_variances",
    "DomainGrid",
    "IntervalGeometry",
    "LinearDiffOp",
    "SlabGeometry",
    "apply_to_function",
    "apply_to_kernel",
    "diff_matrix_1d",
    "diff_operator_matrix",
    "identity_operator",
    "interval_grid",
    "CollocationSet",
    "ProblemData",
    "assemble_kpinn",
    "gpr_predict",
    "sample_collocation",
    "NieSolution",
    "ToyConfig",
    "effective_action",
    "greens_function_toy",
    "greens_single_pole",
    "nie_solve_grid",
    "toy_predict",
    "SpectralDecomposition",
    "attach_source",
    "augmented_source",
    "compute_khat",
    "cumulative_spectral",
    "discrepancy_filter",
    "eig_lkhatl",
    "figure_of_merit_qn",
]
