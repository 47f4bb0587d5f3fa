"""Family-robust ancestry scores for genotype matrices.

Genotype data with related individuals breaks the usual SVD-based
ancestry scores: families drag components toward themselves and distort
everyone's coordinates. This package bundles the plain decomposition,
projection work-arounds, whitening and covariance-substitution methods,
and a family-averaging method, plus a stratified genotype simulator with
sibships, metrics (SWISS, RSE, replacement instability, individual scree
curves), SVG reports, and a pipeline CLI.

Hot loops (latent AR(1) fill, meiosis transmission, loess) run through a
compiled extension when available; `fampca._kernels.BACKEND` names the
active implementation and FAMPCA_PURE_PYTHON=1 forces the numpy fallback.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import FamPcaError, NumericalError, ValidationError
from .evaluate import (
    individual_scree,
    instability,
    loess_smooth,
    rse,
    rse_mean,
    split_for_method,
    swiss,
    swiss_mean,
)
from .methods import (
    METHODS,
    AncestryResult,
    compute_scores,
    cpw,
    family_average_scores,
    family_rotate,
    family_whiten,
    matrix_substitution,
    ms_scores,
    naive_scores,
    pcair_lite,
    singleton_projection,
)
from .model import (
    FamilyStructure,
    GenotypeMatrix,
    ScaledMatrix,
    column_center,
    covariance_matrix,
    drop_monomorphic,
    scale_genotypes,
)
from .relatedness import (
    detect_families,
    pairwise_correlations,
    relatedness_graph,
    select_unrelated_set,
)
from .simulate import SimConfig, simulate_census_dataset, simulate_dataset

__all__ = [
    "BACKEND",
    "METHODS",
    "AncestryResult",
    "FamPcaError",
    "FamilyStructure",
    "GenotypeMatrix",
    "NumericalError",
    "ScaledMatrix",
    "SimConfig",
    "ValidationError",
    "__version__",
    "column_center",
    "compute_scores",
    "covariance_matrix",
    "cpw",
    "detect_families",
    "drop_monomorphic",
    "family_average_scores",
    "family_rotate",
    "family_whiten",
    "individual_scree",
    "instability",
    "loess_smooth",
    "matrix_substitution",
    "ms_scores",
    "naive_scores",
    "pairwise_correlations",
    "pcair_lite",
    "relatedness_graph",
    "rse",
    "rse_mean",
    "scale_genotypes",
    "select_unrelated_set",
    "simulate_census_dataset",
    "simulate_dataset",
    "singleton_projection",
    "split_for_method",
    "swiss",
    "swiss_mean",
]
