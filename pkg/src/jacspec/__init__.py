"""Block Jacobi matrix diagnostics: criteria verdicts and index estimates."""

__version__ = "0.1.0"

from .blockmat import HermEigResult, abs_inv_sqrt, herm_eig, inv, spec_norm
from .criteria import CriteriaOptions, CriterionReport
from .generators import InteractionModel, PerturbationData
from .indices import IndexEstimate, dirac_index_estimate, estimate_index
from .jacobi import BlockJacobiMatrix, DenseTruncation
from .sequences import ProbeConfig, ScalarSequence, SeriesVerdict, make_sequence, series_probe

__all__ = [
    "__version__",
    "BlockJacobiMatrix",
    "CriteriaOptions",
    "CriterionReport",
    "DenseTruncation",
    "HermEigResult",
    "IndexEstimate",
    "InteractionModel",
    "PerturbationData",
    "ProbeConfig",
    "ScalarSequence",
    "SeriesVerdict",
    "abs_inv_sqrt",
    "dirac_index_estimate",
    "estimate_index",
    "herm_eig",
    "inv",
    "make_sequence",
    "series_probe",
    "spec_norm",
]
