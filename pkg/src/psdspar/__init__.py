"""Spectral sparsification of PSD matrix sums, connectivity parameters and Cayley graphs."""

from .connectivity import (
    AlphaMinimalCertificate,
    ConnectivityResult,
    DominationQuery,
    alpha_eps,
    connectivity_parameter,
    connectivity_threshold,
    dominates,
    extract_witnesses,
    verify_unsparsifiable,
)
from .linalg import check_eps_approx, is_psd, range_restriction, restrict_to_range, sym_eig
from .psd_core import PsdCollection, SparsifyReport, WeightVector, normalize, sparsify

__version__ = "0.1.0"

__all__ = [
    "AlphaMinimalCertificate",
    "ConnectivityResult",
    "DominationQuery",
    "PsdCollection",
    "SparsifyReport",
    "WeightVector",
    "alpha_eps",
    "check_eps_approx",
    "connectivity_parameter",
    "connectivity_threshold",
    "dominates",
    "extract_witnesses",
    "is_psd",
    "normalize",
    "range_restriction",
    "restrict_to_range",
    "sparsify",
    "sym_eig",
    "verify_unsparsifiable",
]
