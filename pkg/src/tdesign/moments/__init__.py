"""Moment operators of random circuits, permutation bases and spectral gaps."""

from .haar import monomial_moment_check, symmetric_moment
from .operator import MomentOperator, haar_moment_operator, moment_matvec, pair_projector
from .permutations import PermutationBasis, build_permutation_basis, permutation_operator
from .spectrum import (
    GapCertificate,
    design_distance,
    gap_amplification_check,
    lambda2_moment,
    x_matrix,
)

__all__ = [
    "GapCertificate",
    "MomentOperator",
    "PermutationBasis",
    "build_permutation_basis",
    "design_distance",
    "gap_amplification_check",
    "haar_moment_operator",
    "lambda2_moment",
    "moment_matvec",
    "monomial_moment_check",
    "pair_projector",
    "permutation_operator",
    "symmetric_moment",
    "x_matrix",
]
