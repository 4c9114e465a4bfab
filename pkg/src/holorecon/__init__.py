"""Sparse Jacobi polynomial reconstruction of holomorphic functions."""

from .approx import CoeffField, compute_coeffs, eval_expansion
from .bounds import Anisotropy, coeff_bound, select_set_known
from .estimators import LeastSquaresPolynomial, SRLassoPolynomial
from .indices import IndexSet, MultiIndex, hyperbolic_cross
from .jacobi import JacobiParams
from .models import HoloModel, make_model, normalize_to_class
from .recon import reconstruct_cs, reconstruct_ls

__version__ = "0.1.0"

__all__ = [
    "Anisotropy",
    "CoeffField",
    "HoloModel",
    "IndexSet",
    "JacobiParams",
    "LeastSquaresPolynomial",
    "MultiIndex",
    "SRLassoPolynomial",
    "coeff_bound",
    "compute_coeffs",
    "eval_expansion",
    "hyperbolic_cross",
    "make_model",
    "normalize_to_class",
    "reconstruct_cs",
    "reconstruct_ls",
    "select_set_known",
]
