"""Numerical lab for Bochner-Riesz multipliers: annular pieces, kernel decay, CZ stopping times, sparse bounds."""

__version__ = "0.1.0"

from .dyadic import DyadicSquare, SparseCollection, SparseEntry, sparse_form, verify_sparse
from .field import SampledField, load_field, lp_norm, save_field, weak_lp
from .symbol import IndexPack, SymbolSpec, apply, critical_p, lambda_of_p, rhombus

__all__ = [
    "__version__",
    "DyadicSquare",
    "SparseCollection",
    "SparseEntry",
    "sparse_form",
    "verify_sparse",
    "SampledField",
    "load_field",
    "save_field",
    "lp_norm",
    "weak_lp",
    "IndexPack",
    "SymbolSpec",
    "apply",
    "critical_p",
    "lambda_of_p",
    "rhombus",
]
