"""Symbolic-numeric toolkit for star transforms.

Dual differential-operator symbols and injectivity (:mod:`.starcore`),
symmetric configurations (:mod:`.symmetry`), non-invertible configurations
as linear subspaces (:mod:`.fano`), and 2D numerics (:mod:`.numeric2d`,
:class:`.StarTransformer`).
"""

__version__ = "0.1.0"

from .exceptions import CapacityError, DomainError
from .polyring import Polynomial, elementary_symmetric, reciprocal, substitute_linear_forms
from .starcore import (BranchMatrix, DualSymbol, StarSymbol, SymbolClass, classify_symbol,
                       dual_symbol, dual_symbol_permanent_path, is_injective,
                       laplacian_power_form)
from .estimator import StarTransformer

__all__ = [
    "BranchMatrix", "CapacityError", "DomainError", "DualSymbol", "Polynomial",
    "StarSymbol", "StarTransformer", "SymbolClass", "classify_symbol", "dual_symbol",
    "dual_symbol_permanent_path", "elementary_symmetric", "is_injective",
    "laplacian_power_form", "reciprocal", "substitute_linear_forms",
]
