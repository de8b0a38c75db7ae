"""scikit-learn wrapper around the discretized star transform.

Rows of ``X`` are flattened ``n x n`` fields, so the transformer drops into
pipelines and grid searches like any other preprocessing step.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DomainError
from .numeric2d import Domain2D, Field2D, apply_star, invert_star
from .starcore import (StarSymbol, classify_symbol, dual_symbol, is_injective,
                       laplacian_power_form)


class StarTransformer(TransformerMixin, BaseEstimator):
    """Forward star transform as ``transform``, dual-operator inversion as ``inverse_transform``.

    Parameters
    ----------
    star : StarSymbol or dict
        Total symbol ``(p, U)``; a dict is parsed with ``StarSymbol.from_json``.
    n : int
        Grid resolution per axis on ``(-1, 1)^2``.
    reg : float
        Tikhonov parameter used when the dual symbol is not a Laplacian power.
    method : {"auto", "fourier"}
        Inversion back-end, see :func:`invert_star`.
    """

    def __init__(self, star=None, n=128, reg=1e-3, method="auto"):
        self.star = star
        self.n = n
        self.reg = reg
        self.method = method

    def _star(self) -> StarSymbol:
        if isinstance(self.star, StarSymbol):
            return self.star
        if isinstance(self.star, dict):
            return StarSymbol.from_json(self.star)
        raise DomainError("star must be a StarSymbol or its JSON dict")

    def fit(self, X=None, y=None):
        self.star_ = self._star()
        self.domain_ = Domain2D(int(self.n))
        self.dual_symbol_ = dual_symbol(self.star_)
        self.injective_ = is_injective(self.star_)
        self.laplacian_form_ = laplacian_power_form(self.dual_symbol_)
        if self.star_.order is not None:
            self.symbol_class_ = classify_symbol(self.dual_symbol_)
        else:
            self.symbol_class_ = None
        self.n_features_in_ = self.domain_.n ** 2
        return self

    def _rows(self, X):
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features (an {self.n}x{self.n} grid), "
                             f"got {X.shape[1]}")
        return X

    def _map(self, X, op):
        check_is_fitted(self, "star_")
        if isinstance(X, Field2D):
            return op(X)
        X = self._rows(X)
        n = self.domain_.n
        out = np.empty_like(X)
        for k, row in enumerate(X):
            out[k] = op(Field2D(self.domain_, row.reshape(n, n))).samples.ravel()
        return out

    def transform(self, X):
        return self._map(X, lambda f: apply_star(f, self.star_))

    def inverse_transform(self, X):
        check_is_fitted(self, "star_")
        if not self.injective_:
            raise DomainError("star transform is not injective; it has no inverse")
        return self._map(X, lambda g: invert_star(g, self.star_, self.reg, self.method))
