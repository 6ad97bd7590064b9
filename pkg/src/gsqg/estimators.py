"""scikit-learn compatible wrappers.

Each sample is one periodic field flattened row-major, so ``X`` has shape
``(n_samples, n * n)``. The grid size is inferred from the number of
features during ``fit``.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .littlewood_paley import build_partition, low_pass, max_shell, shell_profile
from .mollify import loglog_fit, mollify
from .spectral import Grid, PhysicalField, to_physical, to_spectral


def _side(n_features: int) -> int:
    n = math.isqrt(n_features)
    if n * n != n_features:
        raise ValueError(f"{n_features} features is not a square n*n grid")
    Grid(n)  # validates the size
    return n


class _FieldTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        self.n_ = _side(X.shape[1])
        self._validate_params_for(Grid(self.n_))
        return self

    def _validate_params_for(self, grid: Grid) -> None:
        pass

    def _fields(self, X):
        check_is_fitted(self, "n_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        g = Grid(self.n_)
        for row in X:
            yield g, PhysicalField(g, row.reshape(g.shape))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.allow_nan = False
        return tags


class LowPass(_FieldTransformer):
    """Apply the smooth dyadic cut-off ``S_N`` to each field."""

    def __init__(self, N: int = 2):
        self.N = N

    def _validate_params_for(self, grid):
        if not 0 <= self.N <= max_shell(grid.n) + 1:
            raise ValueError(f"N={self.N} outside [0, {max_shell(grid.n) + 1}] for n={grid.n}")

    def transform(self, X):
        return np.stack([to_physical(low_pass(to_spectral(f), self.N)).values.ravel()
                         for _, f in self._fields(X)])


class Mollify(_FieldTransformer):
    """Convolve each field with the standard mollifier at scale ``eps``."""

    def __init__(self, eps: float = 0.3):
        self.eps = eps

    def transform(self, X):
        return np.stack([mollify(f, self.eps).values.ravel() for _, f in self._fields(X)])


class ShellNorms(_FieldTransformer):
    """Features ``2^{j alpha} ||Delta_j f||_{L^p}`` for the resolved shells."""

    def __init__(self, p: float = 2.0, alpha: float = 0.0):
        self.p = p
        self.alpha = alpha

    def fit(self, X, y=None):
        super().fit(X, y)
        self.shells_ = np.array(list(build_partition(Grid(self.n_)).shells))
        return self

    def transform(self, X):
        return np.stack([shell_profile(to_spectral(f), self.alpha, self.p).weighted
                         for _, f in self._fields(X)])

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "shells_")
        return np.array([f"shell_{j}" for j in self.shells_], dtype=object)


class BesovExponent(RegressorMixin, BaseEstimator):
    """Estimate the dyadic regularity of each field.

    ``predict`` returns ``-slope`` of ``log2 ||Delta_j f||_p`` against ``j``
    over ``shells`` (default: every resolved shell from 1 on).
    ``fit`` only records the grid; there is nothing to learn.
    """

    def __init__(self, p: float = 2.0, shells=None):
        self.p = p
        self.shells = shells

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        self.n_ = _side(X.shape[1])
        part = build_partition(Grid(self.n_))
        shells = list(self.shells) if self.shells is not None else list(part.shells)[1:]
        if len(shells) < 2 or min(shells) < part.jmin or max(shells) > part.jmax:
            raise ValueError(f"need at least two shells inside [{part.jmin}, {part.jmax}], got {shells}")
        self.shells_ = np.array(sorted(shells))
        return self

    def predict(self, X):
        check_is_fitted(self, "shells_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        g = Grid(self.n_)
        out = []
        for row in X:
            raw = shell_profile(to_spectral(PhysicalField(g, row.reshape(g.shape))), 0.0, self.p,
                                shells=self.shells_).raw
            if np.any(raw <= 0):
                out.append(math.nan)
                continue
            slope, _, _ = loglog_fit(2.0 ** self.shells_, raw, base=2.0)
            out.append(-slope)
        return np.array(out)


__all__ = ["BesovExponent", "LowPass", "Mollify", "ShellNorms"]
