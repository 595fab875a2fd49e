"""Transformer-style wrappers around the wave-function basis and the kernel transform.

Rows of ``X`` are grid functions sampled on ``s = 0..s_max``.  Both
estimators accept complex input, which scikit-learn's own validators reject,
so arrays are checked here.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .charlier import QContext
from .exceptions import QDomainError
from .fourier import build_kernel, unitarity_residual
from .oscillator import wavefunction_table

__all__ = ["QOscillatorBasis", "QFourierTransform"]


def _check_grid_array(X, width: int) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 1:
        raise ValueError("expected a 2D array of grid functions, got 1D; reshape with X.reshape(1, -1)")
    if X.ndim != 2:
        raise ValueError(f"expected a 2D array, got {X.ndim}D")
    if X.shape[1] != width:
        raise ValueError(f"X has {X.shape[1]} columns, expected {width} lattice sites")
    if not np.issubdtype(X.dtype, np.number) or X.dtype == bool:
        raise ValueError(f"X must be numeric, got dtype {X.dtype}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or infinity")
    return X


class QOscillatorBasis(TransformerMixin, BaseEstimator):
    """Expansion in the orthonormal q-wave functions ``psi_0 .. psi_{n_components-1}``.

    ``transform`` returns ``X @ Psi.T``; ``inverse_transform`` resynthesises
    the grid functions from coefficients.
    """

    def __init__(self, q=0.5, mu=0.3, s_max=60, n_components=21):
        self.q = q
        self.mu = mu
        self.s_max = s_max
        self.n_components = n_components

    def fit(self, X=None, y=None):
        ctx = QContext(self.q, self.mu, self.s_max)
        if int(self.n_components) != self.n_components or self.n_components < 1:
            raise QDomainError(f"n_components must be a positive integer, got {self.n_components!r}")
        if X is not None:
            _check_grid_array(X, ctx.size)
        self.context_ = ctx
        self.components_ = wavefunction_table(ctx, int(self.n_components) - 1).copy()
        self.n_features_in_ = ctx.size
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = _check_grid_array(X, self.n_features_in_)
        return X @ self.components_.T

    def inverse_transform(self, C):
        check_is_fitted(self, "components_")
        C = _check_grid_array(C, self.components_.shape[0])
        return C @ self.components_


class QFourierTransform(TransformerMixin, BaseEstimator):
    """Discrete q-Fourier transform ``(K_t f)(s) = sum_p K_t(s, p) f(p)``.

    ``t = 1j`` gives the canonical transform.  ``inverse_transform`` uses the
    conjugate kernel when ``|t| = 1`` (unitary up to truncation) and a
    linear solve otherwise.
    """

    def __init__(self, q=0.5, mu=0.3, s_max=60, t=1j, method="closed"):
        self.q = q
        self.mu = mu
        self.s_max = s_max
        self.t = t
        self.method = method

    def fit(self, X=None, y=None):
        ctx = QContext(self.q, self.mu, self.s_max)
        if X is not None:
            _check_grid_array(X, ctx.size)
        kernel = build_kernel(self.t, ctx, method=self.method)
        self.context_ = ctx
        self.kernel_ = kernel.entries
        self.n_features_in_ = ctx.size
        if abs(abs(complex(self.t)) - 1.0) < 1e-12:
            self.unitarity_residual_ = unitarity_residual(kernel)
        else:
            self.unitarity_residual_ = None
        return self

    def transform(self, X):
        check_is_fitted(self, "kernel_")
        X = _check_grid_array(X, self.n_features_in_)
        return X @ self.kernel_.T

    def inverse_transform(self, Y):
        check_is_fitted(self, "kernel_")
        Y = _check_grid_array(Y, self.n_features_in_)
        if self.unitarity_residual_ is not None:
            return Y @ self.kernel_.conj()
        return np.linalg.solve(self.kernel_, Y.T).T
