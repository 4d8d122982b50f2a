"""Regression dataset container with cached cross-products."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import DomainError, NonFiniteError


def _as_readonly_f64(a, name):
    out = np.array(a, dtype=np.float64, order="C", copy=True)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"{name} contains NaN or infinite entries")
    out.setflags(write=False)
    return out


class Dataset:
    """Immutable (X, y) pair, optionally with a known noise scale sigma.

    The arrays are copied and marked read-only so a Dataset can be shared
    freely across threads or subprocesses.  Cross-products used by the
    subset machinery (X'X, X'y, y'y) are computed once and cached.
    """

    def __init__(self, X, y, sigma: float | None = None):
        X = _as_readonly_f64(X, "X")
        y = _as_readonly_f64(y, "y")
        if X.ndim != 2:
            raise DomainError("X must be a 2-d array")
        if y.ndim != 1:
            raise DomainError("y must be a 1-d array")
        if X.shape[0] != y.shape[0]:
            raise DomainError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DomainError("X must have at least one row and one column")
        if sigma is not None:
            sigma = float(sigma)
            if not np.isfinite(sigma) or sigma < 0:
                raise NonFiniteError("sigma must be finite and nonnegative")
        self.X = X
        self.y = y
        self.sigma = sigma
        self.n, self.p = X.shape

    @cached_property
    def gram(self) -> np.ndarray:
        """X'X, shape (p, p), read-only."""
        g = self.X.T @ self.X
        g.setflags(write=False)
        return g

    @cached_property
    def xty(self) -> np.ndarray:
        """X'y, shape (p,), read-only."""
        b = self.X.T @ self.y
        b.setflags(write=False)
        return b

    @cached_property
    def yty(self) -> float:
        return float(self.y @ self.y)

    @cached_property
    def column_norms(self) -> np.ndarray:
        norms = np.linalg.norm(self.X, axis=0)
        norms.setflags(write=False)
        return norms

    def max_normalization_error(self) -> float:
        """Largest deviation of ||X_j||/sqrt(n) from 1 across columns."""
        return float(np.max(np.abs(self.column_norms / np.sqrt(self.n) - 1.0)))

    def assert_normalized(self, tol: float = 1e-9) -> None:
        err = self.max_normalization_error()
        if err > tol:
            raise DomainError(
                f"columns are not normalized: max |  ||X_j||/sqrt(n) - 1 | = {err:.3g} > {tol:.3g}"
            )

    def __repr__(self):
        return f"Dataset(n={self.n}, p={self.p}, sigma={self.sigma})"


def rescale_columns(X) -> tuple[np.ndarray, np.ndarray]:
    """Rescale columns of X so that ||X_j||^2 = n, returning (X_scaled, scales).

    `scales[j] = ||X_j|| / sqrt(n)`; coefficients fitted on the rescaled
    matrix convert back to original units by dividing by `scales`.
    """
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise NonFiniteError("X contains NaN or infinite entries")
    n = X.shape[0]
    scales = np.linalg.norm(X, axis=0) / np.sqrt(n)
    if np.any(scales == 0.0):
        raise DomainError("cannot rescale a zero column")
    return X / scales, scales
