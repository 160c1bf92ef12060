"""Separability of a classifier's decision columns.

A weight matrix whose columns are orthonormal assigns classes with maximally
independent kernels. The metric here scores how far a matrix is from that
ideal: the squared Frobenius distance between the column Gram matrix and the
identity, normalized by the number of columns so values are comparable across
class counts. Two algebraically equivalent forms are provided (direct
Frobenius sum and trace of the squared error matrix) and cross-checked in the
training harness.

Columns are the decision kernels; a matrix with more columns than rows is
rejected rather than silently transposed, since that usually means the caller
holds a row-kernel layout and should pass the transpose explicitly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OrientationError
from .linalg import as_matrix, frobenius_norm_sq, trace


def error_matrix(w):
    """Gram-matrix error ``W^T W - I`` of the columns of ``w``.

    Zero exactly when the columns are orthonormal. The result is n x n and
    symmetric, where n is the column count.
    """
    w = as_matrix(w, "w")
    m, n = w.shape
    if m < n:
        raise OrientationError(
            f"error_matrix: {w.shape} has more columns than rows; decision "
            "kernels must be columns - pass the transpose for row-kernel layouts"
        )
    return w.T @ w - np.eye(n)


def separability_metric(w):
    """Column-separability score: squared Frobenius norm of the Gram error,
    divided by the column count. Non-negative; zero iff columns orthonormal."""
    e = error_matrix(w)
    return frobenius_norm_sq(e) / e.shape[0]


def separability_metric_trace_form(w):
    """Same score as :func:`separability_metric`, via the trace of the squared
    error matrix."""
    e = error_matrix(w)
    return trace(e @ e) / e.shape[0]


@dataclass(frozen=True)
class SeparabilityReport:
    """Metric value plus the raw error matrix for diagnostics."""

    epsilon: float
    error_matrix: np.ndarray
    n_classes: int
    m_features: int

    def as_record(self, include_error_matrix=False):
        """Flat dict for logging; the error matrix is optional and nested."""
        rec = {
            "epsilon": self.epsilon,
            "n_classes": self.n_classes,
            "m_features": self.m_features,
        }
        if include_error_matrix:
            rec["error_matrix"] = self.error_matrix.tolist()
        return rec


def separability_report(w):
    """Bundle metric and error matrix for the given weight matrix."""
    w = as_matrix(w, "w")
    e = error_matrix(w)
    return SeparabilityReport(
        epsilon=frobenius_norm_sq(e) / e.shape[0],
        error_matrix=e,
        n_classes=w.shape[1],
        m_features=w.shape[0],
    )


def format_epsilon(value):
    """Scientific notation with three significant digits, e.g. ``6.55e-08``."""
    return f"{value:.2e}"
