"""The dissonance energy D(X) = -trace(X^3) and its gradients."""

from __future__ import annotations

import math

import numpy as np

from .core import as_matrix, max_asymmetry

SYMMETRY_TOL = 1e-10


def dissonance(x) -> float:
    """Negative sum of triad products, computed as -trace(X^3)."""
    a = as_matrix(x)
    # trace(X^2 X) = sum_ij (X^2)_ij X_ji
    return -float(np.sum((a @ a) * a.T))


def dissonance_asym(z) -> float:
    """-trace(Z^T Z^2); coincides with :func:`dissonance` on symmetric input."""
    a = as_matrix(z)
    return -float(np.sum((a @ a) * a))


def _require_symmetric(a: np.ndarray) -> None:
    asym = max_asymmetry(a)
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max |X - X^T| = {asym:.3e})")


def grad_ambient(x) -> np.ndarray:
    """Gradient of D on symmetric zero-diagonal matrices: -3 (X^2 - diag X^2)."""
    a = as_matrix(x)
    _require_symmetric(a)
    g = a @ a
    np.fill_diagonal(g, 0.0)
    return -3.0 * g


def grad_sphere(z) -> np.ndarray:
    """Riemannian gradient of D restricted to the unit sphere of symmetric
    zero-diagonal matrices.
    """
    a = as_matrix(z)
    _require_symmetric(a)
    nrm = np.linalg.norm(a)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"grad_sphere needs a unit-norm matrix, norm is {nrm!r}")
    g = a @ a
    d = -float(np.sum(g * a))
    np.fill_diagonal(g, 0.0)
    return -3.0 * (g + d * a)


def balance_threshold(n: int) -> float:
    """Initial dissonance below which a one-positive-eigenvalue start must
    end balanced: -(n-3)/sqrt((n-1)(n-2)).
    """
    if n < 3:
        raise ValueError("balance_threshold needs n >= 3")
    return -(n - 3) / math.sqrt((n - 1) * (n - 2))
