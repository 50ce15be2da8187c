"""Scale-symmetric matrices: X such that X diag(gamma) is symmetric for some
positive gamma, equivalently ``X = G^{1/2} X_s G^{-1/2}`` with ``G = diag(gamma)``
and ``X_s`` symmetric.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import AppraisalMatrix, as_matrix, max_asymmetry


@dataclass(frozen=True, eq=False)
class ScaleWitness:
    """Positive weights gamma with gamma[0] = 1."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("gamma must be a nonempty vector")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise ValueError("gamma entries must be positive and finite")
        g = g / g[0]
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n(self) -> int:
        return self.gamma.size

    def to_json(self) -> str:
        return json.dumps(self.gamma.tolist())


def make_scale_symmetric(x_s, gamma) -> np.ndarray:
    """``X_ij = sqrt(gamma_i) x_ij / sqrt(gamma_j)`` for symmetric zero-diagonal
    ``x_s``; ``X diag(gamma)`` is then symmetric.
    """
    a = AppraisalMatrix(as_matrix(x_s)).entries
    if max_asymmetry(a) > 1e-10:
        raise ValueError("x_s must be symmetric")
    g = np.asarray(gamma.gamma if isinstance(gamma, ScaleWitness) else gamma, dtype=float)
    if g.shape != (a.shape[0],) or np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise ValueError("gamma must be a positive vector of length n")
    r = np.sqrt(g)
    return r[:, None] * a / r[None, :]


def symmetrize(x, witness: ScaleWitness) -> np.ndarray:
    """``G^{-1/2} X G^{1/2}``, symmetric when ``witness`` is valid for ``x``."""
    a = as_matrix(x)
    r = np.sqrt(witness.gamma)
    return a * r[None, :] / r[:, None]


def find_witness(x, tol: float = 1e-8) -> Optional[ScaleWitness]:
    """Solve ``x_ij gamma_j = x_ji gamma_i`` for positive gamma.

    Ratios are propagated along a breadth-first spanning forest of the
    nonzero pattern (roots in ascending order, each given weight 1); every
    remaining edge is then checked with relative tolerance ``tol``. Returns
    None when the pattern is not sign-symmetric or a check fails.
    """
    a = as_matrix(x).copy()
    np.fill_diagonal(a, 0.0)
    n = a.shape[0]
    nz = a != 0
    if np.any(nz != nz.T) or np.any(np.sign(a) != np.sign(a.T)):
        return None
    gamma = np.zeros(n)
    for root in range(n):
        if gamma[root] > 0:
            continue
        gamma[root] = 1.0
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for j in np.flatnonzero(nz[i]):
                if gamma[j] == 0:
                    gamma[j] = gamma[i] * a[j, i] / a[i, j]
                    queue.append(int(j))
    lhs = a * gamma[None, :]
    scale = np.maximum(np.abs(lhs), np.abs(lhs.T))
    bad = np.abs(lhs - lhs.T) > tol * np.where(scale > 0, scale, 1.0)
    if np.any(bad):
        return None
    return ScaleWitness(gamma)


def check_trace_square(x, witness: Optional[ScaleWitness] = None) -> float:
    """``trace(X^2) = sum_ij (gamma_j / gamma_i) x_ij^2`` for scale-symmetric X.

    The sum form is used, so the result is nonnegative by construction and
    zero only for X = 0.
    """
    a = as_matrix(x)
    w = witness or find_witness(a)
    if w is None:
        raise ValueError("matrix is not scale-symmetric")
    g = w.gamma
    return float(np.sum((g[None, :] / g[:, None]) * a * a))


def real_spectrum(x, witness: Optional[ScaleWitness] = None) -> np.ndarray:
    """Eigenvalues of a scale-symmetric X via its symmetric similar matrix."""
    w = witness or find_witness(x)
    if w is None:
        raise ValueError("matrix is not scale-symmetric")
    s = symmetrize(x, w)
    return np.linalg.eigvalsh(0.5 * (s + s.T))


def random_witness(n: int, rng, low: float = 0.25, high: float = 4.0) -> ScaleWitness:
    """Log-uniform gamma in [low, high], normalized so gamma[0] = 1."""
    g = np.exp(rng.uniform(math.log(low), math.log(high), size=n))
    return ScaleWitness(g)
