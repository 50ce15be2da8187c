"""Symmetric equilibria of the projected pure-influence flow.

Every symmetric equilibrium is, up to a node permutation, block diagonal
with blocks ``Z_i = p_i V_i V_i^T - q_i I`` where ``V_i`` is a normalized
Stiefel (nSt) matrix: orthonormal columns and equal row norms.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import SphereAppraisal, AppraisalMatrix, as_matrix, max_asymmetry
from .dissonance import dissonance, dissonance_asym

NST_TOL = 1e-10
NGON_TOL = 1e-9
CONSTRUCTION_TOL = 1e-9
CERTIFICATE_TOL = 1e-6


# -- normalized Stiefel matrices --------------------------------------------

@dataclass(frozen=True)
class NstResidual:
    ok: bool
    orthonormality: float  # ||V^T V - I_k||_F
    row_norms: float       # max_i | ||v_i|| - sqrt(k/n) |


def is_nst(v, tol: float = NST_TOL) -> NstResidual:
    """Check orthonormal columns and equal row norms sqrt(k/n)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[1] < 1 or v.shape[1] > v.shape[0]:
        return NstResidual(False, math.inf, math.inf)
    n, k = v.shape
    orth = float(np.linalg.norm(v.T @ v - np.eye(k)))
    rows = float(np.max(np.abs(np.linalg.norm(v, axis=1) - math.sqrt(k / n))))
    return NstResidual(orth < tol and rows < tol, orth, rows)


@dataclass(frozen=True, eq=False)
class NstMatrix:
    """An n x k matrix in nSt(n, k); validated on construction."""

    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        res = is_nst(v)
        if not res.ok:
            raise ValueError(
                f"not a normalized Stiefel matrix (orthonormality residual "
                f"{res.orthonormality:.3e}, row-norm residual {res.row_norms:.3e})")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def k(self) -> int:
        return self.v.shape[1]


def nst_k1(n: int, s: Optional[Sequence[int]] = None) -> NstMatrix:
    """Column ``s / sqrt(n)`` for a sign vector ``s`` (all ones by default)."""
    s = np.ones(n) if s is None else np.asarray(s, dtype=float)
    if s.shape != (n,) or not np.all(np.abs(s) == 1):
        raise ValueError("s must be a length-n vector of +1/-1 entries")
    return NstMatrix((s / math.sqrt(n))[:, None])


def ngon_residual(angles) -> float:
    """``|sum_m exp(2 i alpha_m)|``; zero iff the angles give an nSt(n, 2)."""
    a = np.asarray(angles, dtype=float)
    return float(abs(np.sum(np.exp(2j * a))))


def nst_k2(n: int, angles: Sequence[float]) -> NstMatrix:
    """Rows ``sqrt(2/n) (cos alpha_m, sin alpha_m)``.

    The angles must satisfy ``sum_m exp(2 i alpha_m) = 0``: both the cosine
    and sine sums of ``2 alpha_m`` must be below 1e-9 in magnitude.
    """
    a = np.asarray(angles, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"expected {n} angles, got shape {a.shape}")
    c, s = float(np.sum(np.cos(2 * a))), float(np.sum(np.sin(2 * a)))
    if abs(c) >= NGON_TOL or abs(s) >= NGON_TOL:
        raise ValueError(f"angle constraint violated: residual {math.hypot(c, s):.3e}")
    return NstMatrix(math.sqrt(2.0 / n) * np.column_stack([np.cos(a), np.sin(a)]))


def regular_ngon_angles(n: int) -> np.ndarray:
    """Angles ``pi (m - 1) / n``, m = 1..n."""
    return np.pi * np.arange(n) / n


def nst_stacked(u1, u2) -> NstMatrix:
    """``(1/sqrt 2) [U1; U2]`` for orthogonal k x k matrices U1, U2."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    k = u1.shape[0]
    for u in (u1, u2):
        if u.shape != (k, k) or np.linalg.norm(u.T @ u - np.eye(k)) > NST_TOL:
            raise ValueError("U1 and U2 must be orthogonal matrices of equal size")
    return NstMatrix(np.vstack([u1, u2]) / math.sqrt(2.0))


def nst_harmonic(n: int, k: int) -> NstMatrix:
    """A member of nSt(n, k) for any 1 <= k <= n built from real Fourier modes.

    Columns are the constant mode (odd k) and cosine/sine pairs at
    frequencies 1..floor(k/2), sampled at n equispaced points; for k = n the
    identity is returned.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if k == n:
        return NstMatrix(np.eye(n))
    theta = 2 * np.pi * np.arange(n) / n
    cols = []
    if k % 2:
        cols.append(np.full(n, 1 / math.sqrt(n)))
    for f in range(1, k // 2 + 1):
        cols.append(math.sqrt(2.0 / n) * np.cos(f * theta))
        cols.append(math.sqrt(2.0 / n) * np.sin(f * theta))
    return NstMatrix(np.column_stack(cols))


# -- irreducible equilibria -------------------------------------------------

def irreducible_pq(n: int, k: int) -> tuple[float, float]:
    """``p = sqrt(n / (k (n-k)))``, ``q = sqrt(k / (n (n-k)))``."""
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
    return math.sqrt(n / (k * (n - k))), math.sqrt(k / (n * (n - k)))


def _assemble(p: float, q: float, v: np.ndarray) -> np.ndarray:
    z = p * (v @ v.T) - q * np.eye(v.shape[0])
    z = 0.5 * (z + z.T)
    np.fill_diagonal(z, 0.0)
    return z


def build_irreducible(n: int, k: int, v) -> SphereAppraisal:
    """``Z* = p V V^T - q I`` with the coefficients of :func:`irreducible_pq`."""
    p, q = irreducible_pq(n, k)
    if not isinstance(v, NstMatrix):
        v = NstMatrix(v)
    if v.v.shape != (n, k):
        raise ValueError(f"V has shape {v.v.shape}, expected {(n, k)}")
    z = SphereAppraisal(AppraisalMatrix(_assemble(p, q, v.v)))
    r = residual(z)
    if r >= CONSTRUCTION_TOL:
        raise ArithmeticError(f"constructed equilibrium has residual {r:.3e}")
    return z


def equilibrium_dissonance(n: int, k: int) -> float:
    """``-(n - 2k) / sqrt(k n (n-k))``."""
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
    return -(n - 2 * k) / math.sqrt(k * n * (n - k))


def equilibrium_eigenvalues(n: int, k: int) -> np.ndarray:
    """Ascending spectrum: ``-q`` (n-k times) then ``p - q`` (k times)."""
    p, q = irreducible_pq(n, k)
    return np.concatenate([np.full(n - k, -q), np.full(k, p - q)])


# -- block coefficients -----------------------------------------------------

def block_coefficients(alpha: float, beta: float) -> tuple[float, float]:
    """(p, q) of a block solving ``Z^2 - 2 alpha Z = beta I``:
    ``p = 2 sqrt(alpha^2 + beta)``, ``q = sqrt(alpha^2 + beta) - alpha``.
    """
    r = alpha * alpha + beta
    if r < 0:
        raise ValueError("alpha^2 + beta must be nonnegative")
    return 2 * math.sqrt(r), math.sqrt(r) - alpha


def alpha_beta(p: float, q: float) -> tuple[float, float]:
    """Inverse of :func:`block_coefficients`: ``2 alpha = p - 2q``,
    ``beta = q (p - q)``.
    """
    return 0.5 * p - q, q * (p - q)


@dataclass(frozen=True, eq=False)
class EquilibriumBlock:
    """Diagonal block ``p V V^T - q I`` of size n, or a zero block (v None)."""

    n: int
    k: int
    v: Optional[np.ndarray]
    p: float
    q: float
    beta: float

    def __post_init__(self):
        if self.v is None:
            return
        if abs(self.p * self.k - self.q * self.n) > 1e-10:
            raise ValueError(f"zero-diagonal condition p k = q n fails for block {self}")

    @property
    def zero(self) -> bool:
        return self.v is None

    def matrix(self) -> np.ndarray:
        if self.v is None:
            return np.zeros((self.n, self.n))
        return _assemble(self.p, self.q, np.asarray(self.v))

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "p": self.p, "q": self.q, "beta": self.beta,
                "V": None if self.v is None else np.asarray(self.v).tolist()}


@dataclass(frozen=True, eq=False)
class EquilibriumSpec:
    """Block-diagonal equilibrium description.

    Block row ``a`` of the assembled block-diagonal matrix is placed at node
    ``permutation[a]``.
    """

    permutation: tuple
    blocks: tuple
    epsilon: int
    alpha: float

    @property
    def n(self) -> int:
        return sum(b.n for b in self.blocks)

    def matrix(self) -> np.ndarray:
        n = self.n
        blk = np.zeros((n, n))
        off = 0
        for b in self.blocks:
            blk[off:off + b.n, off:off + b.n] = b.matrix()
            off += b.n
        perm = np.asarray(self.permutation)
        z = np.zeros((n, n))
        z[np.ix_(perm, perm)] = blk
        return z

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "alpha": self.alpha,
                "blocks": [b.to_dict() for b in self.blocks],
                "permutation": list(self.permutation)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_reducible(blocks, epsilon_hint: Optional[int] = None,
                    betas: Optional[Sequence[float]] = None,
                    permutation: Optional[Sequence[int]] = None
                    ) -> tuple[EquilibriumSpec, SphereAppraisal]:
    """Assemble a block-diagonal equilibrium.

    Parameters
    ----------
    blocks : sequence of (n_i, k_i, V_i)
        ``V_i`` is an nSt(n_i, k_i) matrix, or None for a zero block.
    epsilon_hint : int, optional
        Expected common sign of ``n_i - 2 k_i``; checked if given.
    betas : sequence of float, optional
        Required when every nonzero block has ``n_i = 2 k_i``. One value per
        nonzero block, positive, with ``sum beta_i n_i = 1``.
    permutation : sequence of int, optional
        Node placement of the block rows; identity by default.
    """
    parsed = []
    for nb, kb, vb in blocks:
        if vb is None:
            parsed.append((int(nb), int(kb), None))
            continue
        v = vb if isinstance(vb, NstMatrix) else NstMatrix(vb)
        if v.v.shape != (nb, kb) or not 1 <= kb < nb:
            raise ValueError(f"block V has shape {v.v.shape}, expected {(nb, kb)} with 1 <= k < n")
        parsed.append((int(nb), int(kb), v.v))
    nonzero = [(nb, kb) for nb, kb, v in parsed if v is not None]
    if not nonzero:
        raise ValueError("need at least one nonzero block")
    signs = {int(np.sign(nb - 2 * kb)) for nb, kb in nonzero}
    if len(signs) != 1:
        raise ValueError("sign(n_i - 2 k_i) differs between nonzero blocks")
    eps = signs.pop()
    if epsilon_hint is not None and epsilon_hint != eps:
        raise ValueError(f"blocks have epsilon {eps}, hint was {epsilon_hint}")

    if eps != 0:
        total = sum(4 * kb * nb * (nb - kb) / (nb - 2 * kb) ** 2 for nb, kb in nonzero)
        alpha = eps / math.sqrt(total)
        beta_list = [alpha ** 2 * (4 * nb * kb - 4 * kb ** 2) / (nb - 2 * kb) ** 2
                     for nb, kb in nonzero]
    else:
        if betas is None or len(betas) != len(nonzero):
            raise ValueError("epsilon = 0 needs one beta per nonzero block")
        beta_list = [float(b) for b in betas]
        if min(beta_list) <= 0:
            raise ValueError("betas must be positive")
        w = sum(b * nb for b, (nb, _) in zip(beta_list, nonzero))
        if abs(w - 1.0) > 1e-10:
            raise ValueError(f"sum beta_i n_i = {w!r}, must be 1")
        alpha = 0.0

    out = []
    it = iter(beta_list)
    for nb, kb, v in parsed:
        if v is None:
            out.append(EquilibriumBlock(nb, kb, None, 0.0, 0.0, 0.0))
            continue
        beta = next(it)
        p, q = block_coefficients(alpha, beta)
        out.append(EquilibriumBlock(nb, kb, v, p, q, beta))

    n = sum(nb for nb, _, _ in parsed)
    perm = tuple(range(n)) if permutation is None else tuple(int(i) for i in permutation)
    if sorted(perm) != list(range(n)):
        raise ValueError("permutation must be a rearrangement of 0..n-1")
    spec = EquilibriumSpec(perm, tuple(out), eps, alpha)
    z = SphereAppraisal(AppraisalMatrix(spec.matrix()))
    r = residual(z)
    if r >= CONSTRUCTION_TOL:
        raise ArithmeticError(f"constructed equilibrium has residual {r:.3e}")
    return spec, z


# -- certification ----------------------------------------------------------

def residual(z) -> float:
    """``||Z^2 + D(Z) Z - diag(Z^2)||_F``; D uses the transpose form when
    ``z`` is not symmetric.
    """
    a = as_matrix(z)
    d = dissonance(a) if max_asymmetry(a) <= 1e-12 else dissonance_asym(a)
    g = a @ a
    np.fill_diagonal(g, 0.0)
    return float(np.linalg.norm(g + d * a))


def enumerate_balanced(n1: int, n: int) -> Iterator[SphereAppraisal]:
    """All ``(s s^T - I) / sqrt(n1 (n1 - 1))`` with s in {-1,+1}^n1, s_1 = +1,
    placed in the leading n1 x n1 block of an n x n zero matrix.
    """
    if not 2 <= n1 <= n:
        raise ValueError(f"need 2 <= n1 <= n, got n1={n1}, n={n}")
    c = 1.0 / math.sqrt(n1 * (n1 - 1))
    for tail in itertools.product((1.0, -1.0), repeat=n1 - 1):
        s = np.array((1.0,) + tail)
        z = np.zeros((n, n))
        z[:n1, :n1] = c * (np.outer(s, s) - np.eye(n1))
        yield SphereAppraisal(AppraisalMatrix(z))


def instability_certificate(z_star, zero_tol: float = 0.0) -> float:
    """``(m^2 - m + 3) D(Z*)`` for a symmetric equilibrium, where m is the
    number of nonzero rows. A positive value certifies instability.
    """
    a = as_matrix(z_star)
    r = residual(a)
    if r >= CERTIFICATE_TOL:
        raise ValueError(f"not an equilibrium: residual {r:.3e}")
    m = int(np.sum(np.abs(a).max(axis=1) > zero_tol))
    return (m * m - m + 3) * dissonance(a)
