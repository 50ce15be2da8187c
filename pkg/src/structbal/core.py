"""Matrix domain types, Frobenius geometry and matrix file I/O."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ZERO_TOL = 1e-7
DIAG_TOL = 1e-12
SPHERE_TOL = 1e-9


def as_matrix(x) -> np.ndarray:
    """Return a float64 2-D square array view of ``x``.

    Accepts ndarrays, nested sequences and the wrapper types defined here.
    """
    if isinstance(x, (AppraisalMatrix, SphereAppraisal)):
        return x.entries
    a = np.asarray(x, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AppraisalMatrix:
    """Zero-diagonal n x n appraisal matrix.

    Diagonal entries up to ``DIAG_TOL`` in magnitude are snapped to zero;
    anything larger is rejected.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.entries)
        if a.shape[0] < 1:
            raise ValueError("appraisal matrix needs n >= 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("appraisal matrix has non-finite entries")
        d = np.abs(np.diag(a))
        if d.size and d.max() > DIAG_TOL:
            raise ValueError(f"nonzero diagonal entry {d.max():.3e}")
        a = np.array(a, dtype=float)
        np.fill_diagonal(a, 0.0)
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        if not isinstance(other, AppraisalMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)


@dataclass(frozen=True, eq=False)
class SphereAppraisal:
    """Zero-diagonal matrix of unit Frobenius norm.

    Inputs whose norm is within ``SPHERE_TOL`` of one are renormalized, so
    small integrator drift is absorbed; larger deviations raise.
    """

    inner: AppraisalMatrix

    def __post_init__(self):
        inner = self.inner
        if not isinstance(inner, AppraisalMatrix):
            inner = AppraisalMatrix(inner)
        nrm = np.linalg.norm(inner.entries)
        if abs(nrm - 1.0) > SPHERE_TOL:
            raise ValueError(f"Frobenius norm {nrm!r} is not 1")
        if nrm != 1.0:
            inner = AppraisalMatrix(inner.entries / nrm)
        object.__setattr__(self, "inner", inner)

    @property
    def entries(self) -> np.ndarray:
        return self.inner.entries

    @property
    def n(self) -> int:
        return self.inner.n

    def __eq__(self, other):
        if not isinstance(other, SphereAppraisal):
            return NotImplemented
        return self.inner == other.inner


@dataclass(frozen=True, eq=False)
class SignPattern:
    """Entrywise signs in {-1, 0, +1} with zero diagonal."""

    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("sign pattern must be square")
        if not np.isin(s, (-1, 0, 1)).all():
            raise ValueError("sign pattern entries must be -1, 0 or +1")
        s = s.astype(np.int8, copy=True)
        np.fill_diagonal(s, 0)
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @property
    def n(self) -> int:
        return self.signs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SignPattern):
            return NotImplemented
        return np.array_equal(self.signs, other.signs)

    def __hash__(self):
        return hash((self.n, self.signs.tobytes()))

    def tolist(self) -> list[list[int]]:
        return self.signs.tolist()


@dataclass(frozen=True)
class EtaZState:
    """Scale/direction split X = eta * Z of a nonzero appraisal matrix."""

    eta: float
    z: SphereAppraisal

    def __post_init__(self):
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ValueError(f"eta must be positive, got {self.eta!r}")
        if not isinstance(self.z, SphereAppraisal):
            object.__setattr__(self, "z", SphereAppraisal(self.z))


def frobenius_inner(a, b) -> float:
    """Frobenius inner product <a, b> = trace(b^T a)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(b, a))


def frobenius_norm(a) -> float:
    return float(np.sqrt(frobenius_inner(a, a)))


def normalize_to_sphere(x) -> tuple[float, SphereAppraisal]:
    """Split a nonzero zero-diagonal matrix into (eta, Z) with X = eta Z."""
    a = AppraisalMatrix(as_matrix(x)).entries
    eta = float(np.linalg.norm(a))
    if eta == 0.0:
        raise ValueError("cannot normalize the zero matrix")
    return eta, SphereAppraisal(AppraisalMatrix(a / eta))


def tangent_project(z, y) -> np.ndarray:
    """Orthogonal projection of ``y`` onto the complement of span{z}."""
    z = as_matrix(z)
    y = np.asarray(y, dtype=float)
    if y.shape != z.shape:
        raise ValueError(f"dimension mismatch: {z.shape} vs {y.shape}")
    return y - frobenius_inner(y, z) * z


def sign_pattern(x, zero_tol: float = ZERO_TOL) -> SignPattern:
    """Thresholded sign matrix; |x_ij| <= zero_tol maps to 0.

    The diagonal is ignored, so matrices carrying self-appraisals (the
    Kulakowski state) yield the pattern of their interpersonal part.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    a = as_matrix(x)
    s = np.sign(a).astype(np.int8)
    s[np.abs(a) <= zero_tol] = 0
    return SignPattern(s)


def orthogonal_decomposition(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split ``a`` into (skew-symmetric, zero-diagonal symmetric, diagonal) parts."""
    a = as_matrix(a)
    skew = 0.5 * (a - a.T)
    diag = np.diag(np.diag(a))
    sym = 0.5 * (a + a.T) - diag
    return skew, sym, diag


def max_asymmetry(a) -> float:
    a = as_matrix(a)
    return float(np.max(np.abs(a - a.T))) if a.size else 0.0


# -- matrix files -----------------------------------------------------------

def read_matrix(path, zero_diagonal: bool = True) -> np.ndarray:
    """Read a matrix from CSV or JSON ({"n": int, "entries": [[...]]}).

    The format is picked from the file suffix. With ``zero_diagonal`` the
    diagonal must vanish to within 1e-12 and is then set to exactly zero.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        obj = json.loads(text)
        a = np.asarray(obj["entries"], dtype=float)
        if "n" in obj and a.shape != (obj["n"], obj["n"]):
            raise ValueError(f"entries shape {a.shape} does not match n={obj['n']}")
    else:
        rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
        a = np.asarray([[float(c) for c in r] for r in rows], dtype=float)
    a = as_matrix(a)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{path}: non-finite entries")
    if zero_diagonal:
        a = AppraisalMatrix(a).entries.copy()
    return a


def write_matrix(path, x, fmt: str | None = None) -> None:
    path = Path(path)
    a = as_matrix(x)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    if fmt == "json":
        path.write_text(json.dumps({"n": a.shape[0], "entries": a.tolist()}) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            for row in a:
                w.writerow([repr(float(v)) for v in row])
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
