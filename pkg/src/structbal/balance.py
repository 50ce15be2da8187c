"""Structural-balance semantics on sign patterns.

Node indices are 0-based throughout, including witnesses.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .core import ZERO_TOL, SignPattern, as_matrix, max_asymmetry, sign_pattern


class VerdictKind(str, Enum):
    ONE_FACTION = "BalancedOneFaction"
    TWO_FACTIONS = "BalancedTwoFactions"
    COMPONENTS = "BalancedComponents"
    UNBALANCED = "Unbalanced"
    INCOMPLETE = "Incomplete"


@dataclass(frozen=True)
class BalanceVerdict:
    """Outcome of a balance check.

    Attributes
    ----------
    kind : VerdictKind
    assignment : tuple of int or None
        Faction vector s in {-1, 0, +1}^n (0 for nodes outside every
        faction), normalized so the lowest-index node of each component
        gets +1. Set for the balanced kinds.
    factions : tuple of tuple of int
        Node groups with mutually positive ties.
    isolated : tuple of int
        Nodes with zero row and column.
    witness : tuple of int or None
        A triad (i, j, k) with nonpositive sign product, or an edge (i, j)
        that breaks sign symmetry or the two-coloring. Set for ``Unbalanced``.
    components : tuple of BalanceVerdict
        Per-component verdicts for ``BalancedComponents``.
    """

    kind: VerdictKind
    assignment: Optional[tuple] = None
    factions: tuple = ()
    isolated: tuple = ()
    witness: Optional[tuple] = None
    components: tuple = field(default=())

    @property
    def balanced(self) -> bool:
        return self.kind in (VerdictKind.ONE_FACTION, VerdictKind.TWO_FACTIONS)

    def to_dict(self) -> dict:
        d = {
            "verdict": self.kind.value,
            "factions": [list(f) for f in self.factions],
            "isolated": list(self.isolated),
            "witness": None if self.witness is None else list(self.witness),
        }
        if self.assignment is not None:
            d["assignment"] = list(self.assignment)
        if self.components:
            d["components"] = [c.to_dict() for c in self.components]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _signs(p) -> np.ndarray:
    if isinstance(p, SignPattern):
        return p.signs
    return SignPattern(p).signs


def is_complete(p) -> bool:
    """True iff every off-diagonal sign is nonzero."""
    s = _signs(p)
    n = s.shape[0]
    return int(np.count_nonzero(s)) == n * (n - 1)


def negative_triad(p) -> Optional[tuple]:
    """Lexicographically smallest ordered triad (i, j, k) of distinct nodes
    with ``s_ij s_jk s_ki <= 0``, or None if every triad is positive.
    """
    s = _signs(p).astype(np.int64)
    n = s.shape[0]
    if n < 3:
        return None
    # prod[i, j, k] = s_ij s_jk s_ki
    prod = s[:, :, None] * s[None, :, :] * s.T[:, None, :]
    idx = np.arange(n)
    distinct = ((idx[:, None, None] != idx[None, :, None])
                & (idx[None, :, None] != idx[None, None, :])
                & (idx[:, None, None] != idx[None, None, :]))
    bad = np.argwhere((prod <= 0) & distinct)
    if bad.size == 0:
        return None
    return tuple(int(v) for v in bad[0])  # argwhere is in C (lexicographic) order


def all_triads_positive(p) -> bool:
    """True iff ``s_ij s_jk s_ki > 0`` for all distinct i, j, k."""
    return negative_triad(p) is None


def _asymmetric_edge(s: np.ndarray) -> Optional[tuple]:
    bad = np.argwhere((s != 0) & (s.T != 0) & (s != s.T))
    for i, j in bad:
        if i < j:
            return int(i), int(j)
    return None


def faction_partition(p) -> BalanceVerdict:
    """Two-color the signed graph of ``p`` by breadth-first propagation.

    Positive edges join nodes of equal color, negative edges nodes of
    opposite color. Roots are taken in ascending index order.
    """
    s = _signs(p)
    n = s.shape[0]
    edge = _asymmetric_edge(s)
    if edge is not None:
        return BalanceVerdict(VerdictKind.UNBALANCED, witness=edge)

    # undirected edge signs; one-directional ties count
    und = np.where(s != 0, s, s.T)
    isolated = tuple(i for i in range(n) if not und[i].any())
    color = np.zeros(n, dtype=int)
    comps = []
    for root in range(n):
        if color[root] != 0 or root in isolated:
            continue
        color[root] = 1
        members = [root]
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for j in np.flatnonzero(und[i]):
                want = color[i] * und[i, j]
                if color[j] == 0:
                    color[j] = want
                    members.append(int(j))
                    queue.append(int(j))
                elif color[j] != want:
                    witness = negative_triad(s) if is_complete(s) else None
                    if witness is None:
                        witness = (min(i, int(j)), max(i, int(j)))
                    return BalanceVerdict(VerdictKind.UNBALANCED, witness=witness)
        comps.append(sorted(members))

    if not comps:
        return BalanceVerdict(VerdictKind.INCOMPLETE, isolated=isolated)

    def verdict_for(members):
        assign = tuple(int(color[i]) if i in members else 0 for i in range(n))
        plus = tuple(i for i in members if color[i] > 0)
        minus = tuple(i for i in members if color[i] < 0)
        if minus:
            return BalanceVerdict(VerdictKind.TWO_FACTIONS, assign, (plus, minus))
        return BalanceVerdict(VerdictKind.ONE_FACTION, assign, (plus,))

    if is_complete(s):
        return verdict_for(comps[0])

    cliques = all(
        int(np.count_nonzero(und[np.ix_(m, m)])) == len(m) * (len(m) - 1) for m in comps
    )
    if cliques and (len(comps) > 1 or isolated):
        subs = tuple(verdict_for(m) for m in comps)
        return BalanceVerdict(
            VerdictKind.COMPONENTS,
            assignment=tuple(int(c) for c in color),
            factions=tuple(f for v in subs for f in v.factions),
            isolated=isolated,
            components=subs,
        )
    return BalanceVerdict(VerdictKind.INCOMPLETE, isolated=isolated)


def classify(z, zero_tol: float = ZERO_TOL) -> BalanceVerdict:
    """Balance verdict for the thresholded sign pattern of ``z``.

    The diagonal is ignored.
    """
    return faction_partition(sign_pattern(z, zero_tol))


def count_eigen_signs(z, zero_band: float = 1e-7) -> tuple[int, int, int]:
    """(positive, zero, negative) eigenvalue counts of a symmetric matrix;
    eigenvalues with ``|lambda| <= zero_band`` count as zero.
    """
    a = as_matrix(z)
    asym = max_asymmetry(a)
    if asym > 1e-8:
        raise ValueError(f"matrix is not symmetric (max |Z - Z^T| = {asym:.3e})")
    lam = np.linalg.eigvalsh(0.5 * (a + a.T))
    pos = int(np.sum(lam > zero_band))
    neg = int(np.sum(lam < -zero_band))
    return pos, a.shape[0] - pos - neg, neg

