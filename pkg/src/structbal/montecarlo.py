"""Monte Carlo estimation of how often trajectories reach structural balance.

Each trial draws a random initial matrix from a seeded generator, integrates
one model and scores the run from its events. Per-trial seeds depend only on
(master seed, trial index), so results do not depend on worker count or
scheduling.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .balance import VerdictKind, classify, count_eigen_signs, faction_partition
from .core import ZERO_TOL, max_asymmetry, sign_pattern
from .dissonance import dissonance_asym
from .dynamics import (
    BudgetExhausted,
    ConvergedToEquilibrium,
    IntegrationFailure,
    IntegratorOptions,
    ModelKind,
    Trajectory,
    integrate,
)
from .scale_symmetric import find_witness, real_spectrum

ENTRY_BOUND = 100.0


class Family(str, Enum):
    ASYMMETRIC = "asymmetric"
    SYMMETRIC = "symmetric"
    KULAKOWSKI = "kulakowski"


class OutcomeKind(str, Enum):
    BALANCED = "BalancedFinite"
    BALANCED_COMPONENTS = "BalancedComponentsFinite"
    CONVERGED_UNBALANCED = "ConvergedUnbalanced"
    NO_DECISION = "NoDecision"


_ALLOWED = {
    ModelKind.PURE: {Family.ASYMMETRIC, Family.SYMMETRIC},
    ModelKind.PROJECTED_PURE: {Family.ASYMMETRIC, Family.SYMMETRIC},
    ModelKind.ETA_Z: {Family.ASYMMETRIC, Family.SYMMETRIC},
    ModelKind.KULAKOWSKI: {Family.KULAKOWSKI},
    ModelKind.PROJECTED_KULAKOWSKI: {Family.KULAKOWSKI},
}


def chernoff_n(epsilon: float, eta_conf: float) -> int:
    """Smallest N with ``N >= ln(2/eta) / (2 eps^2)``."""
    if not (0 < epsilon < 1 and 0 < eta_conf < 1):
        raise ValueError("epsilon and eta_conf must lie in (0, 1)")
    return max(1, math.ceil(math.log(2.0 / eta_conf) / (2.0 * epsilon * epsilon)))


def chernoff_epsilon(n_trials: int, eta_conf: float) -> float:
    """Half-width guaranteed by ``n_trials`` samples at confidence 1 - eta."""
    return math.sqrt(math.log(2.0 / eta_conf) / (2.0 * n_trials))


def trial_seed(master_seed: int, index: int) -> int:
    """64-bit seed for trial ``index``, mixed from the master seed."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def gen_initial(family, n: int, seed: int) -> np.ndarray:
    """Random initial matrix with entries uniform in [-100, 100].

    ``asymmetric``: independent off-diagonal entries, zero diagonal.
    ``symmetric``: upper triangle sampled and mirrored, zero diagonal.
    ``kulakowski``: full matrix including the diagonal, scaled to unit
    Frobenius norm.
    """
    family = Family(family)
    if n < 3:
        raise ValueError("n must be at least 3")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-ENTRY_BOUND, ENTRY_BOUND, size=(n, n))
    if family is Family.KULAKOWSKI:
        return x / np.linalg.norm(x)
    if family is Family.SYMMETRIC:
        x = np.triu(x, 1)
        x = x + x.T
    else:
        np.fill_diagonal(x, 0.0)
    return x


def initial_state(model, family, n: int, seed: int) -> np.ndarray:
    model = ModelKind(model)
    x = gen_initial(family, n, seed)
    if model.projected:
        x = x / np.linalg.norm(x)
    return x


@dataclass(frozen=True)
class TrialOutcome:
    """Scored trial.

    ``one_positive`` is None when the terminal state is neither symmetric
    nor scale-symmetric, so its spectrum is not known to be real.
    """

    index: int
    seed: int
    kind: OutcomeKind
    t_sign: Optional[float] = None
    detail: str = ""
    terminal_time: float = 0.0
    terminal_dissonance: float = 0.0
    eigen_counts: Optional[tuple] = None
    one_positive: Optional[bool] = None
    scale_witness: bool = False


def _spectral_flags(z: np.ndarray, zero_tol: float):
    a = np.where(np.abs(z) > zero_tol, z, 0.0)
    np.fill_diagonal(a, 0.0)
    w = find_witness(a, tol=1e-6)
    counts = None
    if max_asymmetry(z) < 1e-8:
        counts = count_eigen_signs(z)
    elif w is not None:
        lam = real_spectrum(a, w)
        pos = int(np.sum(lam > 1e-7))
        neg = int(np.sum(lam < -1e-7))
        counts = (pos, lam.size - pos - neg, neg)
    one = None if counts is None else counts[0] == 1
    return counts, one, w is not None


def classify_outcome(traj: Trajectory, zero_tol: float = ZERO_TOL,
                     index: int = 0, seed: int = 0) -> TrialOutcome:
    """Score a trajectory.

    ``BalancedFinite`` iff a sign pattern stabilized, is complete and
    balanced, and the run ended by convergence or blow-up. A run that
    converges before the sign window elapses is scored on its final state. Component-wise
    balance with isolated nodes is ``BalancedComponentsFinite``. Runs that
    hit the budget or failed are ``NoDecision``; everything else is
    ``ConvergedUnbalanced``.
    """
    term = traj.terminal
    z = traj.final_state
    if traj.model in (ModelKind.PURE, ModelKind.KULAKOWSKI):
        nz = np.linalg.norm(z)
        z = z / nz if nz > 0 else z
    common = dict(index=index, seed=seed, terminal_time=float(term.time),
                  terminal_dissonance=dissonance_asym(z))
    counts, one, wit = _spectral_flags(z, zero_tol)
    common.update(eigen_counts=counts, one_positive=one, scale_witness=wit)

    if isinstance(term, (BudgetExhausted, IntegrationFailure)):
        reason = "budget exhausted" if isinstance(term, BudgetExhausted) else term.reason
        return TrialOutcome(kind=OutcomeKind.NO_DECISION, detail=reason, **common)
    sign = traj.sign_event
    if sign is not None:
        pattern, since = sign.pattern, sign.since
    elif isinstance(term, ConvergedToEquilibrium):
        # converged before the sign window elapsed: a fixed point keeps its pattern
        pattern, since = sign_pattern(z, zero_tol), 0.0
    else:
        pattern = None
    if pattern is not None:
        verdict = faction_partition(pattern)
        if verdict.balanced:
            return TrialOutcome(kind=OutcomeKind.BALANCED, t_sign=since, **common)
        if verdict.kind is VerdictKind.COMPONENTS:
            return TrialOutcome(kind=OutcomeKind.BALANCED_COMPONENTS, t_sign=since,
                                **common)
        return TrialOutcome(kind=OutcomeKind.CONVERGED_UNBALANCED,
                            detail=verdict.kind.value, **common)
    verdict = classify(z, zero_tol)
    return TrialOutcome(kind=OutcomeKind.CONVERGED_UNBALANCED,
                        detail=f"no stable sign pattern; terminal {verdict.kind.value}",
                        **common)


def _run_trial(args) -> TrialOutcome:
    model, family, n, master_seed, index, opts = args
    seed = trial_seed(master_seed, index)
    x0 = initial_state(model, family, n, seed)
    traj = integrate(model, x0, opts)
    return classify_outcome(traj, opts.zero_tol, index=index, seed=seed)


@dataclass
class MonteCarloReport:
    model: ModelKind
    family: Family
    n: int
    N: int
    master_seed: int
    counts: dict
    p_hat: float
    p_components: float
    eta_conf: float
    epsilon: float
    one_positive_balanced: int
    options: dict
    trials: list
    runtime: float = 0.0

    def to_dict(self, include_runtime: bool = False, include_trials: bool = False) -> dict:
        d = {
            "model": self.model.value,
            "family": self.family.value,
            "n": self.n,
            "N": self.N,
            "master_seed": self.master_seed,
            "counts": dict(self.counts),
            "p_hat": self.p_hat,
            "p_components": self.p_components,
            "eta_conf": self.eta_conf,
            "epsilon": self.epsilon,
            "one_positive_among_balanced": self.one_positive_balanced,
            "criteria": {
                "balanced": "sign pattern (|x| <= zero_tol -> 0, diagonal ignored) "
                            "unchanged for sign_window (projected) or "
                            "sign_window_frac * t (unprojected), complete and balanced, "
                            "run ended by convergence or blow-up",
                "converged": "||rhs||_F < grad_tol at two consecutive accepted steps",
            },
            "options": self.options,
        }
        if include_runtime:
            d["runtime_seconds"] = self.runtime
        if include_trials:
            d["trials"] = [_trial_dict(t) for t in self.trials]
        return d

    def to_json(self, include_runtime: bool = False) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2, sort_keys=True)

    def write_trials_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "seed", "outcome", "t_sign", "terminal_dissonance",
                        "pos", "zero", "neg", "one_positive", "scale_witness", "detail"])
            for t in self.trials:
                c = t.eigen_counts or ("", "", "")
                w.writerow([t.index, t.seed, t.kind.value,
                            "" if t.t_sign is None else repr(t.t_sign),
                            repr(t.terminal_dissonance), *c,
                            "" if t.one_positive is None else int(t.one_positive),
                            int(t.scale_witness), t.detail])


def _trial_dict(t: TrialOutcome) -> dict:
    d = asdict(t)
    d["kind"] = t.kind.value
    d["eigen_counts"] = None if t.eigen_counts is None else list(t.eigen_counts)
    return d


def run_experiment(model, family, n: int, N: int, master_seed: int,
                   opts: Optional[IntegratorOptions] = None, workers: int = 1,
                   eta_conf: float = 0.01) -> MonteCarloReport:
    """Run N seeded trials and aggregate outcomes.

    ``workers > 1`` spreads trials over a process pool; results are
    identical for any worker count.
    """
    model = ModelKind(model)
    family = Family(family)
    if family not in _ALLOWED[model]:
        raise ValueError(f"model {model.value} cannot run on family {family.value}")
    if N < 1:
        raise ValueError("N must be positive")
    if n < 3:
        raise ValueError("n must be at least 3")
    opts = opts or IntegratorOptions(record=False)
    tasks = [(model, family, n, master_seed, i, opts) for i in range(N)]
    t0 = time.perf_counter()
    if workers <= 1:
        trials = [_run_trial(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            trials = list(ex.map(_run_trial, tasks, chunksize=max(1, N // (4 * workers))))
    runtime = time.perf_counter() - t0

    counts = Counter(t.kind.value for t in trials)
    full = {k.value: counts.get(k.value, 0) for k in OutcomeKind}
    bal = [t for t in trials if t.kind is OutcomeKind.BALANCED]
    return MonteCarloReport(
        model=model, family=family, n=n, N=N, master_seed=int(master_seed),
        counts=full,
        p_hat=len(bal) / N,
        p_components=full[OutcomeKind.BALANCED_COMPONENTS.value] / N,
        eta_conf=eta_conf,
        epsilon=chernoff_epsilon(N, eta_conf),
        one_positive_balanced=sum(1 for t in bal if t.one_positive),
        options=opts.to_dict(),
        trials=trials,
        runtime=runtime,
    )


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
               else (os.cpu_count() or 1))
