"""Model right-hand sides, the adaptive integrator and trajectory records.

Five models are supported:

=====================  ==========================================
``pure``               dX/dt = X^2 - diag(X^2)
``kulakowski``         dX/dt = X^2
``projected-pure``     dZ/dt = Z^2 - diag(Z^2) + D(Z) Z
``projected-kulakowski``  dZ/dt = Z^2 + D(Z) Z
``eta-z``              deta/dt = -D(Z) eta^2,
                       dZ/dt = eta (Z^2 - diag(Z^2) + D(Z) Z)
=====================  ==========================================

In the projected models ``D(Z) = -trace(Z^T Z^2)``, which reduces to
``-trace(Z^3)`` on symmetric states and keeps the field tangent to the
sphere for asymmetric ones.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import _integrate_py as _codes
from ._kernel import get_kernel
from .core import (
    ZERO_TOL,
    AppraisalMatrix,
    EtaZState,
    SignPattern,
    SphereAppraisal,
    as_matrix,
    max_asymmetry,
    normalize_to_sphere,
)
from .dissonance import dissonance, dissonance_asym

EIGEN_ZERO_BAND = 1e-7
SYMMETRIC_RUN_TOL = 1e-8


class ModelKind(str, Enum):
    PURE = "pure"
    KULAKOWSKI = "kulakowski"
    PROJECTED_PURE = "projected-pure"
    PROJECTED_KULAKOWSKI = "projected-kulakowski"
    ETA_Z = "eta-z"

    @property
    def projected(self) -> bool:
        return self in (ModelKind.PROJECTED_PURE, ModelKind.PROJECTED_KULAKOWSKI)

    @property
    def zero_diagonal(self) -> bool:
        return self not in (ModelKind.KULAKOWSKI, ModelKind.PROJECTED_KULAKOWSKI)


_MODEL_CODE = {
    ModelKind.PURE: _codes.PURE,
    ModelKind.KULAKOWSKI: _codes.KULAKOWSKI,
    ModelKind.PROJECTED_PURE: _codes.PROJ_PURE,
    ModelKind.PROJECTED_KULAKOWSKI: _codes.PROJ_KULAKOWSKI,
    ModelKind.ETA_Z: _codes.ETA_Z,
}


@dataclass(frozen=True)
class IntegratorOptions:
    """Step control, budget and event-detection settings.

    Attributes
    ----------
    rel_tol, abs_tol : float
        Error tolerances of the Dormand-Prince 5(4) controller.
    max_time : float
        Integration budget; reaching it yields ``BudgetExhausted``.
    blowup_norm : float
        ``BlowUp`` fires once ``||X||_F`` (or eta) exceeds this.
    grad_tol : float
        ``ConvergedToEquilibrium`` fires once ``||rhs||_F < grad_tol`` at two
        consecutive accepted steps.
    sign_window : float
        Hold time for sign stabilization on projected runs.
    sign_window_frac : float
        Hold time on unprojected runs, as a fraction of elapsed time.
    sample_stride : float
        Minimum time between recorded samples; 0 records every step.
    zero_tol : float
        Entries with ``|x| <= zero_tol`` count as sign 0.
    max_step : float
        Upper bound on the step size.
    max_steps : int
        Hard cap on accepted steps.
    record : bool
        If false only the initial and final states are kept.
    backend : str
        ``"auto"``, ``"cython"`` or ``"python"``.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_time: float = 1e4
    blowup_norm: float = 1e9
    grad_tol: float = 1e-10
    sign_window: float = 1.0
    sign_window_frac: float = 0.1
    sample_stride: float = 0.0
    zero_tol: float = ZERO_TOL
    max_step: float = 1.0
    max_steps: int = 10_000_000
    record: bool = True
    backend: str = "auto"

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_time", "blowup_norm", "grad_tol",
                     "sign_window", "sign_window_frac", "zero_tol", "max_step"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not (self.sample_stride >= 0 and math.isfinite(self.sample_stride)):
            raise ValueError("sample_stride must be nonnegative")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.backend not in ("auto", "cython", "python"):
            raise ValueError(f"unknown backend {self.backend!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# -- events -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConvergedToEquilibrium:
    time: float
    state: np.ndarray
    name = "ConvergedToEquilibrium"

    def payload(self) -> dict:
        return {"state": np.asarray(self.state).tolist()}


@dataclass(frozen=True)
class BlowUp:
    time: float  # last accepted time, an estimate of the escape time
    name = "BlowUp"

    def payload(self) -> dict:
        return {"t_escape": self.time}


@dataclass(frozen=True)
class SignStabilized:
    time: float   # detection time
    since: float  # time the pattern was first seen
    pattern: SignPattern
    name = "SignStabilized"

    def payload(self) -> dict:
        return {"since": self.since, "pattern": self.pattern.tolist()}


@dataclass(frozen=True)
class BudgetExhausted:
    time: float
    name = "BudgetExhausted"

    def payload(self) -> dict:
        return {}


@dataclass(frozen=True, eq=False)
class IntegrationFailure:
    time: float
    state: np.ndarray
    reason: str
    name = "IntegrationFailure"

    def payload(self) -> dict:
        return {"reason": self.reason, "state": np.asarray(self.state).tolist()}


Event = Union[ConvergedToEquilibrium, BlowUp, SignStabilized, BudgetExhausted,
              IntegrationFailure]
TERMINAL_EVENTS = (ConvergedToEquilibrium, BlowUp, BudgetExhausted, IntegrationFailure)


def event_to_dict(ev) -> dict:
    return {"event": ev.name, "time": float(ev.time), "payload": ev.payload()}


@dataclass(eq=False)
class Trajectory:
    """Sampled solution plus the events raised while integrating.

    ``states`` holds X (or Z for projected and eta-z runs) with shape
    ``(samples, n, n)``; ``etas`` is set for eta-z runs only.
    ``neg_eigen_counts`` entries are ``None`` where the sampled state is not
    symmetric to within 1e-8.
    """

    model: ModelKind
    times: np.ndarray
    states: np.ndarray
    dissonance_series: np.ndarray
    neg_eigen_counts: list
    events: list
    etas: Optional[np.ndarray] = None
    n_steps: int = 0
    n_rejected: int = 0
    options: IntegratorOptions = field(default_factory=IntegratorOptions)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def terminal(self):
        for ev in self.events:
            if isinstance(ev, TERMINAL_EVENTS):
                return ev
        raise RuntimeError("trajectory has no terminal event")

    @property
    def sign_event(self) -> Optional[SignStabilized]:
        for ev in self.events:
            if isinstance(ev, SignStabilized):
                return ev
        return None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def event_dicts(self) -> list:
        return [event_to_dict(ev) for ev in self.events]


# -- right-hand sides -------------------------------------------------------

def _check_unit(a: np.ndarray) -> None:
    nrm = float(np.linalg.norm(a))
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"projected models need a unit-norm state, norm is {nrm!r}")


def rhs(model, state):
    """Vector field of ``model`` at ``state``.

    For ``eta-z`` the state is an :class:`EtaZState` or ``(eta, z)`` pair and
    the result is ``(deta, dz)``; for the others it is a matrix.
    """
    model = ModelKind(model)
    if model is ModelKind.ETA_Z:
        eta, z = _split_etaz(state)
        g = z @ z
        d = dissonance_asym(z)
        np.fill_diagonal(g, 0.0)
        return -d * eta * eta, eta * (g + d * z)
    x = as_matrix(state)
    if model.zero_diagonal:
        x = AppraisalMatrix(x).entries
    if model.projected:
        _check_unit(x)
    g = x @ x
    if model is ModelKind.PURE:
        np.fill_diagonal(g, 0.0)
    elif model is ModelKind.PROJECTED_PURE:
        d = dissonance_asym(x)
        np.fill_diagonal(g, 0.0)
        g += d * x
    elif model is ModelKind.PROJECTED_KULAKOWSKI:
        g += dissonance_asym(x) * x
    return g


def _split_etaz(state) -> tuple[float, np.ndarray]:
    if isinstance(state, EtaZState):
        return float(state.eta), state.z.entries
    if isinstance(state, tuple) and len(state) == 2:
        st = EtaZState(float(state[0]), state[1])
        return float(st.eta), st.z.entries
    eta, z = normalize_to_sphere(state)
    return eta, z.entries


def _initial_vector(model: ModelKind, state) -> tuple[int, np.ndarray]:
    if model is ModelKind.ETA_Z:
        eta, z = _split_etaz(state)
        return z.shape[0], np.concatenate([[eta], z.ravel()])
    x = as_matrix(state)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state has non-finite entries")
    if model.zero_diagonal:
        x = AppraisalMatrix(x).entries
    if model.projected:
        nrm = float(np.linalg.norm(x))
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"projected models need a unit-norm initial state, norm is {nrm!r}")
        x = x / nrm
    return x.shape[0], np.array(x, dtype=float).ravel()


def _neg_count(a: np.ndarray) -> Optional[int]:
    if max_asymmetry(a) >= SYMMETRIC_RUN_TOL:
        return None
    lam = np.linalg.eigvalsh(0.5 * (a + a.T))
    return int(np.sum(lam < -EIGEN_ZERO_BAND))


def integrate(model, state, opts: Optional[IntegratorOptions] = None) -> Trajectory:
    """Integrate ``model`` forward from ``state`` until a terminal event.

    Exactly one terminal event is produced: ``ConvergedToEquilibrium``,
    ``BlowUp``, ``BudgetExhausted`` or ``IntegrationFailure``. A
    ``SignStabilized`` event precedes it when the sign pattern held for the
    configured window and did not change afterwards.
    """
    model = ModelKind(model)
    opts = opts or IntegratorOptions()
    n, y0 = _initial_vector(model, state)
    kernel = get_kernel(opts.backend)
    (status, t, y, times, samples, sign_found, sign_since, sign_detect, pat,
     n_steps, n_rejected) = kernel(
        _MODEL_CODE[model], y0, n, opts.rel_tol, opts.abs_tol, opts.max_time,
        opts.blowup_norm, opts.grad_tol, opts.sign_window, opts.sign_window_frac,
        opts.zero_tol, opts.sample_stride, opts.record, opts.max_steps, 1e-14,
        opts.max_step)

    samples = np.asarray(samples, dtype=float)
    etas = None
    if model is ModelKind.ETA_Z:
        etas = samples[:, 0].copy()
        states = samples[:, 1:].reshape(-1, n, n)
        final = np.asarray(y[1:]).reshape(n, n)
    else:
        states = samples.reshape(-1, n, n)
        final = np.asarray(y).reshape(n, n)

    if model.zero_diagonal:
        dis = np.array([dissonance(s) for s in states])
    else:
        dis = np.array([dissonance_asym(s) for s in states])
    neg = [_neg_count(s) for s in states]

    events: list = []
    if sign_found:
        signs = np.asarray(pat, dtype=np.int8).reshape(n, n)
        events.append(SignStabilized(float(sign_detect), float(sign_since), SignPattern(signs)))
    t = float(t)
    if status == _codes.CONVERGED:
        events.append(ConvergedToEquilibrium(t, final.copy()))
    elif status == _codes.BLOWUP:
        events.append(BlowUp(t))
    elif status == _codes.FAILURE:
        events.append(IntegrationFailure(t, final.copy(), "step size underflow"))
    else:
        events.append(BudgetExhausted(t))

    return Trajectory(model=model, times=np.asarray(times, dtype=float), states=states,
                      dissonance_series=dis, neg_eigen_counts=neg, events=events,
                      etas=etas, n_steps=int(n_steps), n_rejected=int(n_rejected),
                      options=opts)


# -- closed forms and cross-checks ------------------------------------------

def escape_time(eta0: float, d_star: float) -> float:
    """Finite escape time ``1/(eta0 |D*|)`` when ``D* < 0``, else ``inf``."""
    if d_star < 0:
        return 1.0 / (eta0 * -d_star)
    return math.inf


def eta_closed_form(eta0: float, d_star: float, t: float) -> float:
    """Scale along a fixed direction Z*: ``eta0 / (1 + t eta0 D*)``."""
    if not eta0 > 0:
        raise ValueError("eta0 must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t >= escape_time(eta0, d_star):
        raise ValueError(f"t = {t} is at or beyond the escape time {escape_time(eta0, d_star)}")
    return eta0 / (1.0 + t * eta0 * d_star)


def _hermite(t0, t1, y0, y1, f0, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def check_time_reparam(x_traj: Trajectory, z_traj: Trajectory,
                       ic_tol: float = 1e-9) -> float:
    """Max deviation between the direction of a pure-influence run and a
    projected run evaluated at the reparametrized time.

    With ``W(t) = X(t)/||X(t)||_F`` and ``tau(t) = int_0^t ||X(s)||_F ds``
    (trapezoidal rule over the samples of ``x_traj``) this returns
    ``max_t ||W(t) - Z(tau(t))||_F`` over the samples of ``x_traj`` whose
    ``tau`` falls inside the span of ``z_traj``. ``Z`` is evaluated between
    its samples by cubic Hermite interpolation.

    ``z_traj`` may also be an ``eta-z`` run started from the same X(0); its Z
    lives on the original clock, so it is compared at ``tau = t``.
    """
    if x_traj.model is not ModelKind.PURE:
        raise ValueError("x_traj must be a pure-influence trajectory")
    if z_traj.model not in (ModelKind.PROJECTED_PURE, ModelKind.ETA_Z):
        raise ValueError("z_traj must be a projected-pure or eta-z trajectory")
    x0 = x_traj.states[0]
    _, w0 = normalize_to_sphere(x0)
    mismatch = float(np.linalg.norm(w0.entries - z_traj.states[0]))
    if mismatch > ic_tol:
        raise ValueError(f"initial conditions differ by {mismatch:.3e}")
    if z_traj.model is ModelKind.ETA_Z:
        eta0 = float(np.linalg.norm(x0))
        if abs(z_traj.etas[0] - eta0) > ic_tol * max(1.0, eta0):
            raise ValueError("initial eta does not match ||X(0)||_F")

    tx = x_traj.times
    norms = np.linalg.norm(x_traj.states.reshape(len(tx), -1), axis=1)
    if z_traj.model is ModelKind.ETA_Z:
        tau = tx.copy()
    else:
        # trapezoid with the Euler-Maclaurin end correction h^2/12 (eta'_0 - eta'_1),
        # eta' = <X, dX/dt> / ||X||
        deta = np.array([float(np.vdot(s, rhs(ModelKind.PURE, s))) / nm
                         for s, nm in zip(x_traj.states, norms)])
        h = np.diff(tx)
        steps = 0.5 * h * (norms[1:] + norms[:-1]) + h * h / 12.0 * (deta[:-1] - deta[1:])
        tau = np.concatenate([[0.0], np.cumsum(steps)])

    tz = z_traj.times
    zs = z_traj.states
    if z_traj.model is ModelKind.ETA_Z:
        fz = [rhs(ModelKind.ETA_Z, (e, s))[1] for e, s in zip(z_traj.etas, zs)]
    else:
        fz = [rhs(ModelKind.PROJECTED_PURE, s / np.linalg.norm(s)) for s in zs]

    worst = 0.0
    for i, ti in enumerate(tau):
        if ti > tz[-1]:
            break
        j = int(np.searchsorted(tz, ti, side="right")) - 1
        if j >= len(tz) - 1:
            zi = zs[-1]
        else:
            zi = _hermite(tz[j], tz[j + 1], zs[j], zs[j + 1], fz[j], fz[j + 1], ti)
        wi = x_traj.states[i] / norms[i]
        worst = max(worst, float(np.linalg.norm(wi - zi)))
    return worst


# -- export -----------------------------------------------------------------

def trajectory_rows(traj: Trajectory) -> tuple[list[str], list[list]]:
    n = traj.n
    header = ["t"] + [f"z_{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
    if traj.etas is not None:
        header.append("eta")
    header += ["dissonance", "neg_eigen_count"]
    rows = []
    for k, t in enumerate(traj.times):
        row = [repr(float(t))] + [repr(float(v)) for v in traj.states[k].ravel()]
        if traj.etas is not None:
            row.append(repr(float(traj.etas[k])))
        cnt = traj.neg_eigen_counts[k]
        row += [repr(float(traj.dissonance_series[k])), "" if cnt is None else str(cnt)]
        rows.append(row)
    return header, rows


def write_trajectory(traj: Trajectory, path, fmt: str = "csv",
                     metadata: Optional[dict] = None) -> Path:
    """Write samples to ``path`` and the events to a JSON sidecar.

    The sidecar is ``<stem>.events.json`` next to ``path``; it holds
    ``{"metadata": ..., "events": [{"event", "time", "payload"}, ...]}``.
    Returns the sidecar path.
    """
    path = Path(path)
    meta = {"model": traj.model.value, "n": traj.n, "n_steps": traj.n_steps,
            "n_rejected": traj.n_rejected, "options": traj.options.to_dict()}
    meta.update(metadata or {})
    header, rows = trajectory_rows(traj)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    elif fmt == "json":
        cols = {h: [] for h in header}
        for row in rows:
            for h, v in zip(header, row):
                cols[h].append(None if v == "" else float(v))
        path.write_text(json.dumps({"metadata": meta, "columns": cols}) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    sidecar = path.with_name(path.stem + ".events.json")
    sidecar.write_text(json.dumps({"metadata": meta, "events": traj.event_dicts()},
                                  indent=2) + "\n")
    return sidecar
