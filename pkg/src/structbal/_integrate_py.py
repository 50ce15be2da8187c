"""Reference numpy implementation of the integration kernel.

Dormand-Prince 5(4) with a PI step controller, FSAL, per-step sphere
renormalization for projected models, blow-up / equilibrium / sign-pattern
event tracking. ``_integrate_c`` implements the same algorithm in Cython;
both expose ``run_kernel`` with an identical signature and return tuple.
"""

import math

import numpy as np

PURE, KULAKOWSKI, PROJ_PURE, PROJ_KULAKOWSKI, ETA_Z = range(5)

CONVERGED, BLOWUP, BUDGET, FAILURE = range(4)

# Dormand-Prince coefficients
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

SAFE = 0.9
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75
FAC_MIN = 0.2   # hnew >= h * FAC_MIN
FAC_MAX = 10.0  # hnew <= h * FAC_MAX


def _rhs(model, y, n):
    if model == ETA_Z:
        eta = y[0]
        z = y[1:].reshape(n, n)
        g = z @ z
        d = -float(np.sum(g * z))
        np.fill_diagonal(g, 0.0)
        f = np.empty_like(y)
        f[0] = -d * eta * eta
        f[1:] = (eta * (g + d * z)).ravel()
        return f
    x = y.reshape(n, n)
    g = x @ x
    if model == PURE:
        np.fill_diagonal(g, 0.0)
    elif model == PROJ_PURE:
        d = -float(np.sum(g * x))
        np.fill_diagonal(g, 0.0)
        g += d * x
    elif model == PROJ_KULAKOWSKI:
        d = -float(np.sum(g * x))
        g += d * x
    return g.ravel()


def _renormalize(model, y):
    if model == PROJ_PURE or model == PROJ_KULAKOWSKI:
        y /= math.sqrt(float(np.dot(y, y)))
    elif model == ETA_Z:
        y[1:] /= math.sqrt(float(np.dot(y[1:], y[1:])))


def _pattern(model, y, n, zero_tol):
    x = y[1:] if model == ETA_Z else y
    s = np.sign(x).astype(np.int8)
    s[np.abs(x) <= zero_tol] = 0
    s[:: n + 1] = 0
    return s


def _scale(model, y, n):
    if model == ETA_Z:
        return y[0]
    return math.sqrt(float(np.dot(y, y)))


def _wrms(v, y, ynew, rtol, atol):
    sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
    return math.sqrt(float(np.mean((v / sc) ** 2)))


def _initial_step(model, y, f, n, rtol, atol):
    sc = atol + rtol * np.abs(y)
    d0 = math.sqrt(float(np.mean((y / sc) ** 2)))
    d1 = math.sqrt(float(np.mean((f / sc) ** 2)))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = y + h0 * f
    f1 = _rhs(model, y1, n)
    d2 = math.sqrt(float(np.mean(((f1 - f) / sc) ** 2))) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1)


def run_kernel(model, y0, n, rtol, atol, t_end, blowup_norm, grad_tol,
               sign_window, sign_frac, zero_tol, sample_stride, record,
               max_steps, h_min, h_max):
    """Integrate from t=0 until an event fires.

    Returns ``(status, t, y, times, samples, sign_found, sign_since,
    sign_detect, pattern, n_steps, n_rejected)``.
    """
    projected = model in (PROJ_PURE, PROJ_KULAKOWSKI)
    unbounded = model in (PURE, KULAKOWSKI, ETA_Z)

    y = np.array(y0, dtype=float)
    t = 0.0
    f = _rhs(model, y, n)
    times = [0.0]
    samples = [y.copy()]
    next_sample = sample_stride

    pat = _pattern(model, y, n, zero_tol)
    sign_since = 0.0
    sign_detect = 0.0
    sign_found = False

    low_count = 1 if math.sqrt(float(np.dot(f, f))) < grad_tol else 0
    status = BUDGET
    n_steps = 0
    n_rejected = 0
    facold = 1e-4
    h = _initial_step(model, y, f, n, rtol, atol)
    last_rejected = False

    while True:
        if t >= t_end:
            status = BUDGET
            break
        if n_steps >= max_steps:
            status = BUDGET
            break
        if h < h_min * max(1.0, abs(t)):
            status = BLOWUP if unbounded else FAILURE
            break
        if h > h_max:
            h = h_max
        clipped = t + h >= t_end
        if clipped:
            h = t_end - t

        k1 = f
        k2 = _rhs(model, y + h * (A21 * k1), n)
        k3 = _rhs(model, y + h * (A31 * k1 + A32 * k2), n)
        k4 = _rhs(model, y + h * (A41 * k1 + A42 * k2 + A43 * k3), n)
        k5 = _rhs(model, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), n)
        k6 = _rhs(model, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), n)
        ynew = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        k7 = _rhs(model, ynew, n)
        errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)

        if not np.all(np.isfinite(ynew)) or not np.all(np.isfinite(errv)):
            err = math.inf
        else:
            err = _wrms(errv, y, ynew, rtol, atol)

        if err > 1.0:
            n_rejected += 1
            if math.isfinite(err):
                fac11 = err ** EXPO1
                h = h / min(1.0 / FAC_MIN, fac11 / SAFE)
            else:
                h = h * FAC_MIN
            last_rejected = True
            continue

        # accepted
        fac11 = err ** EXPO1
        fac = fac11 / facold ** BETA
        fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFE))
        hnew = h / fac
        if last_rejected:
            hnew = min(hnew, h)
        facold = max(err, 1e-4)
        last_rejected = False

        t = t_end if clipped else t + h
        y = ynew
        n_steps += 1
        if projected or model == ETA_Z:
            _renormalize(model, y)
            f = _rhs(model, y, n)
        else:
            f = k7
        h = hnew

        if record and t >= next_sample:
            times.append(t)
            samples.append(y.copy())
            next_sample = t + sample_stride

        if unbounded and _scale(model, y, n) > blowup_norm:
            status = BLOWUP
            break

        newpat = _pattern(model, y, n, zero_tol)
        if not np.array_equal(newpat, pat):
            pat = newpat
            sign_since = t
            sign_found = False
        elif not sign_found:
            window = sign_window if projected else sign_frac * t
            if t - sign_since >= window:
                sign_found = True
                sign_detect = t

        if math.sqrt(float(np.dot(f, f))) < grad_tol:
            low_count += 1
            if low_count >= 2:
                status = CONVERGED
                break
        else:
            low_count = 0

    if not times or times[-1] != t:
        times.append(t)
        samples.append(y.copy())
    return (status, t, y, np.asarray(times), np.asarray(samples), sign_found,
            sign_since, sign_detect, pat, n_steps, n_rejected)
