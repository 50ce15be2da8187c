# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernel; mirrors ``_integrate_py`` step for step."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, isfinite
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()

cdef enum:
    PURE = 0
    KULAKOWSKI = 1
    PROJ_PURE = 2
    PROJ_KULAKOWSKI = 3
    ETA_Z = 4

cdef enum:
    CONVERGED = 0
    BLOWUP = 1
    BUDGET = 2
    FAILURE = 3

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40

cdef double SAFE = 0.9
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 10.0


cdef void rhs(int model, const double* y, double* f, int n) noexcept nogil:
    cdef int i, j, k, off = 0
    cdef double s, d = 0.0, eta = 0.0
    cdef const double* x = y
    cdef double* g = f
    if model == ETA_Z:
        eta = y[0]
        x = y + 1
        g = f + 1
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += x[i * n + k] * x[k * n + j]
            g[i * n + j] = s
    if model == PURE:
        for i in range(n):
            g[i * n + i] = 0.0
    elif model == KULAKOWSKI:
        pass
    else:
        for i in range(n * n):
            d -= g[i] * x[i]
        if model != PROJ_KULAKOWSKI:
            for i in range(n):
                g[i * n + i] = 0.0
        for i in range(n * n):
            g[i] += d * x[i]
        if model == ETA_Z:
            for i in range(n * n):
                g[i] *= eta
            f[0] = -d * eta * eta


cdef double dot(const double* a, const double* b, int m) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(m):
        s += a[i] * b[i]
    return s


cdef double wrms_pair(const double* v, const double* y, const double* ynew, int m,
                      double rtol, double atol) noexcept nogil:
    cdef double s = 0.0, sc, a, b, r
    cdef int i
    for i in range(m):
        a = fabs(y[i])
        b = fabs(ynew[i])
        sc = atol + rtol * (a if a > b else b)
        r = v[i] / sc
        s += r * r
    return sqrt(s / m)


cdef void pattern(int model, const double* y, signed char* p, int n, double zero_tol) noexcept nogil:
    cdef const double* x = y + 1 if model == ETA_Z else y
    cdef int i
    cdef double v
    for i in range(n * n):
        v = x[i]
        if fabs(v) <= zero_tol:
            p[i] = 0
        elif v > 0:
            p[i] = 1
        else:
            p[i] = -1
    for i in range(n):
        p[i * n + i] = 0


cdef double initial_step(int model, const double* y, const double* f, double* tmp,
                         double* f1, int n, int m, double rtol, double atol) noexcept nogil:
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0, sc, h0, h1, dm, r
    cdef int i
    for i in range(m):
        sc = atol + rtol * fabs(y[i])
        r = y[i] / sc
        d0 += r * r
        r = f[i] / sc
        d1 += r * r
    d0 = sqrt(d0 / m)
    d1 = sqrt(d1 / m)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(m):
        tmp[i] = y[i] + h0 * f[i]
    rhs(model, tmp, f1, n)
    for i in range(m):
        sc = atol + rtol * fabs(y[i])
        r = (f1[i] - f[i]) / sc
        d2 += r * r
    d2 = sqrt(d2 / m) / h0
    dm = d1 if d1 > d2 else d2
    if dm <= 1e-15:
        h1 = 1e-6 if 1e-6 > h0 * 1e-3 else h0 * 1e-3
    else:
        h1 = pow(0.01 / dm, 0.2)
    return 100.0 * h0 if 100.0 * h0 < h1 else h1


def run_kernel(int model, y0, int n, double rtol, double atol, double t_end,
               double blowup_norm, double grad_tol, double sign_window,
               double sign_frac, double zero_tol, double sample_stride,
               bint record, long max_steps, double h_min, double h_max):
    """Integrate from t=0 until an event fires (see ``_integrate_py.run_kernel``)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_arr = np.array(y0, dtype=np.float64).ravel()
    cdef int m = y_arr.shape[0]
    cdef bint projected = model == PROJ_PURE or model == PROJ_KULAKOWSKI
    cdef bint unbounded = model == PURE or model == KULAKOWSKI or model == ETA_Z
    cdef int zoff = 1 if model == ETA_Z else 0
    cdef int nn = n * n

    cdef double* buf = <double*> malloc(11 * m * sizeof(double))
    cdef signed char* pat = <signed char*> malloc(nn * sizeof(signed char))
    cdef signed char* newpat = <signed char*> malloc(nn * sizeof(signed char))
    if buf == NULL or pat == NULL or newpat == NULL:
        free(buf); free(pat); free(newpat)
        raise MemoryError()
    cdef double* y = buf
    cdef double* f = buf + m
    cdef double* k2 = buf + 2 * m
    cdef double* k3 = buf + 3 * m
    cdef double* k4 = buf + 4 * m
    cdef double* k5 = buf + 5 * m
    cdef double* k6 = buf + 6 * m
    cdef double* k7 = buf + 7 * m
    cdef double* ynew = buf + 8 * m
    cdef double* tmp = buf + 9 * m
    cdef double* errv = buf + 10 * m

    cdef double t = 0.0, h, hnew, err, fac, fac11, facold = 1e-4, nrm, window
    cdef double sign_since = 0.0, sign_detect = 0.0, next_sample = sample_stride
    cdef bint sign_found = False, last_rejected = False, changed, finite, clipped
    cdef int status = BUDGET, low_count = 0, i
    cdef long n_steps = 0, n_rejected = 0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] snap

    times = [0.0]
    samples = [y_arr.copy()]
    try:
        memcpy(y, &y_arr[0], m * sizeof(double))
        rhs(model, y, f, n)
        pattern(model, y, pat, n, zero_tol)
        if sqrt(dot(f, f, m)) < grad_tol:
            low_count = 1
        h = initial_step(model, y, f, tmp, k2, n, m, rtol, atol)

        while True:
            if t >= t_end:
                status = BUDGET
                break
            if n_steps >= max_steps:
                status = BUDGET
                break
            if h < h_min * (fabs(t) if fabs(t) > 1.0 else 1.0):
                status = BLOWUP if unbounded else FAILURE
                break
            if h > h_max:
                h = h_max
            clipped = t + h >= t_end
            if clipped:
                h = t_end - t

            with nogil:
                for i in range(m):
                    tmp[i] = y[i] + h * (A21 * f[i])
                rhs(model, tmp, k2, n)
                for i in range(m):
                    tmp[i] = y[i] + h * (A31 * f[i] + A32 * k2[i])
                rhs(model, tmp, k3, n)
                for i in range(m):
                    tmp[i] = y[i] + h * (A41 * f[i] + A42 * k2[i] + A43 * k3[i])
                rhs(model, tmp, k4, n)
                for i in range(m):
                    tmp[i] = y[i] + h * (A51 * f[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                rhs(model, tmp, k5, n)
                for i in range(m):
                    tmp[i] = y[i] + h * (A61 * f[i] + A62 * k2[i] + A63 * k3[i]
                                         + A64 * k4[i] + A65 * k5[i])
                rhs(model, tmp, k6, n)
                for i in range(m):
                    ynew[i] = y[i] + h * (A71 * f[i] + A73 * k3[i] + A74 * k4[i]
                                          + A75 * k5[i] + A76 * k6[i])
                rhs(model, ynew, k7, n)
                finite = True
                for i in range(m):
                    errv[i] = h * (E1 * f[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                                   + E6 * k6[i] + E7 * k7[i])
                    if not (isfinite(ynew[i]) and isfinite(errv[i])):
                        finite = False
                if finite:
                    err = wrms_pair(errv, y, ynew, m, rtol, atol)
                else:
                    err = 1e300

            if err > 1.0:
                n_rejected += 1
                if finite:
                    fac11 = pow(err, EXPO1)
                    fac = fac11 / SAFE
                    if fac > 1.0 / FAC_MIN:
                        fac = 1.0 / FAC_MIN
                    h = h / fac
                else:
                    h = h * FAC_MIN
                last_rejected = True
                continue

            fac11 = pow(err, EXPO1)
            fac = fac11 / pow(facold, BETA) / SAFE
            if fac > 1.0 / FAC_MIN:
                fac = 1.0 / FAC_MIN
            if fac < 1.0 / FAC_MAX:
                fac = 1.0 / FAC_MAX
            hnew = h / fac
            if last_rejected and hnew > h:
                hnew = h
            facold = err if err > 1e-4 else 1e-4
            last_rejected = False

            t = t_end if clipped else t + h
            n_steps += 1
            memcpy(y, ynew, m * sizeof(double))
            if projected or model == ETA_Z:
                nrm = sqrt(dot(y + zoff, y + zoff, nn))
                for i in range(nn):
                    y[zoff + i] /= nrm
                rhs(model, y, f, n)
            else:
                memcpy(f, k7, m * sizeof(double))
            h = hnew

            if record and t >= next_sample:
                snap = np.empty(m, dtype=np.float64)
                memcpy(&snap[0], y, m * sizeof(double))
                times.append(t)
                samples.append(snap)
                next_sample = t + sample_stride

            if unbounded:
                nrm = y[0] if model == ETA_Z else sqrt(dot(y, y, m))
                if nrm > blowup_norm:
                    status = BLOWUP
                    break

            pattern(model, y, newpat, n, zero_tol)
            changed = False
            for i in range(nn):
                if newpat[i] != pat[i]:
                    changed = True
                    break
            if changed:
                memcpy(pat, newpat, nn * sizeof(signed char))
                sign_since = t
                sign_found = False
            elif not sign_found:
                window = sign_window if projected else sign_frac * t
                if t - sign_since >= window:
                    sign_found = True
                    sign_detect = t

            if sqrt(dot(f, f, m)) < grad_tol:
                low_count += 1
                if low_count >= 2:
                    status = CONVERGED
                    break
            else:
                low_count = 0

        y_out = np.empty(m, dtype=np.float64)
        snap = y_out
        memcpy(&snap[0], y, m * sizeof(double))
        pat_out = np.empty(nn, dtype=np.int8)
        for i in range(nn):
            pat_out[i] = pat[i]
    finally:
        free(buf)
        free(pat)
        free(newpat)

    if times[len(times) - 1] != t:
        times.append(t)
        samples.append(y_out.copy())
    return (status, t, y_out, np.asarray(times), np.asarray(samples), sign_found,
            sign_since, sign_detect, pat_out, n_steps, n_rejected)
