"""Compiled adaptive Dormand-Prince 8(5,3) integrator for the two TRP systems.

The step controller and error norm follow scipy's DOP853 (the tableau is
taken from scipy so the coefficients are not retyped here).  The right-hand
sides are selected with an integer ``kind`` rather than passed as callables,
which keeps the kernel cacheable:

    EIGENBASIS  y = [Re S, Im S, Re I, Im I] * m  +  [Phi]
                Phi is the accumulated effective-detuning phase int(delta).
    DIRECT      y = [Re c0, Im c0, Re c1, Im c1] * m   (computational basis)

Both layouts store each normalised state in four consecutive reals, which is
what the norm-drift monitor relies on.
"""

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

EIGENBASIS = 0
DIRECT = 1

OK = 0
STEP_UNDERFLOW = 1
STEP_BUDGET = 2

_NS = _dop.N_STAGES
_A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_NS])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXP = -1.0 / 8.0


@njit(cache=True, nogil=True)
def _rhs(kind, t, y, lam, eta, n, out):
    if kind == EIGENBASIS:
        r2 = 1.0 + t * t
        r = np.sqrt(r2)
        rate = 2.0 * (eta / lam) * t ** (n - 1)
        g = complex(-0.5 / r2, -0.5 * rate / r)
        ph = y[y.size - 1]
        e = complex(np.cos(ph), np.sin(ph))
        ge = g * e
        m = (y.size - 1) // 4
        for p in range(m):
            k = 4 * p
            s = complex(y[k], y[k + 1])
            i = complex(y[k + 2], y[k + 3])
            ds = -(ge.conjugate()) * i
            di = ge * s
            out[k] = ds.real
            out[k + 1] = ds.imag
            out[k + 2] = di.real
            out[k + 3] = di.imag
        out[y.size - 1] = 2.0 * r / lam - rate * t / r
    else:
        phi = (2.0 / n) * (eta / lam) * t**n
        eph = complex(np.cos(phi), np.sin(phi))
        m = y.size // 4
        for p in range(m):
            k = 4 * p
            c0 = complex(y[k], y[k + 1])
            c1 = complex(y[k + 2], y[k + 3])
            # -i H psi with H = (1/lam) [[t, e^{-i phi}], [e^{i phi}, -t]]
            h0 = (t * c0 + eph.conjugate() * c1) / lam
            h1 = (eph * c0 - t * c1) / lam
            out[k] = h0.imag
            out[k + 1] = -h0.real
            out[k + 2] = h1.imag
            out[k + 3] = -h1.real


@njit(cache=True, nogil=True)
def _rms(x):
    return np.sqrt(np.sum(x * x) / x.size)


@njit(cache=True, nogil=True)
def _norm_drift(y):
    m = y.size // 4
    worst = 0.0
    for p in range(m):
        k = 4 * p
        v = y[k] ** 2 + y[k + 1] ** 2 + y[k + 2] ** 2 + y[k + 3] ** 2
        d = abs(v - 1.0)
        if d > worst:
            worst = d
    return worst


@njit(cache=True, nogil=True)
def _initial_step(kind, t0, y0, f0, lam, eta, n, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = np.empty_like(y0)
    _rhs(kind, t0 + h0, y1, lam, eta, n, f1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1)


@njit(cache=True, nogil=True)
def integrate(kind, lam, eta, n, breakpoints, y0, rtol, atol, h_max, max_steps, record,
              A, B, C, E3, E5):
    """Integrate from breakpoints[0] to breakpoints[-1], landing on every breakpoint.

    Returns (y, status, accepted, rejected, nfev, max_drift, rec_t, rec_y).
    """
    dim = y0.size
    ns = B.size
    y = y0.copy()
    t = breakpoints[0]
    K = np.empty((ns + 1, dim))
    f = np.empty(dim)
    _rhs(kind, t, y, lam, eta, n, f)
    nfev = 1
    accepted = 0
    rejected = 0
    max_drift = _norm_drift(y[: 4 * (dim // 4)])
    status = OK

    cap = 256 if record else 1
    rec_t = np.empty(cap)
    rec_y = np.empty((cap, dim))
    nrec = 0
    if record:
        rec_t[0] = t
        rec_y[0] = y
        nrec = 1

    if breakpoints[breakpoints.size - 1] == t:
        return y, status, accepted, rejected, nfev, max_drift, rec_t[:nrec], rec_y[:nrec]

    h_abs = _initial_step(kind, t, y, f, lam, eta, n, rtol, atol)
    nfev += 1
    y_new = np.empty(dim)
    ytmp = np.empty(dim)

    for seg in range(1, breakpoints.size):
        t_bound = breakpoints[seg]
        while t < t_bound:
            if accepted + rejected >= max_steps:
                status = STEP_BUDGET
                return y, status, accepted, rejected, nfev, max_drift, rec_t[:nrec], rec_y[:nrec]
            min_step = 10.0 * abs(np.nextafter(t, np.inf) - t)
            if h_max > 0.0 and h_abs > h_max:
                h_abs = h_max
            elif h_abs < min_step:
                h_abs = min_step
            step_rejected = False
            while True:
                if h_abs < min_step:
                    status = STEP_UNDERFLOW
                    return y, status, accepted, rejected, nfev, max_drift, rec_t[:nrec], rec_y[:nrec]
                t_new = t + h_abs
                if t_new > t_bound:
                    t_new = t_bound
                h = t_new - t
                h_abs = abs(h)

                K[0] = f
                for s in range(1, ns):
                    for j in range(dim):
                        acc = 0.0
                        for q in range(s):
                            acc += K[q, j] * A[s, q]
                        ytmp[j] = y[j] + h * acc
                    _rhs(kind, t + C[s] * h, ytmp, lam, eta, n, K[s])
                for j in range(dim):
                    acc = 0.0
                    for q in range(ns):
                        acc += K[q, j] * B[q]
                    y_new[j] = y[j] + h * acc
                _rhs(kind, t + h, y_new, lam, eta, n, K[ns])
                nfev += ns

                e5sq = 0.0
                e3sq = 0.0
                for j in range(dim):
                    sc = atol + max(abs(y[j]), abs(y_new[j])) * rtol
                    a5 = 0.0
                    a3 = 0.0
                    for q in range(ns + 1):
                        a5 += K[q, j] * E5[q]
                        a3 += K[q, j] * E3[q]
                    e5sq += (a5 / sc) ** 2
                    e3sq += (a3 / sc) ** 2
                if e5sq == 0.0 and e3sq == 0.0:
                    err = 0.0
                else:
                    err = h_abs * e5sq / np.sqrt((e5sq + 0.01 * e3sq) * dim)

                if err < 1.0:
                    if err == 0.0:
                        factor = _MAX_FACTOR
                    else:
                        factor = min(_MAX_FACTOR, _SAFETY * err**_ERR_EXP)
                    if step_rejected:
                        factor = min(1.0, factor)
                    h_abs *= factor
                    break
                h_abs *= max(_MIN_FACTOR, _SAFETY * err**_ERR_EXP)
                step_rejected = True
                rejected += 1

            t = t_new
            y[:] = y_new
            f[:] = K[ns]
            accepted += 1
            d = _norm_drift(y[: 4 * (dim // 4)])
            if d > max_drift:
                max_drift = d
            if record:
                if nrec == rec_t.size:
                    grown_t = np.empty(2 * nrec)
                    grown_y = np.empty((2 * nrec, dim))
                    grown_t[:nrec] = rec_t
                    grown_y[:nrec] = rec_y
                    rec_t = grown_t
                    rec_y = grown_y
                rec_t[nrec] = t
                rec_y[nrec] = y
                nrec += 1
        t = t_bound

    return y, status, accepted, rejected, nfev, max_drift, rec_t[:nrec], rec_y[:nrec]


def run(kind, lam, eta, n, breakpoints, y0, rtol, atol, h_max=0.0, max_steps=2_000_000,
        record=False):
    """Python-facing wrapper that supplies the tableau."""
    return integrate(
        kind, float(lam), float(eta), int(n),
        np.ascontiguousarray(breakpoints, dtype=np.float64),
        np.ascontiguousarray(y0, dtype=np.float64),
        float(rtol), float(atol), float(h_max), int(max_steps), bool(record),
        _A, _B, _C, _E3, _E5,
    )
