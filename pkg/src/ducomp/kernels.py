"""Hot numeric kernels: numba-jitted fast path with a pure-numpy twin.

Every kernel exists in two variants with identical elementwise arithmetic,
so both backends produce bit-identical outputs for the same inputs. The
active backend is chosen once at import time from the ``DUCOMP_BACKEND``
environment variable:

    DUCOMP_BACKEND=auto    use numba when importable, else numpy (default)
    DUCOMP_BACKEND=numba   require numba, fail loudly if missing
    DUCOMP_BACKEND=numpy   force the pure-numpy fallback

Benchmarks comparing the two paths live in ``benchmarks/bench_backends.py``.
"""

import os

import numpy as np

from .errors import ConfigurationError

IDENTITY, Q1, Q2, Q3 = 0, 1, 2, 3

ITERATE_GUARD = 1e12  # divergence threshold on any iterate magnitude


def _resolve_backend():
    choice = os.environ.get("DUCOMP_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ConfigurationError(
            f"DUCOMP_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        if choice == "numba":
            raise ConfigurationError(
                "DUCOMP_BACKEND=numba but numba is not importable")
        return "numpy"


_BACKEND = _resolve_backend()


def active_backend():
    """Name of the kernel backend selected at import time."""
    return _BACKEND


# ---------------------------------------------------------------------------
# pure-numpy cores
# ---------------------------------------------------------------------------

def q1_core_np(v, delta, lo, hi, u):
    """Probabilistic rounding of ``v`` onto the grid of spacing 1/delta.

    Grid indices are saturated into [lo, hi] (pass +-inf to disable);
    ``u`` holds one uniform [0,1) draw per entry. Returns (quantized
    array, saturation count).
    """
    s = v * delta
    nsat = int(np.count_nonzero((s < lo) | (s > hi)))
    s = np.clip(s, lo, hi)
    f = np.floor(s)
    q = f + (u < (s - f))
    return q / delta, nsat


def q3_core_np(v, delta, lo, hi):
    """Deterministic truncation of ``v`` onto the grid of spacing 1/delta."""
    s = v * delta
    nsat = int(np.count_nonzero((s < lo) | (s > hi)))
    s = np.clip(s, lo, hi)
    return np.floor(s) / delta, nsat


def q2_core_np(v, c1, pw, u):
    """Norm-scaled dithered quantization of one message vector ``v``.

    ``c1`` is 2**(b-1), ``pw`` is 2**(1-b); ``u`` holds one uniform draw
    per entry. The zero vector maps to the zero vector.
    """
    nrm = np.abs(v).max()
    if nrm == 0.0:
        return np.zeros_like(v)
    lev = np.floor(c1 * np.abs(v) / nrm + u)
    return (nrm * pw) * (np.sign(v) * lev)


def _encode_np(x1, h, r, comp_id, delta, lo, hi, c1, pw, u):
    """Differential encode of stacked states (m, n): xhat = h + r*Q((x-h)/r)."""
    if comp_id == IDENTITY:
        return x1.copy(), 0
    v = (x1 - h) / r
    if comp_id == Q1:
        out, nsat = q1_core_np(v, delta, lo, hi, u)
    elif comp_id == Q3:
        out, nsat = q3_core_np(v, delta, lo, hi)
    else:  # Q2, one norm per agent row
        out = np.empty_like(v)
        for i in range(v.shape[0]):
            out[i] = q2_core_np(v[i], c1, pw, u[i])
        nsat = 0
    return h + r * out, nsat


def run_quadratic_np(W, A, AT, a, beta, x, y, z, h, xhat, R, U,
                     comp_id, delta, lo, hi, c1, pw,
                     gamma, tau, psi, alpha, X, Y, Z, SAT):
    """Pure-numpy twin of the fused solver loop (numba variant below)."""
    m, n = x.shape
    iters = R.shape[0]
    coef = psi / tau
    for k in range(iters):
        Az = np.empty((m, n))
        for i in range(m):
            Az[i] = A[i] @ z[i]
        x1 = x - psi * xhat + psi * (W @ xhat) + tau * (y - Az)
        u = U[k] if U.size else U.reshape(0, 0)
        xhat1, nsat = _encode_np(x1, h, R[k], comp_id, delta, lo, hi, c1, pw, u)
        y1 = y - coef * (xhat1 - W @ xhat1)
        h = (1.0 - alpha) * h + alpha * xhat1
        g = 2.0 * a.reshape(m, 1) * z + beta
        step = np.empty_like(z)
        v2 = 2.0 * x1 - x
        for i in range(m):
            step[i] = AT[i] @ v2[i]
        z1 = z - gamma * g + gamma * step
        X[k] = x1
        Y[k] = y1
        Z[k] = z1
        SAT[k] = nsat
        finite = (np.isfinite(x1).all() and np.isfinite(y1).all()
                  and np.isfinite(z1).all())
        if not finite or max(np.abs(x1).max(), np.abs(y1).max(),
                             np.abs(z1).max()) > ITERATE_GUARD:
            return k + 1
        x, y, z, xhat = x1, y1, z1, xhat1
    return iters


# ---------------------------------------------------------------------------
# numba twins (compiled lazily, only when the numba backend is active)
# ---------------------------------------------------------------------------

def _build_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def q1_core_nb(v, delta, lo, hi, u):
        out = np.empty_like(v)
        nsat = 0
        for j in range(v.shape[0]):
            s = v[j] * delta
            if s < lo:
                s = lo
                nsat += 1
            elif s > hi:
                s = hi
                nsat += 1
            f = np.floor(s)
            take = 1.0 if u[j] < (s - f) else 0.0
            out[j] = (f + take) / delta
        return out, nsat

    @njit(cache=True)
    def q3_core_nb(v, delta, lo, hi):
        out = np.empty_like(v)
        nsat = 0
        for j in range(v.shape[0]):
            s = v[j] * delta
            if s < lo:
                s = lo
                nsat += 1
            elif s > hi:
                s = hi
                nsat += 1
            out[j] = np.floor(s) / delta
        return out, nsat

    @njit(cache=True)
    def q2_core_nb(v, c1, pw, u):
        nrm = 0.0
        for j in range(v.shape[0]):
            av = abs(v[j])
            if av > nrm:
                nrm = av
        out = np.empty_like(v)
        if nrm == 0.0:
            out[:] = 0.0
            return out
        c2 = nrm * pw
        for j in range(v.shape[0]):
            lev = np.floor(c1 * abs(v[j]) / nrm + u[j])
            out[j] = c2 * (np.sign(v[j]) * lev)
        return out

    @njit(cache=True)
    def run_quadratic_nb(W, A, AT, a, beta, x, y, z, h, xhat, R, U,
                         comp_id, delta, lo, hi, c1, pw,
                         gamma, tau, psi, alpha, X, Y, Z, SAT):
        m, n = x.shape
        iters = R.shape[0]
        coef = psi / tau
        for k in range(iters):
            Az = np.empty((m, n))
            for i in range(m):
                Az[i] = np.dot(A[i], z[i])
            x1 = x - psi * xhat + psi * np.dot(W, xhat) + tau * (y - Az)
            r = R[k]
            nsat = 0
            if comp_id == 0:
                xhat1 = x1.copy()
            else:
                xhat1 = np.empty_like(x1)
                for i in range(m):
                    v = (x1[i] - h[i]) / r
                    if comp_id == 1:
                        out, ns = q1_core_nb(v, delta, lo, hi, U[k, i])
                        nsat += ns
                    elif comp_id == 3:
                        out, ns = q3_core_nb(v, delta, lo, hi)
                        nsat += ns
                    else:
                        out = q2_core_nb(v, c1, pw, U[k, i])
                    xhat1[i] = h[i] + r * out
            y1 = y - coef * (xhat1 - np.dot(W, xhat1))
            h = (1.0 - alpha) * h + alpha * xhat1
            g = 2.0 * a.reshape(m, 1) * z + beta
            v2 = 2.0 * x1 - x
            step = np.empty_like(z)
            for i in range(m):
                step[i] = np.dot(AT[i], v2[i])
            z1 = z - gamma * g + gamma * step
            X[k] = x1
            Y[k] = y1
            Z[k] = z1
            SAT[k] = nsat
            bad = False
            for i in range(m):
                for j in range(n):
                    if not np.isfinite(x1[i, j]) or not np.isfinite(y1[i, j]):
                        bad = True
                    elif abs(x1[i, j]) > ITERATE_GUARD or abs(y1[i, j]) > ITERATE_GUARD:
                        bad = True
                for j in range(z1.shape[1]):
                    if not np.isfinite(z1[i, j]) or abs(z1[i, j]) > ITERATE_GUARD:
                        bad = True
            if bad:
                return k + 1
            x, y, z, xhat = x1, y1, z1, xhat1
        return iters

    return {"q1": q1_core_nb, "q2": q2_core_nb, "q3": q3_core_nb,
            "run": run_quadratic_nb}


_NB = _build_numba_kernels() if _BACKEND == "numba" else None


def q1_core(v, delta, lo, hi, u):
    if _NB is not None:
        return _NB["q1"](v, delta, lo, hi, u)
    return q1_core_np(v, delta, lo, hi, u)


def q2_core(v, c1, pw, u):
    if _NB is not None:
        return _NB["q2"](v, c1, pw, u)
    return q2_core_np(v, c1, pw, u)


def q3_core(v, delta, lo, hi):
    if _NB is not None:
        return _NB["q3"](v, delta, lo, hi)
    return q3_core_np(v, delta, lo, hi)


def run_quadratic(*args):
    if _NB is not None:
        return _NB["run"](*args)
    return run_quadratic_np(*args)


def numba_kernels():
    """Force-build the numba variants regardless of the active backend.

    Used by the backend benchmark; raises ImportError when numba is absent.
    """
    return _build_numba_kernels()
