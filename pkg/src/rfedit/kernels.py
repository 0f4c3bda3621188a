"""Hot numeric kernels: dense Cholesky and the Gaussian-mixture velocity.

Two interchangeable backends are provided:

* ``"numba"`` -- explicit loops compiled with ``numba.njit``. Fast for the
  small batches (usually a single state vector) that the inversion and
  editing loops evaluate thousands of times.
* ``"numpy"`` -- vectorised numpy/scipy. No compilation, used when numba is
  missing or when ``RFEDIT_DISABLE_NUMBA`` is set to anything but ``0``.

The backends agree to within floating point reassociation (about 1e-13
relative). A given run uses a single backend, so outputs are reproducible
bit-for-bit on one machine. Call ``set_backend`` to switch at runtime, for
example from tests or the benchmark.
"""

import math
import os

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import NotSpd

_LOG_2PI = math.log(2.0 * math.pi)


def _env_disables_numba():
    flag = os.environ.get("RFEDIT_DISABLE_NUMBA", "0").strip().lower()
    return flag not in ("", "0", "false", "no", "off")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    numba = None
    HAVE_NUMBA = False


# --------------------------------------------------------------------------
# numpy backend
# --------------------------------------------------------------------------

def cholesky_numpy(m):
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotSpd(str(exc)) from None


def mixture_velocity_numpy(z, sigma, log_weights, means, covs):
    """Vectorised closed-form velocity. ``z`` is (n, d); returns (v, resp)."""
    n, d = z.shape
    a = 1.0 - sigma
    C = (sigma * sigma) * covs + (a * a) * np.eye(d)
    L = cholesky_numpy(C)
    K = means.shape[0]
    logp = np.empty((n, K))
    cond_mean = np.empty((K, n, d))
    for k in range(K):
        r = z - sigma * means[k]
        y = solve_triangular(L[k], r.T, lower=True)
        w = solve_triangular(L[k].T, y, lower=False)
        logdet = np.log(np.diag(L[k])).sum()
        logp[:, k] = log_weights[k] - 0.5 * np.einsum("ij,ij->j", y, y) - logdet - 0.5 * d * _LOG_2PI
        cond_mean[k] = means[k] + sigma * (covs[k] @ w).T - a * w.T
    resp = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
    v = np.einsum("nk,knd->nd", resp, cond_mean)
    return v, resp


# --------------------------------------------------------------------------
# numba backend
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _cholesky_nb(a):
        n = a.shape[0]
        L = np.zeros((n, n))
        for j in range(n):
            s = a[j, j]
            for k in range(j):
                s -= L[j, k] * L[j, k]
            if not s > 0.0:
                return L, False
            L[j, j] = math.sqrt(s)
            for i in range(j + 1, n):
                s = a[i, j]
                for k in range(j):
                    s -= L[i, k] * L[j, k]
                L[i, j] = s / L[j, j]
        return L, True

    @numba.njit(cache=True)
    def _mixture_velocity_nb(z, sigma, log_weights, means, covs):
        n, d = z.shape
        K = means.shape[0]
        a = 1.0 - sigma
        v = np.zeros((n, d))
        resp = np.zeros((n, K))
        logp = np.empty((n, K))
        cond_mean = np.empty((K, n, d))
        C = np.empty((d, d))
        y = np.empty(d)
        w = np.empty(d)
        for k in range(K):
            for i in range(d):
                for j in range(d):
                    C[i, j] = sigma * sigma * covs[k, i, j]
                C[i, i] += a * a
            L, ok = _cholesky_nb(C)
            if not ok:
                return v, resp, False
            logdet = 0.0
            for i in range(d):
                logdet += math.log(L[i, i])
            for p in range(n):
                q = 0.0
                for i in range(d):
                    s = z[p, i] - sigma * means[k, i]
                    for j in range(i):
                        s -= L[i, j] * y[j]
                    y[i] = s / L[i, i]
                    q += y[i] * y[i]
                logp[p, k] = log_weights[k] - 0.5 * q - logdet - 0.5 * d * 1.8378770664093453
                for i in range(d - 1, -1, -1):
                    s = y[i]
                    for j in range(i + 1, d):
                        s -= L[j, i] * w[j]
                    w[i] = s / L[i, i]
                for i in range(d):
                    s = 0.0
                    for j in range(d):
                        s += covs[k, i, j] * w[j]
                    cond_mean[k, p, i] = means[k, i] + sigma * s - a * w[i]
        for p in range(n):
            m = -np.inf
            for k in range(K):
                if logp[p, k] > m:
                    m = logp[p, k]
            tot = 0.0
            for k in range(K):
                resp[p, k] = math.exp(logp[p, k] - m)
                tot += resp[p, k]
            for k in range(K):
                resp[p, k] /= tot
                for i in range(d):
                    v[p, i] += resp[p, k] * cond_mean[k, p, i]
        return v, resp, True

    def cholesky_numba(m):
        L, ok = _cholesky_nb(np.ascontiguousarray(m, dtype=np.float64))
        if not ok:
            raise NotSpd("non-positive pivot in Cholesky factorisation")
        return L

    def mixture_velocity_numba(z, sigma, log_weights, means, covs):
        v, resp, ok = _mixture_velocity_nb(z, float(sigma), log_weights, means, covs)
        if not ok:
            raise NotSpd(f"mixture covariance not SPD at sigma={sigma!r}")
        return v, resp


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

_BACKEND = "numba" if HAVE_NUMBA and not _env_disables_numba() else "numpy"


def get_backend():
    return _BACKEND


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, _BACKEND = _BACKEND, name
    return prev


def cholesky_lower(m):
    if _BACKEND == "numba":
        return cholesky_numba(m)
    return cholesky_numpy(m)


def mixture_velocity_batch(z, sigma, log_weights, means, covs):
    """Velocity E[X - S | Z_sigma = z] for each row of ``z``.

    Returns ``(v, resp)`` with ``v`` shaped like ``z`` (n, d) and the
    component responsibilities ``resp`` shaped (n, K).
    """
    if _BACKEND == "numba":
        return mixture_velocity_numba(z, sigma, log_weights, means, covs)
    return mixture_velocity_numpy(z, sigma, log_weights, means, covs)
