"""Dense linear algebra, Gaussian densities and the seeded random stream."""

import math

import numpy as np

from . import kernels
from .errors import DimMismatch, NotSpd

MAX_DIM = 64


def cholesky(m):
    """Lower-triangular ``L`` with ``L @ L.T == m``.

    Raises NotSpd when ``m`` is not symmetric (1e-12 relative) or a pivot is
    non-positive.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {m.shape}")
    scale = max(np.abs(m).max(), np.finfo(float).tiny)
    if np.abs(m - m.T).max() > 1e-12 * scale:
        raise NotSpd("matrix is not symmetric")
    return kernels.cholesky_lower(m)


def gauss_logpdf(x, mean, cov):
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    x, mean = np.atleast_1d(x), np.atleast_1d(mean)
    d = x.shape[0]
    if mean.shape != (d,) or cov.shape != (d, d):
        raise DimMismatch(f"x {x.shape}, mean {mean.shape}, cov {cov.shape}")
    L = cholesky(cov)
    y = np.linalg.solve(L, x - mean)
    return float(-0.5 * y @ y - np.log(np.diag(L)).sum() - 0.5 * d * math.log(2.0 * math.pi))


class RngStream:
    """Explicitly seeded generator: numpy ``Generator(PCG64(seed))``.

    PCG64 with numpy's SeedSequence expansion of ``seed`` is the documented
    identity of every random draw in the package. ``position`` counts the
    normal variates drawn so far.
    """

    def __init__(self, seed):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.position = 0
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def standard_normal(self, shape):
        out = self._gen.standard_normal(shape)
        self.position += out.size
        return out

    def choice(self, n, size, p):
        # not counted in ``position``: only used for mixture component labels
        return self._gen.choice(n, size=size, p=p)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, position={self.position})"


def sample_standard_normal(rng, d):
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return rng.standard_normal(int(d))
