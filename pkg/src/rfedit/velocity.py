"""Velocity fields: the closed-form Gaussian-mixture field and test doubles.

Conventions used everywhere in the package: ``sigma`` is the image weight,
``Z_sigma = sigma * X + (1 - sigma) * S`` with ``S ~ N(0, I)`` and ``X`` drawn
from the data mixture, and a velocity field returns ``E[X - S | Z_sigma = z]``.
That conditional expectation minimises the rectified-flow regression loss, so
a mixture field stands in for a perfectly trained model.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional

import numpy as np

from . import kernels
from .core_math import MAX_DIM
from .errors import FieldError, InvalidConfig, UnknownCondition

DEFAULT_UNCOND = "__uncond__"


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        cov = np.asarray(self.covs, dtype=np.float64)
        if cov.ndim == 2:
            cov = cov[None]
        problems = []
        K, d = mu.shape
        if w.shape != (K,):
            problems.append(f"{w.shape[0]} weights for {K} components")
        if cov.shape != (K, d, d):
            problems.append(f"covariances have shape {cov.shape}, expected {(K, d, d)}")
        if d > MAX_DIM:
            problems.append(f"dimension {d} exceeds {MAX_DIM}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            problems.append(f"weights must be non-negative and sum to 1 (sum={w.sum():.17g})")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
            problems.append("non-finite means or covariances")
        if not problems:
            for k in range(K):
                c = cov[k]
                if np.abs(c - c.T).max() > 1e-12 * max(np.abs(c).max(), 1e-300):
                    problems.append(f"covariance {k} not symmetric")
                elif np.linalg.eigvalsh(c).min() <= 0:
                    problems.append(f"covariance {k} not positive definite")
        if problems:
            raise InvalidConfig("; ".join(problems))
        for name, arr in (("weights", w), ("means", mu), ("covs", cov)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        with np.errstate(divide="ignore"):
            lw = np.log(w)
        lw.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)

    @property
    def d(self):
        return self.means.shape[1]

    @property
    def K(self):
        return self.means.shape[0]

    def mean(self):
        return self.weights @ self.means

    def marginal(self, dims):
        dims = np.asarray(dims, dtype=int)
        return GaussianMixture(self.weights, self.means[:, dims], self.covs[:, dims][:, :, dims])

    def sample(self, rng, n=None):
        """Draw one point (``n=None``) or an (n, d) batch."""
        m = 1 if n is None else n
        comp = rng.choice(self.K, m, self.weights)
        eps = rng.standard_normal((m, self.d))
        L = np.linalg.cholesky(self.covs)
        x = self.means[comp] + np.einsum("nij,nj->ni", L[comp], eps)
        return x[0] if n is None else x

    def to_dict(self):
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covs": self.covs.tolist(),
        }

    def same_as(self, other):
        return (
            self.weights.shape == other.weights.shape
            and self.means.shape == other.means.shape
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.covs, other.covs)
        )


def isotropic(d, var=1.0, mean=None):
    mean = np.zeros(d) if mean is None else np.asarray(mean, dtype=np.float64)
    return GaussianMixture(np.ones(1), mean[None], var * np.eye(d)[None])


@lru_cache(maxsize=None)
def _default_uncond(d):
    # broad N(0, 9 I) prior standing in for an empty prompt
    return isotropic(d, 9.0)


@dataclass(frozen=True)
class Condition:
    """Stand-in for a text prompt: a named mixture plus a guidance scale."""

    mixture_id: str
    guidance_scale: float = 1.0
    uncond_id: Optional[str] = None

    def __post_init__(self):
        if not self.guidance_scale >= 0:
            raise InvalidConfig(f"guidance_scale must be >= 0, got {self.guidance_scale}")


def _as_batch(z):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        return z[None], True
    if z.ndim == 2:
        return z, False
    raise FieldError(f"state must be 1-D or 2-D, got shape {z.shape}")


def mixture_velocity(z, sigma, mix, return_resp=False):
    """Exact ``E[X - S | Z_sigma = z]`` for ``X ~ mix`` and standard normal ``S``.

    ``z`` may be a single state (d,) or a batch (n, d).
    """
    if not 0.0 <= sigma <= 1.0:
        raise FieldError(f"sigma={sigma!r} outside [0, 1]")
    zb, single = _as_batch(z)
    if zb.shape[1] != mix.d:
        raise FieldError(f"state has dimension {zb.shape[1]}, mixture has {mix.d}")
    v, resp = kernels.mixture_velocity_batch(
        np.ascontiguousarray(zb), float(sigma), mix.log_weights, mix.means, mix.covs
    )
    if single:
        v, resp = v[0], resp[0]
    return (v, resp) if return_resp else v


def guided_velocity(z, sigma, cond, fields):
    """Classifier-free-guidance blend ``v_u + g * (v_c - v_u)``.

    With ``g == 1`` the unconditional mixture is never looked up.
    """
    try:
        mix_c = fields[cond.mixture_id]
    except KeyError:
        raise UnknownCondition(cond.mixture_id) from None
    v_c = mixture_velocity(z, sigma, mix_c)
    g = cond.guidance_scale
    if g == 1.0:
        return v_c
    uid = cond.uncond_id or DEFAULT_UNCOND
    if uid in fields:
        mix_u = fields[uid]
    elif uid == DEFAULT_UNCOND:
        mix_u = _default_uncond(mix_c.d)
    else:
        raise UnknownCondition(uid)
    v_u = mixture_velocity(z, sigma, mix_u)
    return v_u + g * (v_c - v_u)


class VelocityField:
    """Deterministic velocity model with an evaluation counter.

    ``nfe`` counts model evaluations: one per call, two for a guided call
    that needs the unconditional branch. A batch of states is one call.
    Each run should own its field so the count is exact for that run.
    """

    def __init__(self):
        self.nfe = 0

    def __call__(self, z, sigma, cond=None):
        self.nfe += self.cost(cond)
        return self.evaluate(z, sigma, cond)

    def cost(self, cond):
        return 1

    def evaluate(self, z, sigma, cond):
        raise NotImplementedError


class MixtureField(VelocityField):
    """The closed-form field over a set of named mixtures."""

    def __init__(self, mixtures: Mapping[str, GaussianMixture]):
        super().__init__()
        self.mixtures = dict(mixtures)

    def cost(self, cond):
        return 1 if cond is None or cond.guidance_scale == 1.0 else 2

    def evaluate(self, z, sigma, cond):
        if cond is None:
            raise UnknownCondition("a MixtureField needs a Condition")
        return guided_velocity(z, sigma, cond, self.mixtures)


class ZeroField(VelocityField):
    def evaluate(self, z, sigma, cond):
        return np.zeros_like(np.asarray(z, dtype=np.float64))


class ConstantField(VelocityField):
    def __init__(self, c):
        super().__init__()
        self.c = np.asarray(c, dtype=np.float64)

    def evaluate(self, z, sigma, cond):
        return np.broadcast_to(self.c, np.shape(z)).copy()


class LinearToField(VelocityField):
    """Exact field of a point mass at ``x0``: ``v = (x0 - z) / (1 - sigma)``.

    Every straight line from a noise to ``x0`` is a trajectory of this field,
    so the straight-line velocity seen by noise alignment always matches
    the field and the alignment gap is identically zero.
    """

    def __init__(self, x0):
        super().__init__()
        self.x0 = np.asarray(x0, dtype=np.float64)

    def evaluate(self, z, sigma, cond):
        if sigma >= 1.0:
            raise FieldError("point-mass field is singular at sigma = 1")
        return (self.x0 - np.asarray(z, dtype=np.float64)) / (1.0 - sigma)


def fixed_test_field(kind, value=None):
    """Build a test double: ``"zero"``, ``"constant"`` (c) or ``"linear_to"`` (x0)."""
    if kind == "zero":
        return ZeroField()
    if kind == "constant":
        return ConstantField(value)
    if kind == "linear_to":
        return LinearToField(value)
    raise ValueError(f"unknown test field kind {kind!r}")
