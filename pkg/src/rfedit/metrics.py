"""Vector-space evaluation metrics for reconstruction and editing."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .core_math import gauss_logpdf
from .dna import reconstruct_path
from .errors import DimMismatch, InvalidConfig


@dataclass(frozen=True, eq=False)
class EditScenario:
    """Which coordinates count as background and which carry the edit."""

    dims_background: tuple
    dims_edit: tuple
    src_mixture: object
    tgt_mixture: object
    source: np.ndarray = None

    def __post_init__(self):
        bg, ed = tuple(int(i) for i in self.dims_background), tuple(int(i) for i in self.dims_edit)
        object.__setattr__(self, "dims_background", bg)
        object.__setattr__(self, "dims_edit", ed)
        d = self.src_mixture.d
        if set(bg) & set(ed):
            raise InvalidConfig("background and edit dimensions overlap")
        if sorted(bg + ed) != list(range(d)):
            raise InvalidConfig(f"background and edit dimensions must cover 0..{d - 1} exactly")
        if self.tgt_mixture.d != d:
            raise InvalidConfig("source and target mixtures differ in dimension")
        if bg and not self.src_mixture.marginal(bg).same_as(self.tgt_mixture.marginal(bg)):
            raise InvalidConfig("source and target mixtures must share the background marginal")


def mse(a, b, dims=None):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes {a.shape} and {b.shape} differ")
    if dims is not None:
        dims = np.asarray(dims, dtype=int)
        if dims.size and (dims.min() < 0 or dims.max() >= a.shape[-1]):
            raise DimMismatch("dims out of range")
        a, b = a[..., dims], b[..., dims]
    return float(np.mean((a - b) ** 2))


def recon_error_curve(trace, field, cond, sched, use_offsets):
    """MSE between the re-denoised path and the trace latents after each step."""
    path, _ = reconstruct_path(trace, field, cond, sched, use_offsets)
    return np.mean((path[1:] - trace.latents[1:]) ** 2, axis=1)


class NoiseMoments(NamedTuple):
    mean: float
    var: float
    skewness: float
    excess_kurtosis: float
    degenerate: bool


def noise_moments(s):
    """Sample moments across coordinates; higher moments are 0 when var is 0."""
    s = np.asarray(s, dtype=np.float64).ravel()
    if s.size < 2:
        raise ValueError("need at least two coordinates")
    mu = s.mean()
    c = s - mu
    var = float(np.mean(c**2))
    if var == 0.0:
        return NoiseMoments(float(mu), 0.0, 0.0, 0.0, True)
    skew = float(np.mean(c**3) / var**1.5)
    kurt = float(np.mean(c**4) / var**2 - 3.0)
    return NoiseMoments(float(mu), var, skew, kurt, False)


def target_loglik(x, scenario):
    """Log-density of ``x``'s edit coordinates under the target's edit marginal."""
    dims = list(scenario.dims_edit)
    mix = scenario.tgt_mixture.marginal(dims)
    xe = np.asarray(x, dtype=np.float64)[dims]
    terms = [
        np.log(w) + gauss_logpdf(xe, mix.means[k], mix.covs[k]) if w > 0 else -np.inf
        for k, w in enumerate(mix.weights)
    ]
    return float(logsumexp(terms))


def background_mse(x, scenario, reference=None):
    ref = scenario.source if reference is None else reference
    return mse(x, ref, scenario.dims_background)
