"""Direct noise alignment: inversion by shifting the noise, plus exact reconstruction.

Starting from a random noise ``S_T`` and the clean sample ``Z_T``, each step
walks one grid point toward the noise end. It interpolates a latent on the
line between ``S_{t+1}`` and ``Z_{t+1}``, compares the straight-line
velocity with the field's velocity there, and moves both the noise and the
latent so that the two agree. The gap between the interpolated latent and the
moved latent (the residual offset) is stored. Adding it back while
re-denoising reproduces the source exactly.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core_math import sample_standard_normal
from .errors import DegenerateStep, ScheduleMismatch
from .flow import interpolate_latent


class DnaStep(NamedTuple):
    s_t: np.ndarray
    z_t: np.ndarray
    offset: np.ndarray
    v_src: np.ndarray
    z_star: np.ndarray
    delta_v: np.ndarray


@dataclass
class DnaTrace:
    """Everything a DNA inversion produces, indexed by timestep.

    ``s_series[t]`` is S_t and ``latents[t]`` is Z_t, for t in 0..T, with
    ``latents[T]`` the source. ``z_star``, ``offsets``, ``src_velocities`` and
    ``delta_v`` hold one entry per step t = 0..T-1.
    """

    sigmas: np.ndarray
    s_series: np.ndarray
    latents: np.ndarray
    z_star: np.ndarray
    offsets: np.ndarray
    src_velocities: np.ndarray
    delta_v: np.ndarray
    nfe: int

    @property
    def s_final(self):
        return self.s_series[0]

    @property
    def T(self):
        return self.sigmas.size - 1

    def check_schedule(self, sched):
        if not np.array_equal(self.sigmas, sched.sigmas):
            raise ScheduleMismatch("trace was produced on a different schedule")


def dna_step(z_next, s_next, sigma_t, sigma_next, field, cond, linear_sign=1.0):
    """One alignment step from grid point t+1 to t.

    ``linear_sign`` exists only as a mutation hook for the self-test; any
    value other than 1 breaks the algorithm on purpose.
    """
    if not sigma_t < sigma_next:
        raise DegenerateStep(f"need sigma_t < sigma_next, got {sigma_t!r} >= {sigma_next!r}")
    h = sigma_next - sigma_t
    z_star = interpolate_latent(z_next, s_next, sigma_t, sigma_next)
    v_linear = linear_sign * (z_next - s_next) / sigma_next
    v_src = np.asarray(field(z_star, sigma_t, cond), dtype=np.float64)
    delta_v = v_linear - v_src
    s_t = s_next + delta_v * sigma_next
    z_t = z_star + delta_v * h
    return DnaStep(s_t, z_t, z_star - z_t, v_src, z_star, delta_v)


def dna_invert(image, field, src_cond, sched, rng=None, s_init=None, linear_sign=1.0):
    """Run the alignment from t = T-1 down to 0.

    The start noise is drawn from ``rng`` unless ``s_init`` is given.
    """
    image = np.asarray(image, dtype=np.float64)
    if s_init is None:
        s_init = sample_standard_normal(rng, image.shape[0])
    T, d = sched.T, image.shape[0]
    s_series = np.empty((T + 1, d))
    latents = np.empty((T + 1, d))
    z_star = np.empty((T, d))
    offsets = np.empty((T, d))
    v_src = np.empty((T, d))
    delta_v = np.empty((T, d))
    s_series[T] = s_init
    latents[T] = image
    n0 = field.nfe
    sig = sched.sigmas
    for t in range(T - 1, -1, -1):
        st = dna_step(latents[t + 1], s_series[t + 1], sig[t], sig[t + 1], field, src_cond, linear_sign)
        s_series[t], latents[t] = st.s_t, st.z_t
        z_star[t], offsets[t], v_src[t], delta_v[t] = st.z_star, st.offset, st.v_src, st.delta_v
    return DnaTrace(sig.copy(), s_series, latents, z_star, offsets, v_src, delta_v, field.nfe - n0)


def reconstruct_path(trace, field, src_cond, sched, use_offsets=True):
    """Re-denoise from the inverted noise; returns the (T+1, d) path and the NFE used.

    For a DNA trace ``latents[0]`` and ``S_0`` are the same vector. A
    fixed-noise trace keeps its noise unchanged, so its inverted latent
    ``latents[0]`` is the starting point there.
    """
    trace.check_schedule(sched)
    path = np.empty_like(trace.latents)
    z = trace.latents[0].copy()
    path[0] = z
    n0 = field.nfe
    for t in range(sched.T):
        probe = z + trace.offsets[t] if use_offsets else z
        z = z + field(probe, sched.sigmas[t], src_cond) * sched.step(t)
        path[t + 1] = z
    return path, field.nfe - n0


def reconstruct(trace, field, src_cond, sched, use_offsets=True):
    path, _ = reconstruct_path(trace, field, src_cond, sched, use_offsets)
    return path[-1]


def noise_delta_frames(trace, stride):
    """``S_t - S_{t+stride}`` for every t with ``t + stride <= T``; empty when ``stride >= T``."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    s = trace.s_series
    return [s[t] - s[t + stride] for t in range(0, trace.T - stride + 1)] if stride < trace.T else []


def step_coefficients(sched):
    """Per-step factor ``(sigma_{t+1} - sigma_t) / sigma_{t+1}`` (diagnostic)."""
    sig = sched.sigmas
    return np.diff(sig) / sig[1:]
