"""Reference methods: fixed-noise interpolation inversion, FlowEdit and a midpoint solver."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core_math import sample_standard_normal
from .dna import DnaTrace
from .flow import Trajectory, _empty_states, interpolate_latent


class BaselineKind(str, Enum):
    FIXED_NOISE = "fixed_noise"
    FLOWEDIT_IID = "flowedit_iid"
    FLOWEDIT_ALIGNED = "flowedit_aligned"
    MIDPOINT_INVERSION = "midpoint_inversion"
    VANILLA = "vanilla"


def fixed_noise_trace(image, field, src_cond, sched, rng=None, s_init=None):
    """Interpolation inversion with one noise held fixed, as a trace.

    The latent for step t is interpolated between ``Z_{t+1}`` and the fixed
    noise, the field is evaluated there, and an inverse Euler step is taken.
    The noise is never moved. The result reuses the ``DnaTrace`` layout
    (constant ``s_series``), so the editing code can consume it directly.
    """
    image = np.asarray(image, dtype=np.float64)
    if s_init is None:
        s_init = sample_standard_normal(rng, image.shape[0])
    s = np.asarray(s_init, dtype=np.float64)
    T, d = sched.T, image.shape[0]
    sig = sched.sigmas
    latents = np.empty((T + 1, d))
    z_star = np.empty((T, d))
    v_src = np.empty((T, d))
    latents[T] = image
    n0 = field.nfe
    for t in range(T - 1, -1, -1):
        z_star[t] = interpolate_latent(latents[t + 1], s, sig[t], sig[t + 1])
        v_src[t] = field(z_star[t], sig[t], src_cond)
        latents[t] = latents[t + 1] - v_src[t] * (sig[t + 1] - sig[t])
    s_series = np.broadcast_to(s, (T + 1, d)).copy()
    return DnaTrace(
        sig.copy(), s_series, latents, z_star, z_star - latents[:T], v_src,
        np.zeros((T, d)), field.nfe - n0,
    )


def fixed_noise_invert(image, field, src_cond, sched, rng=None, s_init=None):
    tr = fixed_noise_trace(image, field, src_cond, sched, rng, s_init)
    return Trajectory(tr.latents, tr.nfe)


@dataclass
class FlowEditResult:
    """``fe_states[t]`` is the editing state before step t (``fe_states[T]`` = output)."""

    edited: np.ndarray
    fe_states: np.ndarray
    z_src: np.ndarray
    z_tgt: np.ndarray
    delta_v: np.ndarray
    nfe: int


def flowedit(source_image, field, src_cond, tgt_cond, sched, rng=None, noise_mode="iid", trace=None):
    """Inversion-free editing by accumulating target/source velocity gaps.

    ``noise_mode="iid"`` draws a fresh noise per step to build the source
    latent. ``"aligned"`` takes the source latents and velocities from a DNA
    ``trace``, which makes the result coincide with mobile guidance at
    ``eta = 1``, ``t_s = 0`` with residual offsets.
    """
    x = np.asarray(source_image, dtype=np.float64)
    T, d = sched.T, x.shape[0]
    sig = sched.sigmas
    if noise_mode == "aligned":
        if trace is None:
            raise ValueError("aligned mode needs a DnaTrace")
        trace.check_schedule(sched)
    elif noise_mode != "iid":
        raise ValueError(f"unknown noise_mode {noise_mode!r}")
    fe = np.empty((T + 1, d))
    z_src = np.empty((T, d))
    z_tgt = np.empty((T, d))
    dv = np.empty((T, d))
    f = x.copy()
    fe[0] = f
    n0 = field.nfe
    for t in range(T):
        if noise_mode == "aligned":
            z_src[t] = trace.z_star[t]
            v_src = trace.src_velocities[t]
        else:
            noise = sample_standard_normal(rng, d)
            z_src[t] = sig[t] * x + (1.0 - sig[t]) * noise
            v_src = field(z_src[t], sig[t], src_cond)
        z_tgt[t] = f + z_src[t] - x
        dv[t] = field(z_tgt[t], sig[t], tgt_cond) - v_src
        f = f + dv[t] * (sig[t + 1] - sig[t])
        fe[t + 1] = f
    return FlowEditResult(f, fe, z_src, z_tgt, dv, field.nfe - n0)


def midpoint_invert(image, field, cond, sched):
    """Second-order inversion: half step, re-evaluate, full step (2 NFE per step)."""
    z = np.array(image, dtype=np.float64)
    states = _empty_states(sched, z)
    states[sched.T] = z
    sig = sched.sigmas
    n0 = field.nfe
    for t in range(sched.T - 1, -1, -1):
        h = sig[t + 1] - sig[t]
        z_mid = z - field(z, sig[t + 1], cond) * (0.5 * h)
        z = z - field(z_mid, sig[t + 1] - 0.5 * h, cond) * h
        states[t] = z
    return Trajectory(states, field.nfe - n0)


def midpoint_forward(z_start, field, cond, sched):
    """Forward counterpart of ``midpoint_invert``, used for round trips."""
    z = np.array(z_start, dtype=np.float64)
    states = _empty_states(sched, z)
    states[0] = z
    sig = sched.sigmas
    n0 = field.nfe
    for t in range(sched.T):
        h = sig[t + 1] - sig[t]
        z_mid = z + field(z, sig[t], cond) * (0.5 * h)
        z = z + field(z_mid, sig[t] + 0.5 * h, cond) * h
        states[t + 1] = z
    return Trajectory(states, field.nfe - n0)
