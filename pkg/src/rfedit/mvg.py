"""Mobile velocity guidance editing on top of a noise-alignment trace."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfig
from .velocity import Condition

DEFAULT_ETA = 0.8


@dataclass(frozen=True)
class EditConfig:
    src_cond: Condition
    tgt_cond: Condition
    eta: float = DEFAULT_ETA
    t_start: int = 0
    use_res_offset: bool = True
    use_mvg: bool = True

    def validate(self, T):
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidConfig(f"eta must lie in [0, 1], got {self.eta}")
        if not 0 <= self.t_start < T:
            raise InvalidConfig(f"t_start must lie in [0, {T}), got {self.t_start}")


@dataclass
class EditResult:
    """Per-step series cover t = t_s..T (states) or t_s..T-1 (velocities)."""

    edited: np.ndarray
    edit_traj: np.ndarray
    mvg_traj: np.ndarray
    delta_v_series: np.ndarray
    v_tgt_series: np.ndarray
    v_edit_series: np.ndarray
    probe_series: np.ndarray
    nfe: int


def mvg_edit(trace, source_image, field, cfg, sched, mvg_init=None):
    """Denoise under ``cfg.tgt_cond`` from ``trace.latents[t_s]``.

    The mobile reference starts at the source (or ``mvg_init``) and drifts by
    the target/source velocity difference. The editing velocity blends the
    target velocity with a pull toward that reference, weighted by ``eta``.
    Source velocities are taken from the trace, so only target evaluations
    cost NFE.
    """
    trace.check_schedule(sched)
    T = sched.T
    cfg.validate(T)
    ts, eta = cfg.t_start, cfg.eta
    sig = sched.sigmas
    n = T - ts
    d = trace.latents.shape[1]
    edit_traj = np.empty((n + 1, d))
    mvg_traj = np.empty((n + 1, d))
    dv = np.empty((n, d))
    v_tgt_s = np.empty((n, d))
    v_edit_s = np.empty((n, d))
    probes = np.empty((n, d))

    z = trace.latents[ts].copy()
    m = np.array(source_image if mvg_init is None else mvg_init, dtype=np.float64)
    edit_traj[0], mvg_traj[0] = z, m
    n0 = field.nfe
    for i, t in enumerate(range(ts, T)):
        h = sig[t + 1] - sig[t]
        probe = z + trace.offsets[t] if cfg.use_res_offset else z
        v_tgt = np.asarray(field(probe, sig[t], cfg.tgt_cond), dtype=np.float64)
        delta = v_tgt - trace.src_velocities[t]
        m = m + delta * h
        if cfg.use_mvg:
            v_mvg = (m - z) / (1.0 - sig[t])
            v_edit = eta * v_tgt + (1.0 - eta) * v_mvg
        else:
            v_edit = v_tgt
        z = z + v_edit * h
        probes[i], v_tgt_s[i], dv[i], v_edit_s[i] = probe, v_tgt, delta, v_edit
        edit_traj[i + 1], mvg_traj[i + 1] = z, m
    return EditResult(z, edit_traj, mvg_traj, dv, v_tgt_s, v_edit_s, probes, field.nfe - n0)


def eta_sweep(trace, source_image, field, cfg, sched, etas):
    if len(etas) == 0:
        raise InvalidConfig("etas must be non-empty")
    return [mvg_edit(trace, source_image, field, replace(cfg, eta=float(e)), sched) for e in etas]
