"""Discretised rectified flow: schedules, Euler sampling and vanilla inversion.

Index ``t`` runs from 0 (pure noise, sigma_0 = 0) to T (clean sample,
sigma_T = 1). Forward sampling walks t upward, inversion walks it downward.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStep, InvalidSchedule


@dataclass(frozen=True, eq=False)
class Schedule:
    sigmas: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigmas, dtype=np.float64)
        if s.ndim != 1 or s.size < 2:
            raise InvalidSchedule("a schedule needs at least two grid points")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise InvalidSchedule(f"schedule must run from 0 to 1, got {s[0]!r}..{s[-1]!r}")
        if not np.all(np.diff(s) > 0):
            raise InvalidSchedule("schedule must be strictly increasing")
        s.setflags(write=False)
        object.__setattr__(self, "sigmas", s)

    @property
    def T(self):
        return self.sigmas.size - 1

    def step(self, t):
        """Width ``sigma_{t+1} - sigma_t`` of step ``t``."""
        return self.sigmas[t + 1] - self.sigmas[t]

    def __eq__(self, other):
        return isinstance(other, Schedule) and np.array_equal(self.sigmas, other.sigmas)

    def __hash__(self):
        return hash(self.sigmas.tobytes())


def make_schedule(T, spacing="uniform", shift=1.0):
    """Grid of image weights.

    ``"shifted"`` warps a uniform grid ``u`` in noise weight with
    ``1 - s*u / (1 + (s-1)*u)``; ``s > 1`` spends more steps near the noise
    end, ``s = 1`` reproduces the uniform grid.
    """
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise InvalidSchedule(f"T must be a positive integer, got {T!r}")
    i = np.arange(T + 1, dtype=np.float64)
    if spacing == "uniform":
        sig = i / T
    elif spacing == "shifted":
        if not shift > 0:
            raise InvalidSchedule(f"shift must be > 0, got {shift!r}")
        u = 1.0 - i / T
        sig = 1.0 - shift * u / (1.0 + (shift - 1.0) * u)
    else:
        raise InvalidSchedule(f"unknown spacing {spacing!r}")
    sig[0], sig[-1] = 0.0, 1.0
    return Schedule(sig)


@dataclass
class Trajectory:
    """States indexed by timestep; entries the run never visited are NaN."""

    states: np.ndarray
    nfe: int

    @property
    def terminal(self):
        return self.states[-1]

    @property
    def initial(self):
        return self.states[0]


def _empty_states(sched, z):
    return np.full((sched.T + 1,) + np.shape(z), np.nan)


def euler_forward(z_start, start_index, field, cond, sched):
    """Integrate from ``sigma[start_index]`` to 1 with explicit Euler."""
    if not 0 <= start_index < sched.T:
        raise ValueError(f"start_index must lie in [0, {sched.T}), got {start_index}")
    z = np.array(z_start, dtype=np.float64)
    states = _empty_states(sched, z)
    states[start_index] = z
    n0 = field.nfe
    for t in range(start_index, sched.T):
        z = z + field(z, sched.sigmas[t], cond) * sched.step(t)
        states[t + 1] = z
    return Trajectory(states, field.nfe - n0)


def euler_terminal(z_start, field, cond, sched, start_index=0):
    """Same update as ``euler_forward`` without storing the path (large batches)."""
    z = np.array(z_start, dtype=np.float64)
    for t in range(start_index, sched.T):
        z = z + field(z, sched.sigmas[t], cond) * sched.step(t)
    return z


def interpolate_latent(z_next, s_next, sigma_t, sigma_next):
    """Point at weight ``sigma_t`` on the line from ``s_next`` to ``z_next``."""
    if sigma_next == 0:
        raise DegenerateStep("sigma_next must be positive")
    ratio = sigma_t / sigma_next
    return ratio * np.asarray(z_next) + (1.0 - ratio) * np.asarray(s_next)


def vanilla_invert(image, field, cond, sched):
    """Approximate inversion reusing the velocity at ``Z_{t+1}`` for step t."""
    z = np.array(image, dtype=np.float64)
    states = _empty_states(sched, z)
    states[sched.T] = z
    n0 = field.nfe
    for t in range(sched.T - 1, -1, -1):
        z = z - field(z, sched.sigmas[t + 1], cond) * sched.step(t)
        states[t] = z
    return Trajectory(states, field.nfe - n0)
