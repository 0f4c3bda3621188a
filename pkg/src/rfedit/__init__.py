"""Rectified-flow inversion and editing over closed-form mixture velocity fields."""

from .core_math import RngStream, cholesky, gauss_logpdf, sample_standard_normal
from .dna import DnaTrace, dna_invert, dna_step, noise_delta_frames, reconstruct
from .flow import Schedule, Trajectory, euler_forward, interpolate_latent, make_schedule, vanilla_invert
from .mvg import EditConfig, EditResult, eta_sweep, mvg_edit
from .velocity import (
    Condition,
    GaussianMixture,
    MixtureField,
    VelocityField,
    fixed_test_field,
    guided_velocity,
    mixture_velocity,
)

__version__ = "0.1.0"
