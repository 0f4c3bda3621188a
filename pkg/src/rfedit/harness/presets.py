"""Built-in scenarios, expressed as plain config dictionaries."""

import copy

import numpy as np

# three background layouts, scaled so components overlap noticeably
_BG_PATTERNS = 0.75 * np.array(
    [
        [1, 1, -1, -1, 1, -1],
        [-1, 1, 1, -1, -1, 1],
        [1, -1, 1, 1, -1, -1],
    ],
    dtype=float,
)
_SRC_EDIT_MEANS = np.array([[-1.0, 0.5], [0.0, -1.0], [1.0, 0.5]])
_EDIT_STD = 1.0
# each component's edit means move 4 standard deviations, in its own direction
_ANGLES = np.array([0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0])
_EDIT_SHIFT = 4.0 * _EDIT_STD * np.stack([np.cos(_ANGLES), np.sin(_ANGLES)], axis=1)
_CROSS = 0.25 * np.array([[1, 0], [0, 1], [1, 1], [0, 0], [-1, 0], [0, -1]], dtype=float)


def _standard_covs():
    covs = []
    for k in range(3):
        bg = np.eye(6) + 0.1 * np.ones((6, 6))
        cross = np.roll(_CROSS, 2 * k, axis=0)
        covs.append(np.block([[bg, cross], [cross.T, _EDIT_STD**2 * np.eye(2)]]))
    return np.array(covs)


def _mixture(weights, means, covs):
    return {"weights": list(map(float, weights)), "means": np.asarray(means).tolist(), "covs": np.asarray(covs).tolist()}


def standard():
    """d=8 edit scenario: background dims 0..5, edit dims 6..7, K=3.

    Source and target share weights, background means and covariances. They
    differ only in the edit-coordinate means, so the background marginals are
    identical but the joint (and hence the velocity on background
    coordinates) is not.
    """
    w = [0.3, 0.3, 0.4]
    covs = _standard_covs()
    src = np.hstack([_BG_PATTERNS, _SRC_EDIT_MEANS])
    tgt = np.hstack([_BG_PATTERNS, _SRC_EDIT_MEANS + _EDIT_SHIFT])
    return {
        "d": 8,
        "mixtures": {"src": _mixture(w, src, covs), "tgt": _mixture(w, tgt, covs)},
        "src_cond": {"mixture": "src"},
        "tgt_cond": {"mixture": "tgt"},
        "schedule": {"T": 28},
        "edit": {"eta": 0.8, "t_s": 0},
        "scenario": {"dims_background": [0, 1, 2, 3, 4, 5], "dims_edit": [6, 7]},
        "seeds": list(range(20)),
        "methods": ["dna", "fixed_noise", "midpoint", "vanilla"],
    }


def tiny():
    cov = [[0.3, 0.1], [0.1, 0.3]]
    return {
        "d": 2,
        "mixtures": {
            "src": _mixture([0.5, 0.5], [[-1.0, -1.0], [1.0, 0.0]], [cov, cov]),
            "tgt": _mixture([0.5, 0.5], [[-1.0, 1.2], [1.0, 2.2]], [cov, cov]),
        },
        "src_cond": {"mixture": "src"},
        "tgt_cond": {"mixture": "tgt"},
        "schedule": {"T": 8},
        "scenario": {"dims_background": [0], "dims_edit": [1]},
        "seeds": [0, 1, 2],
        "methods": ["dna", "fixed_noise", "midpoint", "vanilla"],
    }


def flux_scale():
    """Production-like knobs: 28 steps, start at step 4, guidance 2.5."""
    cfg = standard()
    cfg["src_cond"] = {"mixture": "src", "guidance_scale": 2.5}
    cfg["tgt_cond"] = {"mixture": "tgt", "guidance_scale": 2.5}
    cfg["edit"] = {"eta": 0.8, "t_s": 4}
    return cfg


PRESETS = {"tiny": tiny, "standard": standard, "flux-scale": flux_scale}


def preset(name):
    try:
        return copy.deepcopy(PRESETS[name]())
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
