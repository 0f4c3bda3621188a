from dataclasses import replace

import numpy as np
import pytest

from rfedit.dna import dna_invert
from rfedit.errors import InvalidConfig, ScheduleMismatch
from rfedit.flow import make_schedule
from rfedit.harness.experiments import draw_source
from rfedit.metrics import background_mse
from rfedit.mvg import DEFAULT_ETA, EditConfig, eta_sweep, mvg_edit


def _setup(cfg, seed=0):
    x, s_T = draw_source(cfg, seed)
    sched = cfg.schedule()
    f = cfg.make_field()
    return x, sched, f, dna_invert(x, f, cfg.src, sched, s_init=s_T)


def test_defaults():
    cfg = EditConfig(None, None)
    assert cfg.eta == DEFAULT_ETA == 0.8 and cfg.t_start == 0 and cfg.use_mvg and cfg.use_res_offset


@pytest.mark.parametrize("ts", [0, 4, 27])
def test_nfe_and_lengths(std_cfg, ts):
    x, sched, f, tr = _setup(std_cfg)
    n0 = f.nfe
    res = mvg_edit(tr, x, f, std_cfg.edit_config(t_start=ts), sched)
    assert f.nfe - n0 == res.nfe == sched.T - ts
    assert res.edit_traj.shape[0] == res.mvg_traj.shape[0] == sched.T - ts + 1
    assert res.delta_v_series.shape[0] == sched.T - ts


@pytest.mark.parametrize("ts", [0, 5, 27])
def test_identity_edit(std_cfg, ts):
    x, sched, f, tr = _setup(std_cfg, 1)
    res = mvg_edit(tr, x, f, std_cfg.edit_config(tgt_cond=std_cfg.src, eta=1.0, t_start=ts), sched)
    np.testing.assert_allclose(res.v_tgt_series, tr.src_velocities[ts:], atol=1e-10)
    np.testing.assert_allclose(res.delta_v_series, 0, atol=1e-10)
    np.testing.assert_allclose(res.mvg_traj, np.broadcast_to(x, res.mvg_traj.shape), atol=1e-10)
    assert np.linalg.norm(res.edited - x) / np.linalg.norm(x) <= 1e-6


@pytest.mark.parametrize("eta", [0.8, 0.3])
def test_identity_edit_below_one_only_matches_first_step(std_cfg, eta):
    # the guidance pull toward the fixed source moves the state off the trace
    # after the first step, so only that step's target velocity is the source one
    x, sched, f, tr = _setup(std_cfg, 1)
    res = mvg_edit(tr, x, f, std_cfg.edit_config(tgt_cond=std_cfg.src, eta=eta), sched)
    np.testing.assert_allclose(res.v_tgt_series[0], tr.src_velocities[0], atol=1e-10)
    assert np.abs(res.v_tgt_series[1:] - tr.src_velocities[1:]).max() > 1e-6


def test_parallelogram_accumulation(std_cfg):
    x, sched, f, tr = _setup(std_cfg, 2)
    res = mvg_edit(tr, x, f, std_cfg.edit_config(eta=1.0), sched)
    acc = np.vstack([np.zeros(x.size), np.cumsum(res.delta_v_series * np.diff(sched.sigmas)[:, None], axis=0)])
    np.testing.assert_allclose(res.edit_traj - tr.latents, acc, atol=1e-6)


def test_eta_one_ignores_reference(std_cfg):
    x, sched, f, tr = _setup(std_cfg, 3)
    a = mvg_edit(tr, x, f, std_cfg.edit_config(eta=1.0), sched)
    b = mvg_edit(tr, x, f, std_cfg.edit_config(eta=1.0), sched, mvg_init=np.full(x.size, 50.0))
    assert np.array_equal(a.edited, b.edited)


def test_blend_is_affine_in_eta(std_cfg):
    x, sched, f, tr = _setup(std_cfg, 4)
    # first step: the state is the same for every eta, so v_edit is linear in eta
    vs = [mvg_edit(tr, x, f, std_cfg.edit_config(eta=e), sched).v_edit_series[0] for e in (0.2, 0.5, 0.9)]
    np.testing.assert_allclose((vs[1] - vs[0]) / 0.3, (vs[2] - vs[0]) / 0.7, atol=1e-10)


def test_reference_updated_before_guidance(std_cfg):
    x, sched, f, tr = _setup(std_cfg, 5)
    res = mvg_edit(tr, x, f, std_cfg.edit_config(eta=0.5), sched)
    h = sched.step(0)
    m1 = x + res.delta_v_series[0] * h
    v_mvg = (m1 - tr.latents[0]) / (1 - sched.sigmas[0])
    np.testing.assert_allclose(res.v_edit_series[0], 0.5 * res.v_tgt_series[0] + 0.5 * v_mvg, atol=1e-12)


def test_eta_zero_lands_near_reference(std_cfg):
    """Pure guidance pulls the state onto the mobile reference at the end."""
    x, sched, f, tr = _setup(std_cfg, 6)
    res = mvg_edit(tr, x, f, std_cfg.edit_config(eta=0.0), sched)
    far = mvg_edit(tr, x, f, std_cfg.edit_config(eta=1.0), sched)
    gap0 = np.linalg.norm(res.edited - res.mvg_traj[-1])
    assert gap0 < 1e-9
    assert gap0 < np.linalg.norm(far.edited - far.mvg_traj[-1])


def test_no_mvg_equals_eta_one(std_cfg):
    x, sched, f, tr = _setup(std_cfg, 7)
    a = mvg_edit(tr, x, f, std_cfg.edit_config(use_mvg=False, eta=0.3), sched)
    b = mvg_edit(tr, x, f, std_cfg.edit_config(eta=1.0), sched)
    assert np.array_equal(a.edited, b.edited)


def test_config_validation(std_cfg):
    x, sched, f, tr = _setup(std_cfg)
    with pytest.raises(InvalidConfig):
        mvg_edit(tr, x, f, std_cfg.edit_config(eta=1.2), sched)
    with pytest.raises(InvalidConfig):
        mvg_edit(tr, x, f, std_cfg.edit_config(t_start=sched.T), sched)
    with pytest.raises(ScheduleMismatch):
        mvg_edit(tr, x, f, std_cfg.edit_config(), make_schedule(5))


def test_eta_sweep(std_cfg):
    x, sched, f, tr = _setup(std_cfg, 8)
    cfg = std_cfg.edit_config()
    single = mvg_edit(tr, x, f, replace(cfg, eta=1.0), sched)
    (only,) = eta_sweep(tr, x, f, cfg, sched, [1.0])
    assert np.array_equal(only.edited, single.edited)
    a, b = eta_sweep(tr, x, f, cfg, sched, [0.7, 0.7])
    assert np.array_equal(a.edited, b.edited)
    with pytest.raises(InvalidConfig):
        eta_sweep(tr, x, f, cfg, sched, [])


def test_offsets_help_without_guidance(std_cfg):
    """Plain target denoising keeps more background with residual offsets (20-seed mean)."""
    off, no_off = [], []
    for seed in range(20):
        x, sched, f, tr = _setup(std_cfg, seed)
        sc = std_cfg.scenario(x)
        for flag, acc in ((True, off), (False, no_off)):
            res = mvg_edit(tr, x, f, std_cfg.edit_config(use_mvg=False, use_res_offset=flag), sched)
            acc.append(background_mse(res.edited, sc))
    assert np.mean(no_off) > np.mean(off)
