import numpy as np
import pytest

from rfedit.core_math import gauss_logpdf
from rfedit.dna import dna_invert
from rfedit.errors import DimMismatch, InvalidConfig
from rfedit.flow import make_schedule
from rfedit.harness.experiments import draw_source
from rfedit.metrics import EditScenario, background_mse, mse, noise_moments, recon_error_curve, target_loglik
from rfedit.core_math import RngStream
from rfedit.velocity import fixed_test_field


def test_mse_basics():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mse([1.0, 1.0], [0.0, 0.0]) == 1.0
    assert mse([1.0, 5.0], [0.0, 5.0], dims=[1]) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = rng.normal(size=4), rng.normal(size=4)
        assert mse(a, b) == mse(b, a) > 0
    with pytest.raises(DimMismatch):
        mse([1.0], [1.0, 2.0])
    with pytest.raises(DimMismatch):
        mse([1.0, 2.0], [1.0, 2.0], dims=[2])


def test_scenario_validation(std_cfg):
    src, tgt = std_cfg.mixtures["src"], std_cfg.mixtures["tgt"]
    EditScenario(range(6), [6, 7], src, tgt)
    with pytest.raises(InvalidConfig, match="overlap"):
        EditScenario(range(7), [6, 7], src, tgt)
    with pytest.raises(InvalidConfig, match="cover"):
        EditScenario(range(5), [6, 7], src, tgt)
    with pytest.raises(InvalidConfig, match="background marginal"):
        EditScenario([0, 1, 2, 3, 4, 5, 6], [7], src, tgt)


def test_recon_curve(std_cfg):
    sched = std_cfg.schedule()
    with_off, no_first, no_last = [], [], []
    for seed in range(20):
        x, s_T = draw_source(std_cfg, seed)
        f = std_cfg.make_field()
        tr = dna_invert(x, f, std_cfg.src, sched, s_init=s_T)
        c = recon_error_curve(tr, f, std_cfg.src, sched, True)
        assert c.shape == (sched.T,)
        with_off.append(c.max())
        c = recon_error_curve(tr, f, std_cfg.src, sched, False)
        no_first.append(c[0])
        no_last.append(c[-1])
    assert max(with_off) <= 1e-10
    assert np.mean(no_last) > np.mean(no_first)


def test_recon_curve_straight_field_zero():
    x = np.array([1.0, 2.0])
    sched = make_schedule(8)
    f = fixed_test_field("linear_to", x)
    tr = dna_invert(x, f, None, sched, rng=RngStream(0))
    for flag in (True, False):
        assert recon_error_curve(tr, f, None, sched, flag).max() <= 1e-24


def test_noise_moments():
    z = noise_moments(np.zeros(5))
    assert z.mean == 0.0 and z.var == 0.0 and z.degenerate
    c = noise_moments(np.full(4, 3.0))
    assert c.mean == 3.0 and c.var == 0.0 and c.skewness == 0.0 and c.excess_kurtosis == 0.0 and c.degenerate
    m = noise_moments(RngStream(1).standard_normal(10**5))
    assert abs(m.mean) <= 0.02 and abs(m.var - 1) <= 0.02 and not m.degenerate
    with pytest.raises(ValueError):
        noise_moments([1.0])


def test_target_loglik_matches_direct_evaluation(std_cfg):
    sc = std_cfg.scenario()
    tgt = std_cfg.mixtures["tgt"].marginal([6, 7])
    x = np.zeros(8)
    x[6:] = tgt.means[0]
    terms = [np.log(w) + gauss_logpdf(x[6:], tgt.means[k], tgt.covs[k]) for k, w in enumerate(tgt.weights)]
    assert target_loglik(x, sc) == pytest.approx(np.logaddexp.reduce(terms), abs=1e-12)


def test_target_loglik_moves_toward_target(std_cfg):
    sc = std_cfg.scenario()
    src, tgt = std_cfg.mixtures["src"], std_cfg.mixtures["tgt"]
    for k in range(3):
        at_src, at_tgt = np.zeros(8), np.zeros(8)
        at_src[6:], at_tgt[6:] = src.means[k, 6:], tgt.means[k, 6:]
        assert target_loglik(at_tgt, sc) > target_loglik(at_src, sc)


def test_identity_scenario_loglik(std_cfg):
    src = std_cfg.mixtures["src"]
    same = EditScenario(range(6), [6, 7], src, src)
    m = src.marginal([6, 7])
    for seed in range(3):
        x, _ = draw_source(std_cfg, seed)
        terms = [np.log(w) + gauss_logpdf(x[6:], m.means[k], m.covs[k]) for k, w in enumerate(m.weights)]
        assert target_loglik(x, same) == pytest.approx(np.logaddexp.reduce(terms), abs=1e-12)


def test_background_mse_uses_source(std_cfg):
    x, _ = draw_source(std_cfg, 0)
    sc = std_cfg.scenario(x)
    y = x.copy()
    y[6:] += 10
    assert background_mse(y, sc) == 0.0
    y[0] += 6.0
    assert background_mse(y, sc) == pytest.approx(6.0)
    assert background_mse(y, sc, reference=y) == 0.0
