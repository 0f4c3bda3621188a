import numpy as np
import pytest

from rfedit.harness.stats import eta_trend, gap_exceeds, paired_z


def test_paired_z():
    d = np.array([1.0, 2.0, 3.0, 4.0])
    assert paired_z(d) == pytest.approx(2.5 / (np.std(d, ddof=1) / 2))
    assert paired_z(np.zeros(3)) == 0.0
    assert paired_z(np.ones(3)) == np.inf
    with pytest.raises(ValueError):
        paired_z([1.0])
    assert gap_exceeds([3.0, 3.1, 2.9], [1.0, 1.0, 1.0])


def test_trend_detects_monotone_and_reversal():
    rng = np.random.default_rng(0)
    etas = [1.0, 0.9, 0.8, 0.7]
    base = rng.normal(size=(20, 1))
    good = base + np.array(etas) + 0.05 * rng.normal(size=(20, 4))
    assert eta_trend(good, etas).passed
    bad = base - np.array(etas) + 0.05 * rng.normal(size=(20, 4))
    assert not eta_trend(bad, etas).passed
    # strong overall trend with one clearly reversed step still fails
    rev = base + np.array([1.0, 0.5, 0.8, 0.0]) + 0.01 * rng.normal(size=(20, 4))
    r = eta_trend(rev, etas)
    assert r.p_value < 0.05 and not r.passed


def test_trend_single_eta_and_order():
    r = eta_trend(np.ones((5, 1)), [0.8])
    assert r.passed and r.means == (1.0,)
    rng = np.random.default_rng(1)
    v = rng.normal(size=(10, 3)) + np.array([0.7, 0.8, 0.9])
    a, b = eta_trend(v, [0.7, 0.8, 0.9]), eta_trend(v[:, ::-1], [0.9, 0.8, 0.7])
    assert a.p_value == b.p_value and a.etas == b.etas
