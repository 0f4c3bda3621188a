from dataclasses import replace

import numpy as np
import pytest

from rfedit.errors import RunFailed
from rfedit.harness.config import config_from_dict
from rfedit.harness.csvio import RESULT_COLUMNS, render
from rfedit.harness.experiments import (
    COMBO_FLAGS,
    combo_label,
    run_edit,
    run_eta_sweep,
    run_reconstruction,
)
from rfedit.harness.presets import preset


def _rows_text(rows):
    from dataclasses import astuple

    return render(RESULT_COLUMNS, [astuple(r) for r in rows])


def test_reconstruction_rows_sorted_and_counted(tiny_cfg):
    out = run_reconstruction(tiny_cfg)
    keys = [(r.method, r.seed) for r in out.rows]
    assert keys == sorted(keys) and len(keys) == 4 * 3
    T = tiny_cfg.T
    for r in out.rows:
        want = {"dna": 2 * T, "fixed_noise": 2 * T, "vanilla": 2 * T, "midpoint": 4 * (T // 2)}[r.method]
        assert r.NFE == want
        assert r.wall_time_ms is None
    assert len(out.curves) == 3 * (3 * T + T // 2)


def test_dna_only_is_exact(std_cfg):
    cfg = replace(std_cfg, methods=("dna",), seeds=(5,))
    (row,) = run_reconstruction(cfg).rows
    assert row.terminal_mse <= 1e-10


def test_zero_field_everything_exact():
    raw = preset("tiny")
    raw["field"] = "zero"
    for r in run_reconstruction(config_from_dict(raw)).rows:
        assert r.terminal_mse == 0.0


def test_reconstruction_ordering_on_standard(std_cfg):
    rows = run_reconstruction(std_cfg).rows
    m = {k: np.mean([r.terminal_mse for r in rows if r.method == k]) for k in std_cfg.methods}
    assert m["dna"] < m["midpoint"] < m["vanilla"]


def test_threads_do_not_change_output(tiny_cfg, monkeypatch):
    monkeypatch.setenv("RFEDIT_THREADS", "1")
    a = _rows_text(run_reconstruction(tiny_cfg).rows)
    monkeypatch.setenv("RFEDIT_THREADS", "4")
    b = _rows_text(run_reconstruction(tiny_cfg).rows)
    assert a == b


def test_timing_is_opt_in(tiny_cfg):
    rows = run_reconstruction(replace(tiny_cfg, seeds=(0,)), timing=True).rows
    assert all(r.wall_time_ms is not None and r.wall_time_ms >= 0 for r in rows)


def test_combo_labels():
    assert [combo_label(c) for c in sorted(COMBO_FLAGS)] == [
        "fixed_noise", "dna", "fixed_noise+offsets", "dna+offsets", "dna+mvg", "dna+offsets+mvg"]


def test_edit_rows(std_cfg):
    cfg = replace(std_cfg, seeds=(0, 1))
    rows = run_edit(cfg).rows
    assert [(r.method, r.seed) for r in rows] == [(f"combo{c}", s) for c in range(1, 7) for s in (0, 1)]
    for r in rows:
        assert r.NFE == 2 * cfg.T
        assert r.background_mse is not None and r.target_loglik is not None
        assert r.eta == (cfg.eta if COMBO_FLAGS[int(r.method[-1])][2] else 1.0)


def test_identity_edit_keeps_background(std_cfg):
    cfg = replace(std_cfg, tgt_cond=std_cfg.src_cond, eta=1.0, combos=(6,), seeds=(0, 1, 2))
    for r in run_edit(cfg).rows:
        assert r.background_mse <= 1e-10


def test_full_method_beats_no_guidance(std_cfg):
    rows = run_edit(replace(std_cfg, combos=(1, 4, 6))).rows
    m = {c: np.mean([r.background_mse for r in rows if r.method == f"combo{c}"]) for c in (1, 4, 6)}
    assert m[6] < m[4] and m[6] < m[1]


def test_sweep_single_eta(std_cfg):
    out = run_eta_sweep(replace(std_cfg, seeds=(0, 1, 2)), [0.8])
    assert [r.eta for r in out.rows] == [0.8] * 3
    assert all("trend=pass" in r.flags for r in out.rows)


def test_sweep_eta_one_ignores_reference_init(std_cfg):
    cfg = replace(std_cfg, seeds=(0, 1))
    a = run_eta_sweep(cfg, [1.0]).rows
    b = run_eta_sweep(cfg, [1.0], mvg_init=np.full(cfg.d, 7.0)).rows
    assert _rows_text(a) == _rows_text(b)


def test_sweep_trend_on_standard(std_cfg):
    out = run_eta_sweep(std_cfg, [1.0, 0.9, 0.8, 0.7])
    assert len(out.rows) == 4 * 20
    assert out.trend["background_mse"].passed
    assert out.trend["target_loglik"].passed


def test_sweep_rejects_bad_etas(std_cfg):
    with pytest.raises(ValueError):
        run_eta_sweep(std_cfg, [])
    with pytest.raises(ValueError):
        run_eta_sweep(std_cfg, [1.5])


def test_failures_name_the_run(tiny_cfg):
    broken = replace(tiny_cfg, src_cond=replace(tiny_cfg.src_cond, mixture="gone"), seeds=(3,), methods=("dna",))
    with pytest.raises(RunFailed, match="method=dna seed=3"):
        run_reconstruction(broken)
