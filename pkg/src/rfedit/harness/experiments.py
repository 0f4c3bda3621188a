"""Experiment orchestration: reconstruction, ablation edits and eta sweeps.

Every (method, seed) cell is an independent run with its own field and
random stream, so cells may execute on a thread pool. Results are collected
and sorted before anything is written.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..baselines import fixed_noise_trace, midpoint_forward, midpoint_invert
from ..core_math import RngStream, sample_standard_normal
from ..dna import dna_invert, reconstruct_path
from ..errors import RfEditError, RunFailed
from ..flow import euler_forward, vanilla_invert
from ..metrics import background_mse, mse, target_loglik
from ..mvg import mvg_edit
from .csvio import ResultRow
from .stats import eta_trend

# combo -> (trace kind, residual offsets, mobile guidance)
COMBO_FLAGS = {
    1: ("fixed_noise", False, False),
    2: ("dna", False, False),
    3: ("fixed_noise", True, False),
    4: ("dna", True, False),
    5: ("dna", False, True),
    6: ("dna", True, True),
}


def combo_label(combo):
    kind, off, mvg = COMBO_FLAGS[combo]
    return "+".join([kind] + (["offsets"] if off else []) + (["mvg"] if mvg else []))


def thread_count():
    raw = os.environ.get("RFEDIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fan_out(fn, cells):
    n = min(thread_count(), len(cells))
    if n <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, cells))


def _guard(run_id, fn, *args):
    try:
        return fn(*args)
    except RfEditError as e:
        raise RunFailed(run_id, e) from e
    except (ArithmeticError, KeyError, ValueError, np.linalg.LinAlgError) as e:
        raise RunFailed(run_id, e) from e


def draw_source(cfg, seed):
    """Source point and start noise for ``seed``; shared by every method."""
    rng = RngStream(seed)
    x = cfg.mixtures[cfg.src_cond.mixture].sample(rng)
    s_T = sample_standard_normal(rng, cfg.d)
    return x, s_T


def _norm(a):
    return np.sqrt(np.sum(np.asarray(a) ** 2, axis=-1))


@dataclass
class RunOutput:
    rows: list
    curves: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    trend: dict = field(default_factory=dict)


# -- reconstruction

def _trace_steps(method, seed, tr):
    sig = tr.sigmas
    sn, zn = _norm(tr.s_series), _norm(tr.latents)
    on, dn, vn = _norm(tr.offsets), _norm(tr.delta_v), _norm(tr.src_velocities)
    return [(method, seed, t, float(sig[t]), float(sn[t]), float(zn[t]), float(on[t]), float(dn[t]), float(vn[t]))
            for t in range(tr.T)]


def _recon_cell(cfg, method, seed, timing):
    x, s_T = draw_source(cfg, seed)
    fld = cfg.make_field()
    cond = cfg.src
    t0 = time.perf_counter()
    steps = []
    if method in ("dna", "fixed_noise"):
        sched = cfg.schedule()
        if method == "dna":
            tr, use_off, flags = dna_invert(x, fld, cond, sched, s_init=s_T), True, "offsets"
        else:
            tr, use_off, flags = fixed_noise_trace(x, fld, cond, sched, s_init=s_T), False, "no_offsets"
        path, _ = reconstruct_path(tr, fld, cond, sched, use_off)
        ref, final = tr.latents, path[-1]
        steps = _trace_steps(method, seed, tr)
    elif method == "vanilla":
        sched = cfg.schedule()
        inv = vanilla_invert(x, fld, cond, sched)
        path = euler_forward(inv.initial, 0, fld, cond, sched).states
        ref, final, flags = inv.states, path[-1], ""
    elif method == "midpoint":
        # two evaluations per step, so half the steps for the same budget
        sched = cfg.schedule(max(1, cfg.T // 2))
        inv = midpoint_invert(x, fld, cond, sched)
        path = midpoint_forward(inv.initial, fld, cond, sched).states
        ref, final, flags = inv.states, path[-1], f"steps={sched.T}"
    else:
        raise ValueError(f"unknown method {method!r}")
    wall = (time.perf_counter() - t0) * 1e3 if timing else None
    errs = np.mean((path[1:] - ref[1:]) ** 2, axis=1)
    curve = [(method, seed, t + 1, float(sched.sigmas[t + 1]), float(e)) for t, e in enumerate(errs)]
    row = ResultRow(method, seed, sched.T, fld.nfe, mse(final, x), None, None, None, flags, wall)
    return row, curve, steps


def run_reconstruction(cfg, timing=False):
    cells = [(m, s) for m in sorted(cfg.methods) for s in sorted(cfg.seeds)]
    res = _fan_out(lambda c: _guard(f"reconstruct method={c[0]} seed={c[1]}", _recon_cell, cfg, c[0], c[1], timing), cells)
    rows = sorted((r[0] for r in res), key=lambda r: (r.method, r.seed))
    curves = sorted((p for r in res for p in r[1]), key=lambda p: (p[0], p[1], p[2]))
    steps = sorted((p for r in res for p in r[2]), key=lambda p: (p[0], p[1], p[2]))
    return RunOutput(rows, curves, steps)


# -- editing

def _edit_cell(cfg, combo, seed, eta, timing, mvg_init=None):
    kind, use_off, use_mvg = COMBO_FLAGS[combo]
    x, s_T = draw_source(cfg, seed)
    fld = cfg.make_field()
    sched = cfg.schedule()
    t0 = time.perf_counter()
    invert = dna_invert if kind == "dna" else fixed_noise_trace
    tr = invert(x, fld, cfg.src, sched, s_init=s_T)
    ecfg = cfg.edit_config(eta=eta, use_res_offset=use_off, use_mvg=use_mvg)
    res = mvg_edit(tr, x, fld, ecfg, sched, mvg_init=mvg_init)
    wall = (time.perf_counter() - t0) * 1e3 if timing else None
    scen = cfg.scenario(x)
    ll = target_loglik(res.edited, scen) if scen.dims_edit else None
    bg = background_mse(res.edited, scen) if scen.dims_background else None
    eff_eta = eta if use_mvg else 1.0
    row = ResultRow(f"combo{combo}", seed, sched.T, fld.nfe, mse(res.edited, x), bg, ll, eff_eta,
                    combo_label(combo), wall)
    sig = sched.sigmas
    gap = _norm(res.mvg_traj[:-1] - res.edit_traj[:-1])
    steps = [
        (f"combo{combo}", seed, t, float(sig[t]), float(_norm(res.v_tgt_series[i])),
         float(_norm(res.v_edit_series[i])), float(_norm(res.delta_v_series[i])), float(gap[i]))
        for i, t in enumerate(range(cfg.t_s, sched.T))
    ]
    return row, steps


def run_edit(cfg, timing=False):
    cells = [(c, s) for c in sorted(cfg.combos) for s in sorted(cfg.seeds)]
    res = _fan_out(
        lambda c: _guard(f"edit combo={c[0]} seed={c[1]}", _edit_cell, cfg, c[0], c[1], cfg.eta, timing), cells)
    rows = sorted((r[0] for r in res), key=lambda r: (r.method, r.seed))
    steps = sorted((p for r in res for p in r[1]), key=lambda p: (p[0], p[1], p[2]))
    return RunOutput(rows, steps=steps)


def run_eta_sweep(cfg, etas=None, timing=False, mvg_init=None):
    """Full method (offsets + guidance) at each eta; rows carry the trend flags."""
    etas = tuple(cfg.etas if etas is None else etas)
    if not etas:
        raise ValueError("etas must be non-empty")
    if any(not 0.0 <= e <= 1.0 for e in etas):
        raise ValueError(f"etas must lie in [0, 1], got {etas}")
    seeds = sorted(cfg.seeds)
    cells = [(e, s) for e in etas for s in seeds]
    res = _fan_out(
        lambda c: _guard(f"sweep eta={c[0]} seed={c[1]}", _edit_cell, cfg, 6, c[1], c[0], timing, mvg_init)[0],
        cells,
    )
    trend = {}
    scen = cfg.scenario()
    metrics = []
    if scen.dims_background:
        metrics.append(("background_mse", lambda r: r.background_mse))
    if scen.dims_edit:
        metrics.append(("target_loglik", lambda r: r.target_loglik))
    uniq = sorted(set(etas), reverse=True)
    by = {(r.eta, r.seed): r for r in res}
    for name, get in metrics:
        vals = np.array([[get(by[(e, s)]) for e in uniq] for s in seeds])
        trend[name] = eta_trend(vals, uniq)
    tag = ";".join(f"{k}_trend={'pass' if v.passed else 'fail'}" for k, v in trend.items())
    rows = []
    for r in res:
        flags = r.flags + (";" + tag if tag else "")
        rows.append(ResultRow("sweep", r.seed, r.T, r.NFE, r.terminal_mse, r.background_mse,
                              r.target_loglik, r.eta, flags, r.wall_time_ms))
    # duplicates in ``etas`` collapse to one row per (eta, seed)
    rows = sorted({(r.eta, r.seed): r for r in rows}.values(), key=lambda r: (-r.eta, r.seed))
    return RunOutput(rows, trend=trend)


def trend_rows(trend):
    out = []
    for name in sorted(trend):
        tr = trend[name]
        for e, m in zip(tr.etas, tr.means):
            out.append((name, e, m, tr.rho, tr.p_value, tr.max_reverse_z, tr.passed))
    return out
