"""Invariant suite run on the built-in presets, one report line per invariant."""

from dataclasses import astuple, dataclass

import numpy as np

from ..baselines import fixed_noise_trace, flowedit, midpoint_invert
from ..core_math import RngStream, cholesky, gauss_logpdf
from ..dna import dna_invert, reconstruct_path
from ..flow import euler_forward, interpolate_latent, vanilla_invert
from ..metrics import mse, recon_error_curve
from ..mvg import mvg_edit
from ..velocity import Condition, GaussianMixture, MixtureField, fixed_test_field, mixture_velocity
from .config import config_from_dict
from .csvio import RESULT_COLUMNS, render
from .experiments import draw_source, run_reconstruction
from .presets import preset

SEEDS = (0, 1, 2)


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name:<44s} residual={self.residual:.3e} tol={self.tol:.1e}"


def _cost(cond):
    return 1 if cond.guidance_scale == 1.0 else 2


def _rel(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def _core_checks():
    rng = RngStream(11)
    res_chol, res_perm = 0.0, 0.0
    for d in (1, 3, 8):
        a = rng.standard_normal((d, d))
        m = a @ a.T + d * np.eye(d)
        L = cholesky(m)
        res_chol = max(res_chol, _rel(L @ L.T, m))
        x, mu = rng.standard_normal(d), rng.standard_normal(d)
        p = np.arange(d)[::-1]
        lp = gauss_logpdf(x, mu, m)
        res_perm = max(res_perm, abs(gauss_logpdf(x[p], mu[p], m[np.ix_(p, p)]) - lp) / max(1.0, abs(lp)))
    a, b = RngStream(5).standard_normal(16), RngStream(5).standard_normal(16)
    return [
        Check("core_math.cholesky_reconstructs", res_chol, 1e-12),
        Check("core_math.logpdf_permutation_invariant", res_perm, 1e-12),
        Check("core_math.rng_replay", float(np.max(np.abs(a - b))), 0.0),
    ]


def _velocity_checks(mix):
    rng = RngStream(12)
    z = rng.standard_normal((6, mix.d))
    res_sum = 0.0
    for s in (0.0, 0.3, 0.9, 1.0):
        _, r = mixture_velocity(z, s, mix, return_resp=True)
        res_sum = max(res_sum, float(np.max(np.abs(r.sum(axis=1) - 1.0))))
    end1 = _rel(mixture_velocity(z, 1.0, mix), z)
    end0 = _rel(mixture_velocity(z, 0.0, mix), mix.mean()[None] - z)
    one = GaussianMixture([1.0], mix.means[:1], mix.covs[:1])
    res_k1 = 0.0
    for s in (0.2, 0.7):
        C = s * s * one.covs[0] + (1 - s) ** 2 * np.eye(mix.d)
        A = s * one.covs[0] - (1 - s) * np.eye(mix.d)
        ref = one.means[0] + (A @ np.linalg.solve(C, (z - s * one.means[0]).T)).T
        res_k1 = max(res_k1, _rel(mixture_velocity(z, s, one), ref))
    f = MixtureField({"a": mix})
    f(z[0], 0.5, Condition("a"))
    c1 = f.nfe
    f(z[0], 0.5, Condition("a", 2.0))
    res_cnt = abs(c1 - 1) + abs(f.nfe - c1 - 2)
    return [
        Check("velocity.responsibilities_sum_to_one", res_sum, 1e-12),
        Check("velocity.identity_at_sigma_one", end1, 1e-9),
        Check("velocity.mean_minus_z_at_sigma_zero", end0, 1e-12),
        Check("velocity.single_gaussian_closed_form", res_k1, 1e-10),
        Check("velocity.counter_cost_1_or_2", float(res_cnt), 0.0),
    ]


def _flow_checks(cfg):
    sched = cfg.schedule()
    rng = RngStream(13)
    a, b = rng.standard_normal(cfg.d), rng.standard_normal(cfg.d)
    res_aff = 0.0
    for t in range(sched.T):
        s0, s1 = sched.sigmas[t], sched.sigmas[t + 1]
        zs = interpolate_latent(a, b, s0, s1)
        res_aff = max(res_aff, _rel(zs, (s0 / s1) * a + (1 - s0 / s1) * b))
    f = cfg.make_field()
    euler_forward(a, 0, f, cfg.src, sched)
    n1 = f.nfe
    vanilla_invert(a, f, cfg.src, sched)
    res_nfe = abs(n1 - sched.T) + abs(f.nfe - n1 - sched.T)
    x0 = rng.standard_normal(cfg.d)
    lin = euler_forward(b, 0, fixed_test_field("linear_to", x0), None, sched).terminal
    return [
        Check("flow.interpolation_affine", res_aff, 1e-12),
        Check("flow.euler_and_vanilla_nfe_T", float(res_nfe), 0.0),
        Check("flow.straight_field_hits_target", _rel(lin, x0), 1e-12),
    ]


def _dna_checks(cfgs, linear_sign):
    res = dict(trace=0.0, offset=0.0, ratio=0.0, align=0.0, recon=0.0, nfe=0, curve=0.0, lin=0.0)
    for cfg in cfgs:
        sched = cfg.schedule()
        sig = sched.sigmas
        for seed in SEEDS:
            x, s_T = draw_source(cfg, seed)
            f = cfg.make_field()
            tr = dna_invert(x, f, cfg.src, sched, s_init=s_T, linear_sign=linear_sign)
            n_inv = f.nfe
            path, n_rec = reconstruct_path(tr, f, cfg.src, sched, True)
            k = _cost(cfg.src)
            res["nfe"] += abs(n_inv - k * sched.T) + abs(n_rec - k * sched.T)
            res["recon"] = max(res["recon"], float(np.linalg.norm(path[-1] - x) / max(np.linalg.norm(x), 1e-300)))
            h = np.diff(sig)[:, None]
            vel = (tr.latents[1:] - tr.latents[:-1]) / h
            res["trace"] = max(res["trace"], _rel(vel, tr.src_velocities))
            res["offset"] = max(res["offset"], _rel(tr.latents[:-1] - tr.z_star, tr.delta_v * h))
            dz = tr.latents[:-1] - tr.z_star
            ds = tr.s_series[:-1] - tr.s_series[1:]
            ok = np.abs(dz) > 1e-8
            want = np.broadcast_to((sig[1:] / np.diff(sig))[:, None], dz.shape)
            if ok.any():
                res["ratio"] = max(res["ratio"], float(np.max(np.abs(ds[ok] / dz[ok] - want[ok]) / want[ok])))
            post = (tr.latents[1:] - tr.s_series[:-1]) / sig[1:, None]
            res["align"] = max(res["align"], _rel(post, tr.src_velocities))
            curve = recon_error_curve(tr, cfg.make_field(), cfg.src, sched, True)
            res["curve"] = max(res["curve"], float(curve.max()))
            lf = fixed_test_field("linear_to", x)
            tl = dna_invert(x, lf, None, sched, s_init=s_T, linear_sign=linear_sign)
            res["lin"] = max(res["lin"], float(np.max(np.abs(tl.delta_v))))
    return [
        Check("dna.trace_velocity_identity", res["trace"], 1e-10),
        Check("dna.offset_equals_delta_v_times_step", res["offset"], 1e-9),
        Check("dna.noise_latent_ratio_rule", res["ratio"], 1e-9),
        Check("dna.post_step_alignment", res["align"], 1e-12),
        Check("dna.exact_reconstruction", res["recon"], 1e-6),
        Check("dna.nfe_invert_and_reconstruct_T", float(res["nfe"]), 0.0),
        Check("dna.recon_curve_with_offsets", res["curve"], 1e-10),
        Check("dna.zero_gap_on_straight_field", res["lin"], 1e-9),
    ]


def _edit_checks(cfg, label):
    sched = cfg.schedule()
    res = dict(nfe=0, eta1=0.0, ident=0.0, blend=0.0, fe=0.0, para=0.0, mid=0, fix=0)
    for seed in SEEDS:
        x, s_T = draw_source(cfg, seed)
        f = cfg.make_field()
        tr = dna_invert(x, f, cfg.src, sched, s_init=s_T)
        n0 = f.nfe
        e = mvg_edit(tr, x, f, cfg.edit_config(), sched)
        res["nfe"] += abs(f.nfe - n0 - _cost(cfg.tgt) * (sched.T - cfg.t_s))
        ev = e.v_edit_series
        vm = (e.mvg_traj[1:] - e.edit_traj[:-1]) / (1.0 - sched.sigmas[cfg.t_s:-1, None])
        res["blend"] = max(res["blend"], _rel(ev, cfg.eta * e.v_tgt_series + (1 - cfg.eta) * vm))
        a = mvg_edit(tr, x, f, cfg.edit_config(eta=1.0), sched)
        b = mvg_edit(tr, x, f, cfg.edit_config(eta=1.0), sched, mvg_init=x + 3.0)
        res["eta1"] = max(res["eta1"], float(np.max(np.abs(a.edited - b.edited))))
        same = mvg_edit(tr, x, f, cfg.edit_config(eta=1.0, t_start=0, tgt_cond=cfg.src), sched)
        res["ident"] = max(res["ident"], mse(same.edited, x))
        full = mvg_edit(tr, x, f, cfg.edit_config(eta=1.0, t_start=0), sched)
        fe = flowedit(x, f, cfg.src, cfg.tgt, sched, noise_mode="aligned", trace=tr)
        res["fe"] = max(res["fe"], _rel(fe.edited, full.edited))
        res["para"] = max(res["para"], _rel(fe.z_tgt - fe.z_src, fe.fe_states[:-1] - x))
        g = cfg.make_field()
        midpoint_invert(x, g, cfg.src, sched)
        res["mid"] += abs(g.nfe - 2 * sched.T * _cost(cfg.src))
        g = cfg.make_field()
        fixed_noise_trace(x, g, cfg.src, sched, s_init=s_T)
        res["fix"] += abs(g.nfe - sched.T * _cost(cfg.src))
    checks = [
        Check("mvg.nfe_T_minus_t_start", float(res["nfe"]), 0.0),
        Check("mvg.velocity_blend_affine", res["blend"], 1e-12),
        Check("mvg.eta_one_ignores_reference", res["eta1"], 0.0),
        Check("mvg.identity_edit_returns_source", res["ident"], 1e-10),
        Check("baselines.aligned_flowedit_equals_mvg", res["fe"], 1e-6),
        Check("baselines.flowedit_parallelogram", res["para"], 1e-9),
        Check("baselines.midpoint_nfe_2T", float(res["mid"]), 0.0),
        Check("baselines.fixed_noise_nfe_T", float(res["fix"]), 0.0),
    ]
    return [Check(f"{c.name}[{label}]", c.residual, c.tol) for c in checks]


def _harness_checks():
    raw = preset("tiny")
    cfg = config_from_dict(raw)
    a = render(RESULT_COLUMNS, [astuple(r) for r in run_reconstruction(cfg).rows])
    b = render(RESULT_COLUMNS, [astuple(r) for r in run_reconstruction(cfg).rows])
    raw["field"] = "zero"
    zero = run_reconstruction(config_from_dict(raw)).rows
    expect = {"dna": 2 * cfg.T, "fixed_noise": 2 * cfg.T, "vanilla": 2 * cfg.T, "midpoint": 4 * max(1, cfg.T // 2)}
    rows = run_reconstruction(cfg).rows
    return [
        Check("harness.rows_deterministic", 0.0 if a == b else 1.0, 0.0),
        Check("harness.row_nfe_matches_counter", float(sum(abs(r.NFE - expect[r.method]) for r in rows)), 0.0),
        Check("harness.zero_field_all_exact", max(r.terminal_mse for r in zero), 0.0),
    ]


def run_selftest(linear_sign=1.0):
    """Return the list of checks; ``linear_sign != 1`` injects a known bug."""
    tiny = config_from_dict(preset("tiny"))
    std = config_from_dict(preset("standard"))
    flux = config_from_dict(preset("flux-scale"))
    checks = []
    checks += _core_checks()
    checks += _velocity_checks(std.mixtures["src"])
    checks += _flow_checks(std)
    checks += _dna_checks([tiny, std, flux], linear_sign)
    checks += _edit_checks(std, "standard")
    checks += _edit_checks(flux, "flux-scale")
    checks += _harness_checks()
    return checks


def report(checks):
    lines = [c.line() for c in checks]
    n_ok = sum(c.passed for c in checks)
    lines.append(f"{n_ok}/{len(checks)} invariants passed")
    return "\n".join(lines) + "\n"
