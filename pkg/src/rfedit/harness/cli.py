"""Command-line entry point: ``rfedit {reconstruct,edit,sweep-eta,selftest,plot}``."""

import argparse
import os
import sys
from collections import defaultdict

import numpy as np

from ..errors import InvalidConfig, ParseError, RfEditError
from .config import config_from_dict, load_config
from .csvio import CURVE_COLUMNS, write_csv, write_results
from .experiments import run_edit, run_eta_sweep, run_reconstruction, trend_rows
from .plot import emit_plot
from .presets import PRESETS, preset
from .selftest import report, run_selftest

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
DEFAULT_OUT = "rfedit_out"

TRACE_COLUMNS = ("method", "seed", "t", "sigma", "s_norm", "latent_norm", "offset_norm", "delta_v_norm", "v_src_norm")
EDIT_STEP_COLUMNS = ("method", "seed", "t", "sigma", "v_tgt_norm", "v_edit_norm", "delta_v_norm", "reference_gap")
TREND_COLUMNS = ("metric", "eta", "mean", "spearman_rho", "p_value", "max_reverse_z", "passed")


class _ConfigProblem(Exception):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="rfedit", description="Rectified-flow inversion and editing experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--config", help="JSON scenario file")
            g.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario (default: standard)")
            sp.add_argument("--seed-offset", type=int, default=0, help="add N to every seed")
            sp.add_argument("--timing", action="store_true", help="fill wall_time_ms (output is then not reproducible)")
        sp.add_argument("--out", help=f"output directory (default: config output.dir or {DEFAULT_OUT})")

    common(sub.add_parser("reconstruct", help="invert and re-denoise with each method"))
    common(sub.add_parser("edit", help="ablation combos 1-6"))
    sp = sub.add_parser("sweep-eta", help="full method over several eta values")
    common(sp)
    sp.add_argument("--etas", help="comma-separated list (default: config edit.etas)")
    sp = sub.add_parser("selftest", help="run the invariant suite")
    common(sp, config=False)
    sp.add_argument("--mutate-linear-sign", action="store_true", help=argparse.SUPPRESS)
    sp = sub.add_parser("plot", help="SVG of reconstruction-error curves")
    common(sp, config=False)
    sp.add_argument("inputs", nargs="*", help="curve CSVs (default: <out>/curves.csv)")
    sp.add_argument("--output", help="SVG path (default: <out>/curves.svg)")
    return p


def _load(args):
    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = config_from_dict(preset(args.preset or "standard"))
    except OSError as e:
        raise _ConfigProblem(f"{args.config}: {e.strerror or e}") from None
    except (ParseError, InvalidConfig) as e:
        raise _ConfigProblem(str(e)) from None
    if args.seed_offset:
        if any(s + args.seed_offset < 0 for s in cfg.seeds):
            raise _ConfigProblem("--seed-offset makes a seed negative")
        cfg = cfg.with_seed_offset(args.seed_offset)
    return cfg


def _out_dir(args, cfg=None):
    out = args.out or (cfg.out_dir if cfg is not None and cfg.out_dir else None) or DEFAULT_OUT
    os.makedirs(out, exist_ok=True)
    return out


def _summary(rows, key="terminal_mse"):
    acc = defaultdict(list)
    for r in rows:
        v = getattr(r, key)
        if v is not None:
            acc[r.method].append(v)
    for m in sorted(acc):
        v = np.array(acc[m])
        print(f"{m:<12s} n={v.size:<3d} mean {key}={v.mean():.6g}")


def _cmd_reconstruct(args):
    cfg = _load(args)
    out = run_reconstruction(cfg, timing=args.timing)
    d = _out_dir(args, cfg)
    write_results(os.path.join(d, "reconstruction.csv"), out.rows)
    write_csv(os.path.join(d, "curves.csv"), CURVE_COLUMNS, out.curves)
    write_csv(os.path.join(d, "trace_steps.csv"), TRACE_COLUMNS, out.steps)
    _summary(out.rows)
    return EXIT_OK


def _cmd_edit(args):
    cfg = _load(args)
    out = run_edit(cfg, timing=args.timing)
    d = _out_dir(args, cfg)
    write_results(os.path.join(d, "edit.csv"), out.rows)
    write_csv(os.path.join(d, "edit_steps.csv"), EDIT_STEP_COLUMNS, out.steps)
    _summary(out.rows, "background_mse")
    return EXIT_OK


def _cmd_sweep(args):
    cfg = _load(args)
    etas = None
    if args.etas:
        try:
            etas = [float(x) for x in args.etas.split(",")]
        except ValueError:
            raise _ConfigProblem(f"--etas: cannot parse {args.etas!r}") from None
        if any(not 0.0 <= e <= 1.0 for e in etas):
            raise _ConfigProblem("--etas values must lie in [0, 1]")
    out = run_eta_sweep(cfg, etas, timing=args.timing)
    d = _out_dir(args, cfg)
    write_results(os.path.join(d, "sweep.csv"), out.rows)
    write_csv(os.path.join(d, "trend.csv"), TREND_COLUMNS, trend_rows(out.trend))
    for name, tr in sorted(out.trend.items()):
        means = " ".join(f"{e:g}:{m:.6g}" for e, m in zip(tr.etas, tr.means))
        print(f"{name:<15s} {'pass' if tr.passed else 'fail'} p={tr.p_value:.3g} means {means}")
    return EXIT_OK


def _cmd_selftest(args):
    checks = run_selftest(-1.0 if args.mutate_linear_sign else 1.0)
    text = report(checks)
    sys.stdout.write(text)
    if args.out:
        d = _out_dir(args)
        with open(os.path.join(d, "selftest.txt"), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


def _cmd_plot(args):
    d = args.out or DEFAULT_OUT
    inputs = args.inputs or [os.path.join(d, "curves.csv")]
    target = args.output or os.path.join(d, "curves.svg")
    try:
        emit_plot(inputs, target)
    except ParseError as e:
        raise _ConfigProblem(str(e)) from None
    print(target)
    return EXIT_OK


COMMANDS = {
    "reconstruct": _cmd_reconstruct,
    "edit": _cmd_edit,
    "sweep-eta": _cmd_sweep,
    "selftest": _cmd_selftest,
    "plot": _cmd_plot,
}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except _ConfigProblem as e:
        print(f"rfedit: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (RfEditError, ArithmeticError, ValueError, OSError) as e:
        print(f"rfedit: runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
