"""JSON scenario files: parsing, validation, defaults and serialisation.

Schema (keys not listed are rejected)::

    {
      "d": 8,                                   # required, 1..64
      "mixtures": {"<name>": {"weights": [...], "means": [[...]], "covs": [[[...]]]}},
      "src_cond": {"mixture": "<name>", "guidance_scale": 1.0, "uncond": null},
      "tgt_cond": {...},                        # defaults to src_cond
      "uncond": null,                           # mixture used when a guided condition names none
      "field": "mixture",                       # or "zero" (test double)
      "schedule": {"T": 28, "spacing": "uniform", "shift": 1.0},
      "edit": {"eta": 0.8, "t_s": 0, "use_res_offset": true, "use_mvg": true,
               "combos": [1, 2, 3, 4, 5, 6], "etas": [1.0, 0.9, 0.8, 0.7]},
      "scenario": {"dims_background": [...], "dims_edit": [...]},
      "seeds": [0],
      "methods": ["dna", "fixed_noise", "midpoint", "vanilla"],
      "output": {"dir": "out"}
    }
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from ..core_math import MAX_DIM
from ..errors import InvalidConfig, ParseError, ValidationError
from ..flow import make_schedule
from ..metrics import EditScenario
from ..mvg import DEFAULT_ETA, EditConfig
from ..velocity import Condition, GaussianMixture, MixtureField, fixed_test_field

METHODS = ("dna", "fixed_noise", "midpoint", "vanilla")
FIELD_KINDS = ("mixture", "zero")
COMBOS = (1, 2, 3, 4, 5, 6)
DEFAULT_ETAS = (1.0, 0.9, 0.8, 0.7)

_TOP_KEYS = {"d", "mixtures", "src_cond", "tgt_cond", "uncond", "field", "schedule", "edit",
             "scenario", "seeds", "methods", "output"}
_MIX_KEYS = {"weights", "means", "covs"}
_COND_KEYS = {"mixture", "guidance_scale", "uncond"}
_SCHED_KEYS = {"T", "spacing", "shift"}
_EDIT_KEYS = {"eta", "t_s", "use_res_offset", "use_mvg", "combos", "etas"}
_SCEN_KEYS = {"dims_background", "dims_edit"}
_OUT_KEYS = {"dir"}


@dataclass(frozen=True, eq=False)
class CondSpec:
    mixture: str
    guidance_scale: float = 1.0
    uncond: str = None


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    d: int
    mixtures: dict
    src_cond: CondSpec
    tgt_cond: CondSpec
    uncond: str = None
    field_kind: str = "mixture"
    T: int = 28
    spacing: str = "uniform"
    shift: float = 1.0
    eta: float = DEFAULT_ETA
    t_s: int = 0
    use_res_offset: bool = True
    use_mvg: bool = True
    combos: tuple = COMBOS
    etas: tuple = DEFAULT_ETAS
    dims_background: tuple = ()
    dims_edit: tuple = ()
    seeds: tuple = (0,)
    methods: tuple = METHODS
    out_dir: str = None

    # -- builders used by the experiments

    def schedule(self, T=None):
        return make_schedule(self.T if T is None else T, self.spacing, self.shift)

    def _cond(self, spec):
        uid = spec.uncond if spec.uncond is not None else self.uncond
        return Condition(spec.mixture, spec.guidance_scale, uid)

    @property
    def src(self):
        return self._cond(self.src_cond)

    @property
    def tgt(self):
        return self._cond(self.tgt_cond)

    def make_field(self):
        """A fresh field, so each run owns its evaluation counter."""
        if self.field_kind == "zero":
            return fixed_test_field("zero")
        return MixtureField(self.mixtures)

    def edit_config(self, **overrides):
        cfg = EditConfig(self.src, self.tgt, self.eta, self.t_s, self.use_res_offset, self.use_mvg)
        return replace(cfg, **overrides)

    def scenario(self, source=None):
        return EditScenario(
            self.dims_background, self.dims_edit,
            self.mixtures[self.src_cond.mixture], self.mixtures[self.tgt_cond.mixture], source,
        )

    def with_seed_offset(self, n):
        return replace(self, seeds=tuple(s + n for s in self.seeds))

    # -- serialisation

    def to_dict(self):
        def cond(c):
            return {"mixture": c.mixture, "guidance_scale": c.guidance_scale, "uncond": c.uncond}

        out = {
            "d": self.d,
            "mixtures": {k: m.to_dict() for k, m in self.mixtures.items()},
            "src_cond": cond(self.src_cond),
            "tgt_cond": cond(self.tgt_cond),
            "uncond": self.uncond,
            "field": self.field_kind,
            "schedule": {"T": self.T, "spacing": self.spacing, "shift": self.shift},
            "edit": {
                "eta": self.eta, "t_s": self.t_s,
                "use_res_offset": self.use_res_offset, "use_mvg": self.use_mvg,
                "combos": list(self.combos), "etas": list(self.etas),
            },
            "scenario": {"dims_background": list(self.dims_background), "dims_edit": list(self.dims_edit)},
            "seeds": list(self.seeds),
            "methods": list(self.methods),
        }
        if self.out_dir is not None:
            out["output"] = {"dir": self.out_dir}
        return out

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def __eq__(self, other):
        return isinstance(other, ScenarioConfig) and self.dumps() == other.dumps()

    __hash__ = None


class _Checker:
    """Collects every problem instead of stopping at the first."""

    def __init__(self):
        self.problems = []

    def add(self, where, msg):
        self.problems.append(f"{where}: {msg}")

    def keys(self, obj, allowed, where):
        if not isinstance(obj, dict):
            self.add(where, f"expected an object, got {type(obj).__name__}")
            return False
        for k in sorted(set(obj) - allowed):
            self.add(where, f"unknown key {k!r}")
        return True

    def integer(self, v, where, lo=None, hi=None):
        if isinstance(v, bool) or not isinstance(v, int):
            self.add(where, f"expected an integer, got {v!r}")
            return None
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            self.add(where, f"{v} outside [{lo}, {hi if hi is not None else 'inf'}]")
            return None
        return v

    def number(self, v, where, lo=None, hi=None):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.add(where, f"expected a finite number, got {v!r}")
            return None
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            self.add(where, f"{v} outside [{lo}, {hi}]")
            return None
        return float(v)

    def boolean(self, v, where):
        if not isinstance(v, bool):
            self.add(where, f"expected true or false, got {v!r}")
            return None
        return v

    def int_list(self, v, where, lo=None, hi=None):
        if not isinstance(v, list):
            self.add(where, "expected a list")
            return None
        vals = [self.integer(x, f"{where}[{i}]", lo, hi) for i, x in enumerate(v)]
        return None if any(x is None for x in vals) else tuple(vals)


def _parse_mixture(name, spec, d, ck):
    where = f"mixtures.{name}"
    if not ck.keys(spec, _MIX_KEYS, where):
        return None
    missing = sorted(_MIX_KEYS - set(spec))
    if missing:
        ck.add(where, f"missing {', '.join(missing)}")
        return None
    try:
        w = np.asarray(spec["weights"], dtype=np.float64)
        mu = np.asarray(spec["means"], dtype=np.float64)
        cov = np.asarray(spec["covs"], dtype=np.float64)
    except (TypeError, ValueError):
        ck.add(where, "weights, means and covs must be numeric arrays")
        return None
    if w.ndim != 1 or mu.ndim != 2 or cov.ndim != 3:
        ck.add(where, f"shapes weights {w.shape}, means {mu.shape}, covs {cov.shape}; expected (K,), (K,d), (K,d,d)")
        return None
    if d is not None and mu.shape[1] != d:
        ck.add(where, f"means have dimension {mu.shape[1]}, config d is {d}")
        return None
    try:
        return GaussianMixture(w, mu, cov)
    except InvalidConfig as e:
        ck.add(where, str(e))
        return None


def _parse_cond(spec, where, names, ck):
    if spec is None:
        return None
    if not ck.keys(spec, _COND_KEYS, where):
        return None
    if "mixture" not in spec:
        ck.add(where, "missing 'mixture'")
        return None
    ok = True
    mix = spec["mixture"]
    if not isinstance(mix, str) or mix not in names:
        ck.add(f"{where}.mixture", f"unknown mixture {mix!r}")
        ok = False
    g = ck.number(spec.get("guidance_scale", 1.0), f"{where}.guidance_scale", 0.0)
    unc = spec.get("uncond")
    if unc is not None and (not isinstance(unc, str) or unc not in names):
        ck.add(f"{where}.uncond", f"unknown mixture {unc!r}")
        ok = False
    if not ok or g is None:
        return None
    return CondSpec(mix, g, unc)


def config_from_dict(raw):
    """Validate a decoded JSON object; raise ValidationError listing every problem."""
    ck = _Checker()
    if not ck.keys(raw, _TOP_KEYS, "config"):
        raise ValidationError(ck.problems)
    for k in ("d", "mixtures", "src_cond"):
        if k not in raw:
            ck.add("config", f"missing required key {k!r}")

    d = ck.integer(raw["d"], "d", 1, MAX_DIM) if "d" in raw else None

    mixtures = {}
    mix_raw = raw.get("mixtures", {})
    if ck.keys(mix_raw, set(mix_raw) if isinstance(mix_raw, dict) else set(), "mixtures"):
        if "mixtures" in raw and not mix_raw:
            ck.add("mixtures", "at least one mixture is required")
        for name in sorted(mix_raw):
            m = _parse_mixture(name, mix_raw[name], d, ck)
            if m is not None:
                mixtures[name] = m
    names = set(mix_raw) if isinstance(mix_raw, dict) else set()

    src = _parse_cond(raw.get("src_cond"), "src_cond", names, ck)
    tgt = _parse_cond(raw.get("tgt_cond"), "tgt_cond", names, ck) if "tgt_cond" in raw else src
    uncond = raw.get("uncond")
    if uncond is not None and (not isinstance(uncond, str) or uncond not in names):
        ck.add("uncond", f"unknown mixture {uncond!r}")

    field_kind = raw.get("field", "mixture")
    if field_kind not in FIELD_KINDS:
        ck.add("field", f"must be one of {list(FIELD_KINDS)}, got {field_kind!r}")

    kw = {}
    sch = raw.get("schedule", {})
    if ck.keys(sch, _SCHED_KEYS, "schedule"):
        kw["T"] = ck.integer(sch.get("T", 28), "schedule.T", 1)
        kw["spacing"] = sch.get("spacing", "uniform")
        if kw["spacing"] not in ("uniform", "shifted"):
            ck.add("schedule.spacing", f"must be 'uniform' or 'shifted', got {kw['spacing']!r}")
        kw["shift"] = ck.number(sch.get("shift", 1.0), "schedule.shift")
        if kw["shift"] is not None and kw["shift"] <= 0:
            ck.add("schedule.shift", "must be > 0")
    T = kw.get("T")

    ed = raw.get("edit", {})
    if ck.keys(ed, _EDIT_KEYS, "edit"):
        kw["eta"] = ck.number(ed.get("eta", DEFAULT_ETA), "edit.eta", 0.0, 1.0)
        kw["t_s"] = ck.integer(ed.get("t_s", 0), "edit.t_s", 0, None if T is None else T - 1)
        kw["use_res_offset"] = ck.boolean(ed.get("use_res_offset", True), "edit.use_res_offset")
        kw["use_mvg"] = ck.boolean(ed.get("use_mvg", True), "edit.use_mvg")
        combos = ck.int_list(ed.get("combos", list(COMBOS)), "edit.combos", 1, 6)
        if combos is not None:
            kw["combos"] = tuple(sorted(set(combos)))
        etas = ed.get("etas", list(DEFAULT_ETAS))
        if not isinstance(etas, list) or not etas:
            ck.add("edit.etas", "expected a non-empty list")
        else:
            vals = [ck.number(e, f"edit.etas[{i}]", 0.0, 1.0) for i, e in enumerate(etas)]
            if all(v is not None for v in vals):
                kw["etas"] = tuple(vals)

    sc = raw.get("scenario", {})
    if ck.keys(sc, _SCEN_KEYS, "scenario") and d is not None:
        hi = d - 1
        bg = ck.int_list(sc.get("dims_background", list(range(d))), "scenario.dims_background", 0, hi)
        edd = ck.int_list(sc.get("dims_edit", []), "scenario.dims_edit", 0, hi)
        if bg is not None and edd is not None:
            if set(bg) & set(edd):
                ck.add("scenario", "background and edit dimensions overlap")
            elif sorted(bg + edd) != list(range(d)):
                ck.add("scenario", f"background and edit dimensions must cover 0..{hi} exactly once")
            else:
                kw["dims_background"], kw["dims_edit"] = bg, edd
                if src is not None and tgt is not None and bg:
                    ms, mt = mixtures.get(src.mixture), mixtures.get(tgt.mixture)
                    if ms is not None and mt is not None and not ms.marginal(bg).same_as(mt.marginal(bg)):
                        ck.add("scenario", "source and target mixtures differ on the background marginal")

    seeds = ck.int_list(raw.get("seeds", [0]), "seeds", 0, 2**63 - 1)
    if seeds is not None:
        if not seeds:
            ck.add("seeds", "at least one seed is required")
        kw["seeds"] = seeds

    methods = raw.get("methods", list(METHODS))
    if not isinstance(methods, list) or not methods:
        ck.add("methods", "expected a non-empty list")
    else:
        bad = [m for m in methods if m not in METHODS]
        if bad:
            ck.add("methods", f"unknown methods {bad}; choose from {list(METHODS)}")
        else:
            kw["methods"] = tuple(sorted(set(methods)))

    out = raw.get("output", {})
    if ck.keys(out, _OUT_KEYS, "output") and "dir" in out:
        if not isinstance(out["dir"], str):
            ck.add("output.dir", "expected a string")
        else:
            kw["out_dir"] = out["dir"]

    if ck.problems:
        raise ValidationError(ck.problems)
    return ScenarioConfig(d=d, mixtures=mixtures, src_cond=src, tgt_cond=tgt, uncond=uncond,
                          field_kind=field_kind, **kw)


def loads_config(text, source="<string>"):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, f"{source}: line {e.lineno} column {e.colno}") from None
    return config_from_dict(raw)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as e:
        raise ParseError(f"not UTF-8 ({e.reason})", str(path)) from None
    return loads_config(text, str(path))
