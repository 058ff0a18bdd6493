"""Flat key-value run configuration (TOML syntax, no tables)."""
import math
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .dynamics import PicardConfig, SolverConfig
from .errors import ConfigError
from .gevrey import GevreyConfig, WeightedNormSpec
from .spectral import EXP_CAP, PhysicalParams

DATUMS = ("two_mode", "single_mode", "annulus", "broadband", "square_waves")

# key -> (type, default); None default means "derived"
KEYS = {
    "gamma": (float, 1.5),
    "kappa": (float, 1.0),
    "alpha": (float, None),
    "n": (int, 64),
    "box_length": (float, 2 * math.pi),
    "dt": (float, 1e-2),
    "T": (float, 1.0),
    "snapshot_every": (int, 1),
    "scheme": (str, "integrating_factor_rk4"),
    "cfl": (float, 0.5),
    "blowup_factor": (float, 10.0),
    "picard_nodes": (int, 65),
    "picard_max_iters": (int, 50),
    "picard_tol": (float, 1e-12),
    "exp_cap": (float, EXP_CAP),
    "noise_floor": (float, 1e-14),
    "norm_p": (list, [2.0]),
    "norm_q": (list, [2.0]),
    "norm_r": (list, [8.0]),
    "norm_alpha": (list, [0.5]),
    "datum": (str, "two_mode"),
    "amplitude": (float, 0.1),
    "datum_kmin": (float, 1.0),
    "datum_kmax": (float, 8.0),
    "datum_slope": (float, 2.0),
    "datum_width": (float, 0.1),
    "datum_mode": (list, [1, 0]),
    "output_dir": (str, "."),
    "seed": (int, 0),
}


@dataclass
class RunConfig:
    solver: SolverConfig
    gevrey: GevreyConfig
    norms: list
    output_dir: str = "."
    seed: int = 0
    noise_floor: float = 1e-14
    datum: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _coerce(key, value, errs):
    typ, _ = KEYS[key]
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errs.append(f"{key}: expected a number, got {value!r}")
            return None
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            errs.append(f"{key}: expected an integer, got {value!r}")
            return None
        return value
    if typ is str:
        if not isinstance(value, str):
            errs.append(f"{key}: expected a string, got {value!r}")
            return None
        return value
    if typ is list:
        vals = value if isinstance(value, list) else [value]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            errs.append(f"{key}: expected a number or list of numbers, got {value!r}")
            return None
        return vals
    raise AssertionError(typ)


def _collect(exc_type, build, errs):
    try:
        return build()
    except exc_type as e:
        errs.extend(e.violations)
        return None


def from_mapping(doc):
    """Validate a flat mapping; raises :class:`ConfigError` listing every violation."""
    errs = []
    vals = {}
    for key, value in doc.items():
        if key not in KEYS:
            errs.append(f"unknown key {key!r}")
            continue
        if isinstance(value, dict):
            errs.append(f"{key}: nested tables are not allowed (flat key-value only)")
            continue
        v = _coerce(key, value, errs)
        if v is not None:
            vals[key] = v
    full = {k: vals.get(k, d) for k, (_, d) in KEYS.items()}

    params = _collect(ConfigError, lambda: PhysicalParams(full["gamma"], full["kappa"], full["alpha"]), errs)
    picard = PicardConfig(full["picard_nodes"], full["picard_max_iters"], full["picard_tol"])
    solver_kw = dict(n=full["n"], dt=full["dt"], T=full["T"], snapshot_every=full["snapshot_every"],
                     scheme=full["scheme"], picard=picard, box_length=full["box_length"],
                     cfl=full["cfl"], blowup_factor=full["blowup_factor"])
    solver = _collect(ConfigError, lambda: SolverConfig(params or PhysicalParams(1.5), **solver_kw), errs)
    alpha = params.alpha if params is not None else full["alpha"]
    gevrey = None
    if params is not None:
        gevrey = _collect(ConfigError, lambda: GevreyConfig(alpha, full["gamma"], full["exp_cap"]), errs)

    lists = [full[k] for k in ("norm_p", "norm_q", "norm_r", "norm_alpha")]
    norms = []
    if len({len(x) for x in lists}) != 1:
        errs.append("norm_p, norm_q, norm_r and norm_alpha must have equal lengths")
    else:
        for p, q, r, a in zip(*lists):
            spec = _collect(ConfigError,
                            lambda: WeightedNormSpec(full["gamma"], float(p), float(q), float(r), float(a)), errs)
            norms.append(spec)

    if full["datum"] not in DATUMS:
        errs.append(f"datum must be one of {DATUMS}, got {full['datum']!r}")
    if len(full["datum_mode"]) != 2:
        errs.append("datum_mode must be a pair [k1, k2]")
    if not full["noise_floor"] >= 0:
        errs.append("noise_floor must be >= 0")
    if errs:
        raise ConfigError(errs)
    datum = {k: full[k] for k in ("datum", "amplitude", "datum_kmin", "datum_kmax", "datum_slope",
                                  "datum_width", "datum_mode")}
    return RunConfig(solver, gevrey, norms, full["output_dir"], full["seed"], full["noise_floor"], datum, vals)


def load_config(path):
    text = Path(path).read_text()
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError([f"{path}: parse error: {e}"]) from e
    return from_mapping(doc)


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(type(v))


def canonical_mapping(cfg):
    s = cfg.solver
    p = s.params
    out = {
        "gamma": p.gamma, "kappa": p.kappa, "alpha": p.alpha,
        "n": s.n, "box_length": s.box_length, "dt": s.dt, "T": s.T,
        "snapshot_every": s.snapshot_every, "scheme": s.scheme, "cfl": s.cfl,
        "blowup_factor": s.blowup_factor,
        "picard_nodes": s.picard.n_time_nodes, "picard_max_iters": s.picard.max_iters,
        "picard_tol": s.picard.tol,
        "exp_cap": cfg.gevrey.exp_cap, "noise_floor": cfg.noise_floor,
        "norm_p": [n.p for n in cfg.norms], "norm_q": [n.q for n in cfg.norms],
        "norm_r": [n.r for n in cfg.norms], "norm_alpha": [n.alpha_k for n in cfg.norms],
    }
    out.update(cfg.datum)
    out["datum_mode"] = [int(k) for k in cfg.datum["datum_mode"]]
    out["output_dir"] = cfg.output_dir
    out["seed"] = cfg.seed
    return {k: out[k] for k in KEYS}


def dump_config(cfg):
    """Canonical text: every key in fixed order, explicit values."""
    return "".join(f"{k} = {_toml_value(v)}\n" for k, v in canonical_mapping(cfg).items())
