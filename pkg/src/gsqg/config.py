"""Run configuration: JSON parsing, validation and defaults."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

MODES = ("simulate", "flux-scan", "commutator-scan", "analyze")
IC_TYPES = ("zero", "steady_mode", "single_mode", "gaussian_random", "synthetic", "dump")
FIELD_KINDS = ("lacunary", "gaussian", "cusp")

# per initial-condition type: allowed keys and their defaults
IC_KEYS = {
    "zero": {},
    "steady_mode": {"amplitude": 1.0},
    "single_mode": {"k": [1, 0], "amplitude": 1.0, "phase": 0.0},
    "gaussian_random": {"k0": 4.0, "rms": 1.0, "seed": None},
    "synthetic": {"alpha": None, "p": None, "kind": "lacunary", "seed": None, "amplitude": 1.0},
    "dump": {"path": None},
}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class RunConfig:
    """Full description of one experiment."""

    mode: str
    n: int
    gamma: float
    horizon: float = 0.0
    dt: float | None = None
    cfl: float = 0.4
    strict_cfl: bool = False
    filter: bool = False
    lenient: bool = True
    form: str = "divergence"
    ic: dict = field(default_factory=lambda: {"type": "steady_mode", "amplitude": 1.0})
    diag_every: int = 10
    checkpoint_every: int = 0
    norms_p: list = field(default_factory=lambda: [2.0, 4.0])
    flux_N: list = field(default_factory=list)
    gamma_list: list | None = None
    alpha_list: list = field(default_factory=list)
    pairs: list | None = None
    N_list: list | None = None
    eps_list: list | None = None
    p_list: list = field(default_factory=lambda: [2.0])
    scan_kind: str = "N"
    flux: str = "energy"
    helicity_index: int = 1
    q: float = 1.5
    field_kind: str = "lacunary"
    seed: int | None = None
    out: str | None = None

    def to_dict(self) -> dict:
        return {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def gammas(self) -> list:
        return list(self.gamma_list) if self.gamma_list else [self.gamma]

    @property
    def stochastic(self) -> bool:
        t = self.ic.get("type")
        return t in ("gaussian_random", "synthetic") or self.mode in ("commutator-scan",)


_REQUIRED = ("mode", "n", "gamma")


def _num(path, v, lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    if v < lo or (lo_open and v == lo) or v > hi or (hi_open and v == hi):
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        raise ConfigError(path, f"value {v} outside {lb}{lo}, {hi}{rb}")
    return int(v) if integer else float(v)


def _list(path, v, item, allow_none=False):
    if v is None and allow_none:
        return None
    if not isinstance(v, list):
        raise ConfigError(path, f"expected a list, got {v!r}")
    return [item(f"{path}[{i}]", x) for i, x in enumerate(v)]


def _bool(path, v):
    if not isinstance(v, bool):
        raise ConfigError(path, f"expected true/false, got {v!r}")
    return v


def _choice(path, v, options):
    if v not in options:
        raise ConfigError(path, f"expected one of {list(options)}, got {v!r}")
    return v


def _ic(raw, seed):
    if isinstance(raw, str):
        raw = {"type": raw}
    if not isinstance(raw, dict):
        raise ConfigError("ic", f"expected a string or object, got {raw!r}")
    t = raw.get("type")
    _choice("ic.type", t, IC_TYPES)
    allowed = IC_KEYS[t]
    for k in raw:
        if k != "type" and k not in allowed:
            raise ConfigError(f"ic.{k}", f"unknown key for ic type {t!r}")
    out = {"type": t, **copy.deepcopy(allowed), **{k: v for k, v in raw.items() if k != "type"}}
    if t == "steady_mode":
        out["amplitude"] = _num("ic.amplitude", out["amplitude"])
    elif t == "single_mode":
        k = out["k"]
        if not (isinstance(k, list) and len(k) == 2):
            raise ConfigError("ic.k", f"expected [k1, k2], got {k!r}")
        out["k"] = [_num(f"ic.k[{i}]", x, integer=True) for i, x in enumerate(k)]
        out["amplitude"] = _num("ic.amplitude", out["amplitude"])
        out["phase"] = _num("ic.phase", out["phase"])
    elif t == "gaussian_random":
        out["k0"] = _num("ic.k0", out["k0"], lo=0, lo_open=True)
        out["rms"] = _num("ic.rms", out["rms"], lo=0, lo_open=True)
    elif t == "synthetic":
        if out["alpha"] is not None:
            out["alpha"] = _num("ic.alpha", out["alpha"], lo=-2, hi=4, lo_open=True, hi_open=True)
        if out["p"] is not None:
            out["p"] = _num("ic.p", out["p"], lo=1)
        out["kind"] = _choice("ic.kind", out["kind"], FIELD_KINDS)
        out["amplitude"] = _num("ic.amplitude", out["amplitude"], lo=0, lo_open=True)
    elif t == "dump":
        if not isinstance(out["path"], str) or not out["path"]:
            raise ConfigError("ic.path", "a checkpoint path is required")
    if t in ("gaussian_random", "synthetic"):
        s = out.get("seed", None)
        if s is None:
            s = seed
        if s is None:
            raise ConfigError("seed", f"a seed is mandatory for the stochastic initial condition {t!r}")
        out["seed"] = _num("ic.seed", s, lo=0, integer=True)
    return out


def config_from_dict(d: dict) -> RunConfig:
    """Validate a mapping and fill documented defaults."""
    if not isinstance(d, dict):
        raise ConfigError("", "configuration must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    for k in d:
        if k not in known:
            raise ConfigError(k, "unknown key")
    for k in _REQUIRED:
        if k not in d:
            raise ConfigError(k, "missing required key")
    mode = _choice("mode", d["mode"], MODES)
    n = _num("n", d["n"], lo=8, integer=True)
    if n & (n - 1):
        raise ConfigError("n", f"grid size must be a power of two, got {n}")
    gamma = _num("gamma", d["gamma"], lo=0, hi=2)
    cfg = RunConfig(mode=mode, n=n, gamma=gamma)
    g = d.get
    seed = g("seed")
    if seed is not None:
        cfg.seed = _num("seed", seed, lo=0, integer=True)
    if "horizon" in d:
        cfg.horizon = _num("horizon", d["horizon"], lo=0)
    if g("dt") is not None:
        cfg.dt = _num("dt", d["dt"], lo=0, lo_open=True)
    if "cfl" in d:
        cfg.cfl = _num("cfl", d["cfl"], lo=0, hi=1, lo_open=True, hi_open=True)
    for key in ("strict_cfl", "filter", "lenient"):
        if key in d:
            setattr(cfg, key, _bool(key, d[key]))
    if "form" in d:
        cfg.form = _choice("form", d["form"], ("divergence", "advective"))
    if "ic" in d:
        cfg.ic = d["ic"]
    elif mode == "flux-scan":
        cfg.ic = {"type": "synthetic"}
    cfg.ic = _ic(cfg.ic, cfg.seed)
    if "diag_every" in d:
        cfg.diag_every = _num("diag_every", d["diag_every"], lo=1, integer=True)
    if "checkpoint_every" in d:
        cfg.checkpoint_every = _num("checkpoint_every", d["checkpoint_every"], lo=0, integer=True)
    if "norms_p" in d:
        cfg.norms_p = _list("norms_p", d["norms_p"], lambda p, v: _num(p, v, lo=1))
    if "flux_N" in d:
        cfg.flux_N = _list("flux_N", d["flux_N"], lambda p, v: _num(p, v, lo=0, integer=True))
    if "gamma_list" in d:
        cfg.gamma_list = _list("gamma_list", d["gamma_list"], lambda p, v: _num(p, v, lo=0, hi=2),
                               allow_none=True)
    if "alpha_list" in d:
        cfg.alpha_list = _list("alpha_list", d["alpha_list"],
                               lambda p, v: _num(p, v, lo=-2, hi=4, lo_open=True, hi_open=True))
    if "pairs" in d and d["pairs"] is not None:
        def pair(p, v):
            if not (isinstance(v, list) and len(v) == 2):
                raise ConfigError(p, f"expected [alpha, beta], got {v!r}")
            return [_num(f"{p}[{i}]", x, lo=0, hi=2, lo_open=True) for i, x in enumerate(v)]
        cfg.pairs = _list("pairs", d["pairs"], pair)
    if "N_list" in d:
        cfg.N_list = _list("N_list", d["N_list"], lambda p, v: _num(p, v, lo=0, integer=True),
                           allow_none=True)
    if "eps_list" in d:
        cfg.eps_list = _list("eps_list", d["eps_list"],
                             lambda p, v: _num(p, v, lo=0, hi=math.pi / 2, lo_open=True, hi_open=True),
                             allow_none=True)
    if "p_list" in d:
        cfg.p_list = _list("p_list", d["p_list"], lambda p, v: _num(p, v, lo=1))
    if "scan_kind" in d:
        cfg.scan_kind = _choice("scan_kind", d["scan_kind"], ("N", "eps"))
    if "flux" in d:
        cfg.flux = _choice("flux", d["flux"], ("energy", "helicity"))
    if "helicity_index" in d:
        cfg.helicity_index = _choice("helicity_index", d["helicity_index"], (1, 2))
    if "q" in d:
        cfg.q = _num("q", d["q"], lo=1)
    if "field_kind" in d:
        cfg.field_kind = _choice("field_kind", d["field_kind"], FIELD_KINDS)
    if g("out") is not None:
        if not isinstance(d["out"], str):
            raise ConfigError("out", f"expected a path string, got {d['out']!r}")
        cfg.out = d["out"]
    _cross_checks(cfg)
    return cfg


def _cross_checks(cfg: RunConfig) -> None:
    from .littlewood_paley import max_shell

    jmax = max_shell(cfg.n)
    if jmax < 0:
        raise ConfigError("n", f"grid n={cfg.n} is too small to hold one full dyadic shell")
    for key in ("N_list", "flux_N"):
        for i, N in enumerate(getattr(cfg, key) or []):
            if N > jmax + 1:
                raise ConfigError(f"{key}[{i}]", f"cut-off {N} exceeds the largest exact value {jmax + 1} "
                                                 f"for n={cfg.n}")
    if cfg.eps_list:
        h = 2 * math.pi / cfg.n
        for i, e in enumerate(cfg.eps_list):
            if 2 * e / h < 5 * (1 - 1e-12):
                raise ConfigError(f"eps_list[{i}]", f"eps={e} is under-resolved on n={cfg.n} "
                                                    f"(need eps >= {2.5 * h:.6g})")
    if cfg.mode == "flux-scan":
        if cfg.ic["type"] == "synthetic" and not cfg.alpha_list and cfg.ic.get("alpha") is None:
            raise ConfigError("alpha_list", "flux-scan with synthetic fields needs alpha_list or ic.alpha")
        if any(p < 2 for p in cfg.p_list):
            raise ConfigError("p_list", "flux exponents must be >= 2")
    if cfg.mode == "commutator-scan":
        if not cfg.alpha_list and not cfg.pairs:
            raise ConfigError("alpha_list", "commutator-scan needs alpha_list or pairs")
        if cfg.seed is None:
            raise ConfigError("seed", "a seed is mandatory for commutator-scan synthetic fields")
    if cfg.mode == "simulate" and cfg.ic["type"] == "synthetic" and cfg.ic.get("alpha") is None:
        raise ConfigError("ic.alpha", "synthetic initial condition needs alpha")
    if cfg.ic["type"] == "synthetic" and cfg.ic.get("alpha") is None and cfg.mode == "analyze":
        raise ConfigError("ic.alpha", "synthetic initial condition needs alpha")


def parse_config(path) -> RunConfig:
    """Read a JSON config, or the config echoed in a series CSV header."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError("", f"cannot read config {path}: {e}") from None
    if text.startswith("#"):
        from .io import read_series_metadata

        try:
            meta = read_series_metadata(text)
            return config_from_dict(meta["config"])
        except (KeyError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError("", f"series file {path} carries no readable config: {e}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"invalid JSON in {path}: {e}") from None
    return config_from_dict(d)
