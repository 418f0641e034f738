"""Run configuration: flat ``key = value`` files with ``[section]`` headers.

Example::

    [equation]
    kind = kg

    [model]
    p = 3
    eps = auto

    [grid]
    n = 1
    L = 2*pi
    N = 512

    [data]
    profile = fourier_mode
    amplitude = sqrt(4.1)
    velocity_ratio = 0.1

    [solver]
    t_end = 20

Numbers may be written as small arithmetic expressions in ``pi`` and
``sqrt``.  Unknown sections or keys are rejected before anything runs.
"""

from __future__ import annotations

import ast
import configparser
import copy
import math
import operator
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .field import Grid
from .initial_data import PROFILES, DataRecipe
from .nonlinearity import NonlinearityModel, verify_local_existence_hypotheses
from .solver import SolverConfig


class ConfigError(ValueError):
    pass


SCHEMA: Dict[str, Dict[str, str]] = {
    "equation": {"kind": "str", "a": "float", "T0": "float"},
    "model": {"kind": "str", "p": "float", "b": "float", "eps": "float_or_auto"},
    "grid": {"n": "int", "L": "float", "N": "int"},
    "data": {
        "profile": "str", "amplitude": "float", "velocity_ratio": "float", "width": "float",
        "radius": "float", "k": "int", "count": "int", "separation": "float",
        "base_profile": "str", "target_energy": "float", "sigmas": "float_list",
    },
    "solver": {
        "t_end": "float", "dt_init": "float", "dt_min": "float", "dt_max": "float",
        "blowup_amp_threshold": "float", "blowup_norm_factor": "float",
        "sample_every": "int", "safety": "float", "dealias": "bool",
    },
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Float literal or arithmetic expression using ``pi`` and ``sqrt``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id == "sqrt" and len(node.args) == 1 and not node.keywords):
            return math.sqrt(ev(node.args[0]))
        raise ConfigError(f"unsupported expression: {text!r}")

    return ev(tree)


def _convert(kind: str, text: str):
    if kind == "str":
        return text.strip()
    if kind == "float":
        return parse_number(text)
    if kind == "int":
        val = parse_number(text)
        if val != int(val):
            raise ConfigError(f"expected an integer, got {text!r}")
        return int(val)
    if kind == "float_or_auto":
        return "auto" if text.strip() == "auto" else parse_number(text)
    if kind == "bool":
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {text!r}")
    if kind == "float_list":
        return tuple(parse_number(t) for t in text.split(",") if t.strip())
    raise AssertionError(kind)


def read_raw(text: str) -> Tuple[Dict[str, Dict[str, str]], Dict[str, List[str]]]:
    """Parse the file into raw strings; returns (settings, sweep lists)."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    raw: Dict[str, Dict[str, str]] = {}
    sweep: Dict[str, List[str]] = {}
    for section in cp.sections():
        if section == "sweep":
            for key, value in cp.items(section):
                sec, _, name = key.partition(".")
                if sec not in SCHEMA or name not in SCHEMA[sec]:
                    raise ConfigError(f"unknown sweep parameter {key!r}")
                sweep[key] = [v.strip() for v in value.split(",") if v.strip()]
            continue
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
        raw[section] = dict(cp.items(section))
    return raw, sweep


@dataclass
class RunConfig:
    equation: str
    model: NonlinearityModel
    grid: Grid
    solver: SolverConfig
    recipe: Optional[DataRecipe] = None
    target_energy: Optional[float] = None
    synth_profile: str = "cosine_bump"
    synth_options: dict = field(default_factory=dict)
    a: float = 0.0
    T0: Optional[float] = None
    raw: dict = field(default_factory=dict)


def _section(raw, name):
    spec = SCHEMA[name]
    return {k: _convert(spec[k], v) for k, v in raw.get(name, {}).items()}


def build(raw: Dict[str, Dict[str, str]]) -> RunConfig:
    try:
        return _build(raw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(raw) -> RunConfig:
    eq = _section(raw, "equation")
    kind = eq.get("kind", "kg")
    if kind not in ("kg", "damped"):
        raise ConfigError(f"equation kind must be kg or damped, not {kind!r}")
    a = eq.get("a", 0.0)
    if kind == "damped" and not a > 0:
        raise ConfigError("damped equation needs a > 0")
    if kind == "kg" and ("a" in eq or "T0" in eq):
        raise ConfigError("a and T0 apply only to kind = damped")

    m = _section(raw, "model")
    mkind = m.get("kind", "pure_power")
    if mkind == "linear":
        model = NonlinearityModel.linear()
    elif mkind == "pure_power":
        if "p" not in m:
            raise ConfigError("[model] p is required")
        model = NonlinearityModel.pure_power(m["p"], m.get("b", 1.0), m.get("eps", "auto"))
    else:
        raise ConfigError(f"model kind must be pure_power or linear, not {mkind!r}")

    g = _section(raw, "grid")
    missing = {"n", "L", "N"} - set(g)
    if missing:
        raise ConfigError(f"[grid] missing {sorted(missing)}")
    grid = Grid(g["n"], g["L"], g["N"])
    if model.is_pure_power:
        rep = verify_local_existence_hypotheses(model, grid.n)
        if not rep.ok:
            raise ConfigError(f"no local existence theory for this run: {rep.violated}")

    s = _section(raw, "solver")
    solver = SolverConfig(**s)

    d = _section(raw, "data")
    cfg = RunConfig(kind, model, grid, solver, a=a, T0=eq.get("T0"), raw=copy.deepcopy(raw))
    if "target_energy" in d:
        cfg.target_energy = d["target_energy"]
        cfg.synth_profile = d.get("profile", "cosine_bump")
        if cfg.synth_profile not in ("cosine_bump", "gaussian_bump", "fourier_mode"):
            raise ConfigError(f"cannot synthesize with profile {cfg.synth_profile!r}")
        opts = {}
        for key in ("radius", "width", "sigmas"):
            if key in d:
                opts[key] = d[key]
        cfg.synth_options = opts
        return cfg

    profile = d.get("profile")
    if profile is None:
        raise ConfigError("[data] needs profile (or target_energy)")
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    common = {k: d[k] for k in ("amplitude", "velocity_ratio") if k in d}
    if profile == "multi_bump":
        base_profile = d.get("base_profile", "cosine_bump")
        base_kw = {k: d[k] for k in ("width", "radius") if k in d}
        base = DataRecipe(base_profile, **base_kw)
        cfg.recipe = DataRecipe("multi_bump", count=d.get("count", 1),
                                separation=d.get("separation", 0.0), base=base, **common)
    else:
        kw = {k: d[k] for k in ("width", "radius", "k") if k in d}
        if profile == "soliton_scaled":
            kw["p"] = model.p
        cfg.recipe = DataRecipe(profile, **common, **kw)
    return cfg


def load(text: str) -> Tuple[RunConfig, Dict[str, List[str]]]:
    raw, sweep = read_raw(text)
    return build(raw), sweep


def with_overrides(raw, overrides: Dict[str, str]):
    """Copy of ``raw`` with ``section.key`` entries replaced."""
    out = copy.deepcopy(raw)
    for dotted, value in overrides.items():
        sec, _, key = dotted.partition(".")
        out.setdefault(sec, {})[key] = value
    return out
