"""Run configuration: a flat TOML document with typed keys.

Every key is optional and has a default (see DEFAULTS).  Unknown keys,
nested tables and wrongly typed values are rejected with a message naming
the key.  Example:

    command = "simulate"
    preset = "homoclinic"
    T = 50.0
    cadence = 1000
"""
from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

COMMANDS = ("simulate", "contour", "steady", "ode", "selfcheck")
FORCINGS = ("constant", "power", "exponential")


@dataclass(frozen=True)
class RunConfig:
    command: str = "simulate"
    m: int = 4
    M: int = 1024  # markers
    N: int = 1024  # grid size
    dt: float = 1e-3
    T: float = 1.0  # negative integrates backward
    cadence: int = 0  # snapshot every `cadence` steps; 0 = first and last only
    cfl: float = 0.5
    max_gap: float = 0.125  # largest marker gap next to an expanding marker, fraction of 2pi/m
    preset: str = ""
    data: str = "fourier"  # fourier | piecewise
    fourier: tuple = ((1, 0.0, 1.0),)  # (j, cos amplitude, sin amplitude); wavenumber j*m
    breakpoints: tuple = ()  # interior breakpoints on [-pi/m, pi/m)
    levels: tuple = ()
    mollify_cells: float = 2.0
    rotation: float = 0.0  # rotation speed c for the steady command
    profile_tol: float = 0.05
    steady_tol: float = 1e-8
    forcing: str = "constant"  # ode command: c(t) family
    forcing_params: tuple = (1.0,)
    y0: float = 1.0
    dy0: float = math.nan  # nan = shoot for the decaying slope
    ode_tol: float = 1e-6
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fourier"] = [list(x) for x in self.fourier]
        for k in ("breakpoints", "levels", "forcing_params"):
            d[k] = list(d[k])
        if math.isnan(self.dy0):
            d["dy0"] = "shoot"
        return d


DEFAULTS = RunConfig()

PRESETS = {
    # sin(m theta) on m = 4
    "homoclinic": dict(command="simulate", m=4, data="fourier", fourier=((1, 0.0, 1.0),), T=50.0),
    # 16 jumps on the circle (4 per fundamental domain), alternating levels, unequal widths
    "heteroclinic16": dict(
        command="contour", m=4, data="piecewise",
        breakpoints=(-0.45, 0.05, 0.35), levels=(1.0, -1.0, 0.5, -0.5), T=20.0, dt=1e-3,
    ),
    "steady2": dict(command="steady", m=4, data="piecewise", levels=(1.0, -1.0)),
}

_INT = ("m", "M", "N", "cadence", "seed")
_FLOAT = ("dt", "T", "cfl", "max_gap", "mollify_cells", "rotation", "profile_tol",
          "steady_tol", "y0", "ode_tol")
_STR = ("command", "preset", "data", "forcing")
_FLOAT_LIST = ("breakpoints", "levels", "forcing_params")


def _coerce(key: str, value):
    if key in _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if key in _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if key in _STR:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if key in _FLOAT_LIST:
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"{key}: expected a list of numbers, got {value!r}")
        return tuple(float(v) for v in value)
    if key == "fourier":
        ok = isinstance(value, list) and all(
            isinstance(r, list) and len(r) == 3 and isinstance(r[0], int) and not isinstance(r[0], bool)
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in r[1:])
            for r in value
        )
        if not ok:
            raise ConfigError(f"fourier: expected a list of [j, cos, sin] triples, got {value!r}")
        return tuple((int(r[0]), float(r[1]), float(r[2])) for r in value)
    if key == "dy0":
        if value == "shoot":
            return math.nan
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"dy0: expected a number or \"shoot\", got {value!r}")
        return float(value)
    raise ConfigError(f"unknown key {key!r}")


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"command: expected one of {COMMANDS}, got {cfg.command!r}")
    if cfg.m < 3:
        raise ConfigError("m: symmetry order must be at least 3")
    for key in ("M", "N"):
        n = getattr(cfg, key)
        if n < 8 or n & (n - 1):
            raise ConfigError(f"{key}: expected a power of two >= 8, got {n}")
    if cfg.dt == 0.0 or not math.isfinite(cfg.dt) or not math.isfinite(cfg.T):
        raise ConfigError("dt: must be finite and nonzero")
    if cfg.cadence < 0:
        raise ConfigError("cadence: must be >= 0")
    if not 0 < cfg.max_gap <= 1:
        raise ConfigError("max_gap: expected a fraction in (0, 1]")
    if not 0 < cfg.cfl <= 1:
        raise ConfigError("cfl: expected a value in (0, 1]")
    if cfg.data not in ("fourier", "piecewise"):
        raise ConfigError(f"data: expected 'fourier' or 'piecewise', got {cfg.data!r}")
    if cfg.forcing not in FORCINGS:
        raise ConfigError(f"forcing: expected one of {FORCINGS}, got {cfg.forcing!r}")
    if cfg.data == "piecewise" and cfg.command in ("simulate", "contour", "steady"):
        b = cfg.breakpoints
        half = math.pi / cfg.m
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ConfigError("breakpoints: must be strictly increasing")
        if b and (b[0] <= -half or b[-1] >= half):
            raise ConfigError(f"breakpoints: must lie strictly inside (-pi/m, pi/m) = ({-half:.6g}, {half:.6g})")
        if cfg.command != "steady" and len(cfg.levels) != len(b) + 1:
            raise ConfigError("levels: need exactly one more level than interior breakpoints")
        if not cfg.levels:
            raise ConfigError("levels: piecewise data needs at least one level")
    return cfg


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse TOML text, apply a preset (if named) and then `key=value` overrides."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None
    for key, value in raw.items():
        if isinstance(value, dict):
            raise ConfigError(f"{key}: nested tables are not part of the schema")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, val = item.split("=", 1)
        key = key.strip()
        try:
            raw[key] = tomllib.loads(f"v = {val.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            raw[key] = val.strip()
    values = {k: _coerce(k, v) for k, v in raw.items()}
    preset = values.get("preset", "")
    base = {}
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"preset: expected one of {tuple(PRESETS)}, got {preset!r}")
        base = dict(PRESETS[preset])
    base.update(values)
    return _validate(replace(DEFAULTS, **base))


def load_config(path, overrides=()) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)
