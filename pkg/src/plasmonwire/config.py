"""Run configuration: strict JSON schema with paper-parameter defaults."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .media import PRESETS


@dataclass(frozen=True)
class GridSpec:
    min: float
    max: float
    count: int

    def values(self):
        import numpy as np

        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class RunConfig:
    """Validated batch-run parameters (all quantities dimensionless:
    frequencies in omega_p, wavenumbers in omega_p/c, lengths in c/omega_p,
    dynamics rates/times in the beta bookkeeping of the dipole)."""

    hbar_omega_p_ev: float = 3.76
    length_unit_nm: float = 53.8
    wire: str = "Ag"
    host: str = "GaN"
    R: float = 0.1
    d: float = 0.2                      # 10.76 nm at 53.8 nm per unit
    z0: float = 0.35
    orders: tuple[int, ...] = (0, 1, 2, 3)
    k_grid: GridSpec = field(default_factory=lambda: GridSpec(0.2, 60.0, 480))
    omega0_grid: GridSpec = field(default_factory=lambda: GridSpec(0.55, 0.80, 126))
    dipole_orientation: tuple[float, float, float] = (1.0, 0.0, 0.0)
    dipole_beta: float = 1.0
    quantization_length: float = 1.0
    detunings: tuple[float, ...] = (0.0, 0.2, 0.4, 0.8)
    gamma: float = 0.0
    t_max: float = 60.0
    n_steps: int = 24000
    kernel: str = "band_edge"
    twodot_omega0: tuple[float, ...] = (0.602, 0.748)
    twodot_orders: tuple[int, ...] = (0, 1, 2, 3)
    twodot_beta: float = 2.0e-4
    twodot_t_factor: float = 8.0        # t_max = factor / pair rate
    twodot_n_steps: int = 1600
    output_dir: str = "out"
    threads: int = 1


_SCHEMA = {
    "units": {"hbar_omega_p_ev": ("hbar_omega_p_ev", float),
              "length_unit_nm": ("length_unit_nm", float)},
    "media": {"wire": ("wire", str), "host": ("host", str)},
    "geometry": {"R": ("R", float), "d": ("d", float), "z0": ("z0", float)},
    "dipole": {"orientation": ("dipole_orientation", "vec3"),
               "beta": ("dipole_beta", float)},
    "k_grid": "grid:k_grid",
    "omega0_grid": "grid:omega0_grid",
    "dynamics": {"detunings": ("detunings", "floats"),
                 "gamma": ("gamma", float),
                 "t_max": ("t_max", float),
                 "n_steps": ("n_steps", int),
                 "kernel": ("kernel", str)},
    "twodot": {"omega0": ("twodot_omega0", "floats"),
               "orders": ("twodot_orders", "ints"),
               "beta": ("twodot_beta", float),
               "t_factor": ("twodot_t_factor", float),
               "n_steps": ("twodot_n_steps", int)},
    "orders": ("orders", "ints"),
    "quantization_length": ("quantization_length", float),
    "output_dir": ("output_dir", str),
    "threads": ("threads", int),
}


def _coerce(value, kind, key):
    try:
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return int(value)
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind == "floats":
            return tuple(float(v) for v in value)
        if kind == "ints":
            return tuple(int(v) for v in value)
        if kind == "vec3":
            out = tuple(float(v) for v in value)
            if len(out) != 3:
                raise TypeError
            return out
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {value!r}", key=key) from None
    raise ConfigError(f"internal schema error at {key}", key=key)


def _parse_grid(obj, key):
    if not isinstance(obj, dict):
        raise ConfigError(f"{key} must be an object", key=key)
    unknown = set(obj) - {"min", "max", "count"}
    if unknown:
        raise ConfigError(f"unknown key {key}.{sorted(unknown)[0]}",
                          key=f"{key}.{sorted(unknown)[0]}")
    spec = GridSpec(min=_coerce(obj.get("min", 0.0), float, f"{key}.min"),
                    max=_coerce(obj.get("max", 1.0), float, f"{key}.max"),
                    count=_coerce(obj.get("count", 2), int, f"{key}.count"))
    if spec.count < 1 or spec.max < spec.min:
        raise ConfigError(f"{key} must satisfy count >= 1 and max >= min", key=key)
    return spec


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config; unknown keys are rejected and every
    validation error names the offending key.  An empty document yields the
    full default configuration."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    fields: dict = {}
    for key, value in doc.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", key=key)
        spec = _SCHEMA[key]
        if isinstance(spec, str) and spec.startswith("grid:"):
            fields[spec.split(":")[1]] = _parse_grid(value, key)
        elif isinstance(spec, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{key} must be an object", key=key)
            for sub, subval in value.items():
                if sub not in spec:
                    raise ConfigError(f"unknown key {key}.{sub}", key=f"{key}.{sub}")
                name, kind = spec[sub]
                fields[name] = _coerce(subval, kind, f"{key}.{sub}")
        else:
            name, kind = spec
            fields[name] = _coerce(value, kind, key)
    cfg = RunConfig(**fields)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.R <= 0:
        raise ConfigError(f"R must be positive, got {cfg.R}", key="geometry.R")
    if cfg.d <= 0:
        raise ConfigError(f"d must be positive, got {cfg.d}", key="geometry.d")
    if cfg.z0 < 0:
        raise ConfigError(f"z0 must be >= 0, got {cfg.z0}", key="geometry.z0")
    for name in ("wire", "host"):
        if getattr(cfg, name) not in PRESETS:
            raise ConfigError(f"unknown medium preset {getattr(cfg, name)!r}",
                              key=f"media.{name}")
    if not cfg.orders:
        raise ConfigError("orders must be nonempty", key="orders")
    if any(n < 0 for n in cfg.orders):
        raise ConfigError("orders must be >= 0", key="orders")
    if cfg.hbar_omega_p_ev <= 0:
        raise ConfigError("hbar_omega_p_ev must be positive",
                          key="units.hbar_omega_p_ev")
    if cfg.length_unit_nm <= 0:
        raise ConfigError("length_unit_nm must be positive",
                          key="units.length_unit_nm")
    if cfg.dipole_beta < 0:
        raise ConfigError("dipole beta must be >= 0", key="dipole.beta")
    if cfg.quantization_length <= 0:
        raise ConfigError("quantization_length must be positive",
                          key="quantization_length")
    if cfg.gamma < 0:
        raise ConfigError("gamma must be >= 0", key="dynamics.gamma")
    if cfg.t_max <= 0 or cfg.n_steps < 100:
        raise ConfigError("dynamics needs t_max > 0 and n_steps >= 100",
                          key="dynamics")
    if cfg.kernel not in ("band_edge", "full"):
        raise ConfigError(f"unknown kernel kind {cfg.kernel!r}",
                          key="dynamics.kernel")
    if cfg.twodot_beta <= 0:
        raise ConfigError("twodot beta must be positive", key="twodot.beta")
    if cfg.twodot_t_factor <= 0 or cfg.twodot_n_steps < 100:
        raise ConfigError("twodot needs t_factor > 0 and n_steps >= 100",
                          key="twodot")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1", key="threads")


def serialize(cfg: RunConfig) -> str:
    """Canonical JSON document that parses back to an equal RunConfig."""
    doc = {
        "units": {"hbar_omega_p_ev": cfg.hbar_omega_p_ev,
                  "length_unit_nm": cfg.length_unit_nm},
        "media": {"wire": cfg.wire, "host": cfg.host},
        "geometry": {"R": cfg.R, "d": cfg.d, "z0": cfg.z0},
        "orders": list(cfg.orders),
        "k_grid": {"min": cfg.k_grid.min, "max": cfg.k_grid.max,
                   "count": cfg.k_grid.count},
        "omega0_grid": {"min": cfg.omega0_grid.min, "max": cfg.omega0_grid.max,
                        "count": cfg.omega0_grid.count},
        "dipole": {"orientation": list(cfg.dipole_orientation),
                   "beta": cfg.dipole_beta},
        "quantization_length": cfg.quantization_length,
        "dynamics": {"detunings": list(cfg.detunings), "gamma": cfg.gamma,
                     "t_max": cfg.t_max, "n_steps": cfg.n_steps,
                     "kernel": cfg.kernel},
        "twodot": {"omega0": list(cfg.twodot_omega0),
                   "orders": list(cfg.twodot_orders),
                   "beta": cfg.twodot_beta,
                   "t_factor": cfg.twodot_t_factor,
                   "n_steps": cfg.twodot_n_steps},
        "output_dir": cfg.output_dir,
        "threads": cfg.threads,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def config_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)
