"""
Flat key-value configuration for the simulator.

The file format is one `key = value` per line; blank lines and lines whose
first non-space character is `#` are skipped. Unknown keys are rejected with
the offending line number, missing keys take the documented defaults, and
every numeric range is validated on load with the key named in the error.
The same keys work as `--set key=value` command-line overrides, and
echo_config emits a file that loads back to an identical configuration.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .channel import GeometryParams, LinkBudgetParams
from .optimizer import BcdSettings
from .surfaces import ARCHITECTURES, MODES, RisSpec


class ConfigError(Exception):
    """Configuration parse or validation failure (CLI exit code 2)."""


@dataclass(frozen=True)
class SimConfig:
    # geometry
    altitude_km: float = 600.0
    elevation_deg: float = 45.0
    earth_radius_km: float = 6371.0
    ris_sat_distance_km: float = 500.0   # 0 means derive from elevation geometry
    ris_user_near_km: float = 2.0
    ris_user_far_km: float = 3.0
    include_direct: bool = False
    # link budget
    freq_ghz: float = 3.5
    path_loss_exponent: float = 2.5
    tx_gain_dbi: float = 10.0
    rx_gain_dbi: float = 10.0
    reflection_magnitude: float = 0.9
    noise_dbm: float = -90.0
    rician_k: float = 10.0
    # surface
    num_elements: int = 80
    architecture: str = "full"
    group_count: int = 1
    sector_count: int = 2
    mode: str = "reflective"
    # problem
    power_dbm: float = 20.0
    min_rate_near: float = 0.0    # bps/Hz
    min_rate_far: float = 0.0     # bps/Hz
    # experiment harness
    trials: int = 200
    base_seed: int = 12345
    bcd_max_iters: int = 50
    bcd_rate_tol: float = 1e-4
    out_dir: str = "out"


KEY_ORDER = tuple(f.name for f in dataclasses.fields(SimConfig))

_INT_KEYS = {"num_elements", "group_count", "sector_count", "trials",
             "base_seed", "bcd_max_iters"}
_BOOL_KEYS = {"include_direct"}
_STR_KEYS = {"architecture", "mode", "out_dir"}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_KEYS:
        lowered = raw.lower()
        if lowered in ("true", "false"):
            return lowered == "true"
        raise ConfigError(f"key '{key}': expected true or false, got {raw!r}")
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"key '{key}': expected an integer, got {raw!r}") from None
    if key in _STR_KEYS:
        return raw
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got {raw!r}") from None


def _require(condition: bool, key: str, message: str):
    if not condition:
        raise ConfigError(f"key '{key}': {message}")


def validate_config(cfg: SimConfig) -> SimConfig:
    _require(cfg.altitude_km > 0, "altitude_km", "must be > 0")
    _require(0 < cfg.elevation_deg <= 90, "elevation_deg", "must be in (0, 90]")
    _require(cfg.earth_radius_km > 0, "earth_radius_km", "must be > 0")
    _require(cfg.ris_sat_distance_km >= 0, "ris_sat_distance_km", "must be >= 0")
    _require(cfg.ris_user_near_km > 0, "ris_user_near_km", "must be > 0")
    _require(cfg.ris_user_far_km > 0, "ris_user_far_km", "must be > 0")
    _require(cfg.freq_ghz > 0, "freq_ghz", "must be > 0")
    _require(cfg.path_loss_exponent >= 2, "path_loss_exponent", "must be >= 2")
    _require(0 < cfg.reflection_magnitude <= 1, "reflection_magnitude", "must be in (0, 1]")
    _require(cfg.rician_k >= 0, "rician_k", "must be >= 0")
    _require(cfg.num_elements >= 1, "num_elements", "must be >= 1")
    _require(cfg.architecture in ARCHITECTURES, "architecture",
             f"must be one of {', '.join(ARCHITECTURES)}")
    _require(cfg.group_count >= 1, "group_count", "must be >= 1")
    _require(cfg.sector_count >= 2, "sector_count", "must be >= 2")
    _require(cfg.mode in MODES, "mode", f"must be one of {', '.join(MODES)}")
    _require(cfg.min_rate_near >= 0, "min_rate_near", "must be >= 0")
    _require(cfg.min_rate_far >= 0, "min_rate_far", "must be >= 0")
    _require(cfg.trials >= 1, "trials", "must be >= 1")
    _require(cfg.base_seed >= 0, "base_seed", "must be >= 0")
    _require(cfg.bcd_max_iters >= 1, "bcd_max_iters", "must be >= 1")
    _require(cfg.bcd_rate_tol > 0, "bcd_rate_tol", "must be > 0")
    _require(bool(cfg.out_dir), "out_dir", "must be non-empty")
    return cfg


def _parse_lines(lines, source: str) -> dict:
    values = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in KEY_ORDER:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        values[key] = _coerce(key, raw)   # duplicate keys: last one wins
    return values


def load_config(path: str | None = None) -> SimConfig:
    """Read a config file (or return pure defaults when path is None)."""
    values = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                values = _parse_lines(f, path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    return validate_config(SimConfig(**values))


def apply_overrides(cfg: SimConfig, assignments) -> SimConfig:
    """Apply `key=value` strings (from repeated --set flags) in order."""
    values = {}
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in KEY_ORDER:
            raise ConfigError(f"--set: unknown key '{key}'")
        values[key] = _coerce(key, raw)
    return validate_config(dataclasses.replace(cfg, **values))


def echo_config(cfg: SimConfig) -> str:
    """Canonical `key = value` text; load_config on it reproduces cfg."""
    lines = []
    for key in KEY_ORDER:
        value = getattr(cfg, key)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


# builders for the domain objects; divisibility and other cross-key rules
# surface here as ConfigError so the CLI can report them as config problems


def geometry_from(cfg: SimConfig) -> GeometryParams:
    try:
        return GeometryParams(cfg.altitude_km, cfg.elevation_deg, cfg.earth_radius_km,
                              cfg.ris_sat_distance_km,
                              (cfg.ris_user_near_km, cfg.ris_user_far_km))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def link_budget_from(cfg: SimConfig) -> LinkBudgetParams:
    try:
        return LinkBudgetParams(cfg.freq_ghz, cfg.path_loss_exponent, cfg.tx_gain_dbi,
                                cfg.rx_gain_dbi, cfg.reflection_magnitude,
                                cfg.noise_dbm, cfg.rician_k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def ris_spec_from(cfg: SimConfig) -> RisSpec:
    try:
        return RisSpec(cfg.num_elements, cfg.architecture, cfg.mode,
                       cfg.group_count, cfg.sector_count)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def bcd_settings_from(cfg: SimConfig) -> BcdSettings:
    return BcdSettings(max_outer_iters=cfg.bcd_max_iters, rate_tolerance=cfg.bcd_rate_tol)
