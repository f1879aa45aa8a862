"""Configuration management for the SM-MC simulator.

Two layers: process settings from the environment (and ``.env``), and run
configuration files of flat ``KEY=VALUE`` lines that resolve into a
:class:`~src.engine.RunConfig`.
"""

import logging
import math
import re
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Type, TypeVar, Union

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.channel import SystemGeometry
from src.detection import Detector, ThresholdPolicy
from src.engine import RunConfig
from src.errors import ConfigurationError
from src.modulation import Scheme, SchemeKind, calibrate_alphabet

logger = logging.getLogger(__name__)

Model = TypeVar("Model", bound=BaseModel)


class Settings(BaseSettings):
    """Process-wide settings loaded from the environment and ``.env``."""

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    output_dir: Path = Field(default=Path("results"), alias="SMMC_OUTPUT_DIR")
    log_level: str = Field(default="INFO", alias="SMMC_LOG_LEVEL")
    workers: int = Field(default=1, ge=1, alias="SMMC_WORKERS")


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get application settings (singleton)."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


# Default system parameters.
DEFAULT_LINK_DISTANCE = 20e-6
DEFAULT_RECEIVER_RADIUS = 0.1e-6
DEFAULT_DIFFUSION_COEFF = 2.2e-9
DEFAULT_SEPARATION = 15e-6
DEFAULT_SYMBOL_DURATION = 1.0
DEFAULT_SNR_GRID = tuple(float(x) for x in range(0, 21, 2))
DEFAULT_SYMBOLS = 100_000
DEFAULT_REPLICATIONS = 5

# (n_links, csk_order) when the file names only the scheme.
SCHEME_DEFAULTS: Dict[SchemeKind, Tuple[int, int]] = {
    SchemeKind.SM: (2, 2),
    SchemeKind.SSK: (2, 1),
    SchemeKind.MIMO_OOK: (2, 2),
    SchemeKind.SISO_CSK: (1, 4),
}

_LENGTH_UNITS = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9}
_TIME_UNITS = {"s": 1.0, "ms": 1e-3}
_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Zµμ]*)\s*$")


def _quantity(text: str, units: Mapping[str, float], bare: str, key: str) -> float:
    match = _QUANTITY.match(text)
    if not match:
        raise ConfigurationError(f"cannot parse {text!r}", key)
    unit = match.group(2) or bare
    if unit not in units:
        raise ConfigurationError(f"unknown unit {unit!r} in {text!r}", key)
    value = float(match.group(1)) * units[unit]
    if not math.isfinite(value):
        raise ConfigurationError(f"value must be finite, got {text!r}", key)
    return value


def parse_length(text: str, key: str = "length") -> float:
    """Length in meters; bare numbers are micrometres (``"20"`` and ``"20um"`` are both 2e-5 m)."""
    return _quantity(text, _LENGTH_UNITS, "um", key)


def parse_duration(text: str, key: str = "symbol_duration") -> float:
    """Duration in seconds; bare numbers are seconds."""
    return _quantity(text, _TIME_UNITS, "s", key)


def parse_float(text: str, key: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"expected a number, got {text!r}", key) from None
    if not math.isfinite(value):
        raise ConfigurationError(f"value must be finite, got {text!r}", key)
    return value


def parse_count(text: str, key: str) -> int:
    """Integer count; accepts ``100000``, ``100_000`` and ``1e5``."""
    cleaned = text.strip().replace("_", "")
    try:
        return int(cleaned)
    except ValueError:
        pass
    value = parse_float(cleaned, key)
    if not value.is_integer():
        raise ConfigurationError(f"expected an integer, got {text!r}", key)
    return int(value)


def parse_bool(text: str, key: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigurationError(f"expected a boolean, got {text!r}", key)


def parse_float_list(text: str, key: str) -> Tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigurationError("expected a comma-separated list", key)
    return tuple(parse_float(p, key) for p in parts)


def parse_snr_grid(text: str, key: str = "snr_db") -> Tuple[float, ...]:
    """SNR points in dB, either ``start:step:stop`` (stop included) or a comma list."""
    if ":" not in text:
        return parse_float_list(text, key)

    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"expected start:step:stop, got {text!r}", key)
    start, step, stop = (parse_float(p, key) for p in parts)
    if step == 0 or (stop - start) * step < 0:
        raise ConfigurationError(f"step {step:g} does not lead from {start:g} to {stop:g}", key)
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 9) for k in range(count))


def _parse_enum(enum: Type[Any], text: str, key: str) -> Any:
    try:
        return enum(text.strip().lower())
    except ValueError:
        choices = ", ".join(e.value for e in enum)
        raise ConfigurationError(f"unknown value {text!r} (choose from {choices})", key) from None


PARSERS: Dict[str, Callable[[str, str], Any]] = {
    "scheme": lambda text, key: _parse_enum(SchemeKind, text, key),
    "n_links": parse_count,
    "csk_order": parse_count,
    "symbol_duration": parse_duration,
    "separation": parse_length,
    "link_distance": parse_length,
    "receiver_radius": parse_length,
    "diffusion_coeff": parse_float,
    "snr_db": parse_snr_grid,
    "symbols": parse_count,
    "replications": parse_count,
    "seed": parse_count,
    "detector": lambda text, key: _parse_enum(Detector, text, key),
    "threshold_policy": lambda text, key: _parse_enum(ThresholdPolicy, text, key),
    "level_ratios": parse_float_list,
    "noise": parse_bool,
    "interference": parse_bool,
    "tight_bound": parse_bool,
    "workers": parse_count,
}


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Raw ``KEY=VALUE`` pairs from a run configuration file, keys lower-cased."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} not found", "config")
    raw: Dict[str, str] = {}
    for key, value in dotenv_values(path).items():
        key = key.strip().lower()
        if value is None:
            raise ConfigurationError("missing value", key)
        raw[key] = value
    return raw


def _build(model: Type[Model], fields: Dict[str, Any], keys: Mapping[str, str], fallback: str) -> Model:
    """Validate a model, reporting failures against configuration key names."""
    try:
        return model(**fields)
    except ValidationError as exc:
        error = exc.errors()[0]
        loc = error["loc"][0] if error["loc"] else None
        message = error["msg"].removeprefix("Value error, ")
        key = keys.get(str(loc)) if loc is not None else None
        if key is None:
            named = [k for k in keys.values() if k in message]
            key = min(named, key=message.index) if named else fallback
        raise ConfigurationError(message, key) from None


def parse_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Resolve a run configuration: built-in defaults < config file < overrides.

    Args:
        path: Optional ``KEY=VALUE`` file.
        overrides: Values from the command line. Strings go through the same parsers
            as file values; ``None`` entries are ignored.

    Raises:
        ConfigurationError: Unknown key, malformed value or unsatisfiable combination.
    """
    raw: Dict[str, Any] = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key.lower()] = value

    values: Dict[str, Any] = {}
    for key, value in raw.items():
        if key not in PARSERS:
            raise ConfigurationError("unknown configuration key", key)
        values[key] = PARSERS[key](value, key) if isinstance(value, str) else value

    kind = values.get("scheme", SchemeKind.SM)
    n_default, m_default = SCHEME_DEFAULTS[kind]
    n_links = values.get("n_links", n_default)
    scheme = _build(
        Scheme,
        {"kind": kind, "n_links": n_links, "csk_order": values.get("csk_order", m_default)},
        {"kind": "scheme", "n_links": "n_links", "csk_order": "csk_order"},
        "scheme",
    )
    geometry = _build(
        SystemGeometry,
        {
            "n_links": n_links,
            "link_distance": values.get("link_distance", DEFAULT_LINK_DISTANCE),
            "separation": values.get("separation", DEFAULT_SEPARATION),
            "receiver_radius": values.get("receiver_radius", DEFAULT_RECEIVER_RADIUS),
            "diffusion_coeff": values.get("diffusion_coeff", DEFAULT_DIFFUSION_COEFF),
        },
        {name: name for name in SystemGeometry.model_fields},
        "receiver_radius",
    )
    config = _build(
        RunConfig,
        {
            "scheme": scheme,
            "geometry": geometry,
            "symbol_duration": values.get("symbol_duration", DEFAULT_SYMBOL_DURATION),
            "snr_grid": values.get("snr_db", DEFAULT_SNR_GRID),
            "symbols": values.get("symbols", DEFAULT_SYMBOLS),
            "replications": values.get("replications", DEFAULT_REPLICATIONS),
            "seed": values.get("seed", 0),
            "detector": values.get("detector", Detector.EGC),
            "threshold_policy": values.get("threshold_policy", ThresholdPolicy.MIDPOINT),
            "level_ratios": values.get("level_ratios"),
            "noise": values.get("noise", True),
            "interference": values.get("interference", True),
            "tight_bound": values.get("tight_bound", False),
            "workers": values.get("workers", get_settings().workers),
        },
        {
            "symbol_duration": "symbol_duration",
            "snr_grid": "snr_db",
            "symbols": "symbols",
            "replications": "replications",
            "seed": "seed",
            "workers": "workers",
            "level_ratios": "level_ratios",
        },
        "n_links",
    )

    # Fail on unsatisfiable level ratios before any simulation starts.
    calibrate_alphabet(config.scheme, config.geometry, config.snr_grid[0], config.level_ratios)
    logger.debug(f"Resolved run configuration: {config}")
    return config


def describe(config: RunConfig) -> Dict[str, str]:
    """Human-readable summary of a configuration in file units."""
    geom = config.geometry
    return {
        "scheme": config.label,
        "symbol_duration": f"{config.symbol_duration:g} s",
        "separation": f"{geom.separation * 1e6:g} um",
        "link_distance": f"{geom.link_distance * 1e6:g} um",
        "snr_db": ", ".join(f"{s:g}" for s in config.snr_grid),
        "symbols": f"{config.symbols} x {config.replications}",
        "seed": str(config.seed),
    }
