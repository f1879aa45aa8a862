"""Experiment presets for the published SER figures.

Each preset expands into the full list of run configurations behind one figure.
Desk scale runs 1e5 symbols x 5 replications per point; full scale runs the
published 1e6 x 20.
"""

import logging
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from src.channel import SystemGeometry
from src.detection import Detector
from src.engine import RunConfig
from src.errors import ConfigurationError
from src.modulation import Scheme, SchemeKind
from src.settings import (
    DEFAULT_DIFFUSION_COEFF,
    DEFAULT_LINK_DISTANCE,
    DEFAULT_RECEIVER_RADIUS,
    DEFAULT_REPLICATIONS,
    DEFAULT_SNR_GRID,
    DEFAULT_SYMBOLS,
    get_settings,
)

logger = logging.getLogger(__name__)

FULL_SCALE_SYMBOLS = 1_000_000
FULL_SCALE_REPLICATIONS = 20

UM = 1e-6

# Keys a caller may override on every curve of a preset.
OVERRIDABLE = ("seed", "symbols", "replications", "workers", "snr_grid", "noise", "interference")


class FigurePreset(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    description: str
    configs: Tuple[RunConfig, ...]


def _curve(
    kind: SchemeKind,
    n_links: int,
    csk_order: int,
    symbol_duration: float,
    separation_um: float,
    detector: Detector = Detector.EGC,
) -> Dict[str, Any]:
    return {
        "scheme": Scheme(kind=kind, n_links=n_links, csk_order=csk_order),
        "geometry": SystemGeometry(
            n_links=n_links,
            link_distance=DEFAULT_LINK_DISTANCE,
            separation=separation_um * UM,
            receiver_radius=DEFAULT_RECEIVER_RADIUS,
            diffusion_coeff=DEFAULT_DIFFUSION_COEFF,
        ),
        "symbol_duration": symbol_duration,
        "detector": detector,
    }


def _ssk_pair(symbol_duration: float, separation_um: float) -> List[Dict[str, Any]]:
    return [
        _curve(SchemeKind.SSK, 2, 1, symbol_duration, separation_um),
        _curve(SchemeKind.SSK, 4, 1, symbol_duration, separation_um),
    ]


def _sm_pair(symbol_duration: float, separation_um: float, detector: Detector = Detector.EGC) -> List[Dict[str, Any]]:
    return [
        _curve(SchemeKind.SM, 2, 2, symbol_duration, separation_um, detector),
        _curve(SchemeKind.SM, 4, 2, symbol_duration, separation_um, detector),
    ]


def _fig4() -> List[Dict[str, Any]]:
    return [c for ts in (0.1, 0.2, 0.8) for c in _ssk_pair(ts, 12.5)]


def _fig5() -> List[Dict[str, Any]]:
    return [c for r in (10.0, 12.5, 15.0) for c in _ssk_pair(0.5, r)]


def _fig6() -> List[Dict[str, Any]]:
    return [c for ts in (0.15, 0.3, 1.0) for c in _sm_pair(ts, 10.0)]


def _fig7() -> List[Dict[str, Any]]:
    return [c for r in (8.0, 10.0, 12.0) for c in _sm_pair(1.0, r)]


def _fig8() -> List[Dict[str, Any]]:
    # Every scheme carries 2 bits per symbol.
    curves = []
    for r in (10.0, 15.0):
        curves += [
            _curve(SchemeKind.SISO_CSK, 1, 4, 0.2, r),
            _curve(SchemeKind.MIMO_OOK, 2, 2, 0.2, r),
            _curve(SchemeKind.SSK, 4, 1, 0.2, r),
            _curve(SchemeKind.SM, 2, 2, 0.2, r),
        ]
    return curves


def _fig9() -> List[Dict[str, Any]]:
    return [
        c
        for r in (10.0, 12.5, 15.0)
        for detector in (Detector.SC, Detector.EGC)
        for c in _sm_pair(1.0, r, detector)
    ]


PRESETS: Dict[str, Tuple[str, Callable[[], List[Dict[str, Any]]]]] = {
    "fig4": ("BSSK and QSSK, r = 12.5 um, T_s in {0.1, 0.2, 0.8} s", _fig4),
    "fig5": ("BSSK and QSSK, T_s = 0.5 s, r in {10, 12.5, 15} um", _fig5),
    "fig6": ("2x2 and 4x4 SM-BCSK, r = 10 um, T_s in {0.15, 0.3, 1} s", _fig6),
    "fig7": ("2x2 and 4x4 SM-BCSK, T_s = 1 s, r in {8, 10, 12} um", _fig7),
    "fig8": ("2 bit/symbol schemes, T_s = 0.2 s, r in {10, 15} um", _fig8),
    "fig9": ("SC vs EGC for 2x2 and 4x4 SM-BCSK, T_s = 1 s, r in {10, 12.5, 15} um", _fig9),
}


def preset_names() -> Sequence[str]:
    return tuple(PRESETS)


def expand_preset(
    name: str,
    overrides: Optional[Mapping[str, Any]] = None,
    full_scale: bool = False,
) -> FigurePreset:
    """Expand a figure preset into its run configurations.

    Args:
        name: One of ``fig4`` .. ``fig9``.
        overrides: Values applied to every curve (see ``OVERRIDABLE``); ``None`` entries are ignored.
        full_scale: Use the published sequence length and replication count.
    """
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r} (choose from {', '.join(PRESETS)})", "figure")

    shared: Dict[str, Any] = {
        "snr_grid": DEFAULT_SNR_GRID,
        "symbols": FULL_SCALE_SYMBOLS if full_scale else DEFAULT_SYMBOLS,
        "replications": FULL_SCALE_REPLICATIONS if full_scale else DEFAULT_REPLICATIONS,
        "workers": get_settings().workers,
    }
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in OVERRIDABLE:
            raise ConfigurationError("cannot be overridden for a figure preset", key)
        shared[key] = value

    description, build = PRESETS[name]
    configs = tuple(RunConfig(**curve, **shared) for curve in build())
    logger.debug(f"Preset {name} expands to {len(configs)} curve(s)")
    return FigurePreset(name=name, description=description, configs=configs)
