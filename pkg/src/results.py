"""SER curve output: per-curve CSV, long-format CSV, gnuplot data and read-back."""

import logging
import math
import re
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.analysis import AnalyticKind
from src.engine import SerCurve, SerPoint

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "scheme",
    "N",
    "M",
    "Ts_s",
    "r_um",
    "d_um",
    "snr_db",
    "ser_sim",
    "ci95",
    "ser_analytic",
    "analytic_kind",
    "symbols",
    "replications",
    "seed",
]
FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def curve_frame(curve: SerCurve) -> pd.DataFrame:
    """One row per SNR point, columns as in ``CSV_COLUMNS``."""
    config = curve.config
    rows = [
        {
            "scheme": curve.label,
            "N": config.scheme.n_links,
            "M": config.scheme.csk_order,
            "Ts_s": config.symbol_duration,
            "r_um": config.geometry.separation * 1e6,
            "d_um": config.geometry.link_distance * 1e6,
            "snr_db": point.snr_db,
            "ser_sim": point.ser_sim,
            "ci95": point.ci95,
            "ser_analytic": point.ser_analytic,
            "analytic_kind": point.analytic_kind.value if point.analytic_kind else None,
            "symbols": point.symbols,
            "replications": point.replications,
            "seed": config.seed,
        }
        for point in curve.points
    ]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    # Keep numeric dtypes when a whole column is None (analysis-only sweeps).
    for column in ("ser_sim", "ci95", "ser_analytic"):
        frame[column] = frame[column].astype(float)
    return frame


def curve_filename(curve: SerCurve, index: int) -> str:
    config = curve.config
    stem = (
        f"{index:02d}_{curve.label}_Ts{config.symbol_duration:g}s"
        f"_r{config.geometry.separation * 1e6:g}um"
    )
    return re.sub(r"[^A-Za-z0-9.-]+", "_", stem).strip("_") + ".csv"


def _ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def write_curve_csv(curve: SerCurve, path: PathLike) -> Path:
    path = Path(path)
    _ensure_parent(path)
    curve_frame(curve).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(curve.points)} point(s) to {path}")
    return path


def write_long_csv(curves: Sequence[SerCurve], path: PathLike) -> Path:
    """All curves in one file with a leading ``curve`` index column."""
    path = Path(path)
    _ensure_parent(path)
    frames = [curve_frame(c).assign(curve=i) for i, c in enumerate(curves)]
    long = pd.concat(frames, ignore_index=True)[["curve", *CSV_COLUMNS]]
    long.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(curves)} curve(s) to {path}")
    return path


def write_gnuplot(curves: Sequence[SerCurve], path: PathLike) -> Path:
    """Whitespace-separated data, one ``index`` block per curve (two blank lines between blocks)."""
    path = Path(path)
    _ensure_parent(path)
    columns = ["snr_db", "ser_sim", "ci95", "ser_analytic"]
    blocks = []
    for i, curve in enumerate(curves):
        frame = curve_frame(curve)[columns]
        body = frame.to_csv(sep=" ", index=False, header=False, float_format=FLOAT_FORMAT, na_rep="NaN")
        header = (
            f"# index {i}: {curve.label}, Ts={curve.config.symbol_duration:g} s, "
            f"r={curve.config.geometry.separation * 1e6:g} um\n# {' '.join(columns)}\n"
        )
        blocks.append(header + body)
    path.write_text("\n\n".join(blocks))
    logger.info(f"Wrote gnuplot data for {len(curves)} curve(s) to {path}")
    return path


def _optional(value: object) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)  # type: ignore[arg-type]


def read_curve_csv(path: PathLike) -> List[SerPoint]:
    """Points of a per-curve CSV; error counts are recovered from the pooled rate."""
    frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=True)
    missing = set(CSV_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{path}: missing column(s) {', '.join(sorted(missing))}")

    points = []
    for row in frame.to_dict("records"):
        ser_sim = _optional(row["ser_sim"])
        symbols = int(row["symbols"])
        replications = int(row["replications"])
        kind = row["analytic_kind"]
        points.append(
            SerPoint(
                snr_db=float(row["snr_db"]),
                ser_sim=ser_sim,
                ci95=_optional(row["ci95"]),
                ser_analytic=_optional(row["ser_analytic"]),
                analytic_kind=AnalyticKind(kind) if isinstance(kind, str) else None,
                errors=int(round(ser_sim * symbols * replications)) if ser_sim is not None else 0,
                symbols=symbols,
                replications=replications,
            )
        )
    return points


def snr_at_ser(points: Sequence[SerPoint], target: float, analytic: bool = False) -> Optional[float]:
    """SNR where a curve first falls to ``target``, interpolated linearly in log10(SER)."""
    if target <= 0:
        raise ValueError(f"target SER must be positive, got {target}")
    pairs = [(p.snr_db, p.ser_analytic if analytic else p.ser_sim) for p in sorted(points, key=lambda p: p.snr_db)]
    pairs = [(snr, ser) for snr, ser in pairs if ser is not None]

    for (snr0, ser0), (snr1, ser1) in zip(pairs, pairs[1:]):
        if ser0 >= target >= ser1:
            if ser0 == ser1:
                return snr0
            if ser1 <= 0:
                return float(np.interp(target, [ser1, ser0], [snr1, snr0]))
            weight = (math.log10(ser0) - math.log10(target)) / (math.log10(ser0) - math.log10(ser1))
            return snr0 + weight * (snr1 - snr0)
    return None


def snr_gap_at_ser(curve_a: SerCurve, curve_b: SerCurve, target: float, analytic: bool = False) -> Optional[float]:
    """How many dB more ``curve_a`` needs than ``curve_b`` to reach ``target``; None if either never does."""
    snr_a = snr_at_ser(curve_a.points, target, analytic)
    snr_b = snr_at_ser(curve_b.points, target, analytic)
    if snr_a is None or snr_b is None:
        return None
    return snr_a - snr_b
