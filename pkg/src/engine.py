"""Monte-Carlo symbol error rate estimation over SNR sweeps.

Work is split into (SNR point, replication) tasks. Each task draws from its own
random stream, a Philox generator seeded by ``SeedSequence(seed,
spawn_key=(snr_key, replication))`` where ``snr_key`` is the SNR in millidecibels
zigzag-encoded to a non-negative integer. Results are integer error counts
summed per point, so the output does not depend on the worker count or on the
order in which tasks finish.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from tqdm import tqdm

from src.analysis import AnalyticKind, SerEstimate, analytic_ser
from src.channel import ChannelSnapshot, SystemGeometry, snapshot
from src.detection import Detector, ThresholdPolicy, detect
from src.link_model import sample_sequence
from src.modulation import CskAlphabet, Scheme, calibrate_alphabet, random_symbols, symbol_errors

logger = logging.getLogger(__name__)

MIN_SYMBOLS = 1000
DETECTION_CHUNK = 1 << 16
Z_95 = 1.96


class RunConfig(BaseModel):
    """Everything needed to reproduce one SER curve."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    scheme: Scheme
    geometry: SystemGeometry
    symbol_duration: float = Field(..., gt=0)
    snr_grid: Tuple[float, ...] = Field(..., min_length=1)
    symbols: int = Field(100_000, ge=MIN_SYMBOLS)
    replications: int = Field(5, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    detector: Detector = Detector.EGC
    threshold_policy: ThresholdPolicy = ThresholdPolicy.MIDPOINT
    level_ratios: Optional[Tuple[float, ...]] = None
    noise: bool = True
    interference: bool = True
    tight_bound: bool = False
    workers: int = Field(1, ge=1)

    @field_validator("snr_grid")
    @classmethod
    def _check_grid(cls, grid: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(set(grid)) != len(grid):
            raise ValueError("snr_grid contains duplicate points")
        return grid

    @model_validator(mode="after")
    def _check_links(self) -> "RunConfig":
        if self.scheme.n_links != self.geometry.n_links:
            raise ValueError(
                f"n_links: scheme has {self.scheme.n_links} links but geometry has {self.geometry.n_links}"
            )
        return self

    @property
    def label(self) -> str:
        label = self.scheme.label
        if self.scheme.kind.value in ("sm", "ssk") and self.detector is not Detector.EGC:
            label += f" ({self.detector.value.upper()})"
        return label


class SerPoint(BaseModel):
    """Simulated and analytical SER at one SNR."""

    model_config = ConfigDict(frozen=True)

    snr_db: float
    ser_sim: Optional[float] = Field(None, ge=0, le=1)
    ci95: Optional[float] = Field(None, ge=0)
    ser_analytic: Optional[float] = Field(None, ge=0, le=1)
    analytic_kind: Optional[AnalyticKind] = None
    errors: int = Field(0, ge=0)
    symbols: int = Field(0, ge=0, description="symbols per replication")
    replications: int = Field(0, ge=0)

    @property
    def total_symbols(self) -> int:
        return self.symbols * self.replications

    @property
    def std_error(self) -> Optional[float]:
        if self.ser_sim is None or self.total_symbols == 0:
            return None
        return math.sqrt(self.ser_sim * (1.0 - self.ser_sim) / self.total_symbols)


class SerCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: RunConfig
    points: List[SerPoint]

    @property
    def label(self) -> str:
        return self.config.label


def _snr_key(snr_db: float) -> int:
    millidb = int(round(snr_db * 1000))
    return 2 * millidb if millidb >= 0 else -2 * millidb - 1


def substream(seed: int, snr_db: float, replication: int) -> np.random.Generator:
    """Independent random stream for one (SNR point, replication) task."""
    sequence = np.random.SeedSequence(seed, spawn_key=(_snr_key(snr_db), replication))
    return np.random.Generator(np.random.Philox(sequence))


def _simulate_replication(
    config: RunConfig,
    channel: ChannelSnapshot,
    alphabet: CskAlphabet,
    snr_db: float,
    replication: int,
) -> Tuple[int, int]:
    """Simulate one symbol sequence and return (errors, symbols)."""
    rng = substream(config.seed, snr_db, replication)
    sent = random_symbols(config.scheme, config.symbols, rng)
    received = sample_sequence(
        config.scheme,
        channel,
        config.geometry,
        alphabet,
        sent,
        rng,
        noise=config.noise,
        interference=config.interference,
    )

    errors = 0
    for start in range(0, config.symbols, DETECTION_CHUNK):
        stop = min(start + DETECTION_CHUNK, config.symbols)
        decision = detect(
            config.scheme,
            config.detector,
            received[start:stop],
            channel,
            alphabet,
            config.threshold_policy,
        )
        flags = symbol_errors(config.scheme, sent.window(start, stop), decision.symbols)
        errors += int(np.count_nonzero(flags))
    return errors, config.symbols


def _overlay(config: RunConfig, channel: ChannelSnapshot, alphabet: CskAlphabet) -> Optional[SerEstimate]:
    # Closed forms assume the full noisy, interference-limited channel.
    if not (config.noise and config.interference):
        return None
    return analytic_ser(
        config.scheme,
        config.detector,
        channel,
        config.geometry,
        alphabet,
        config.threshold_policy,
        config.tight_bound,
    )


def _make_point(
    config: RunConfig,
    channel: ChannelSnapshot,
    alphabet: CskAlphabet,
    snr_db: float,
    errors: int,
) -> SerPoint:
    total = config.symbols * config.replications
    ser = errors / total
    ci95 = Z_95 * math.sqrt(ser * (1.0 - ser) / total)

    estimate = _overlay(config, channel, alphabet)
    point = SerPoint(
        snr_db=snr_db,
        ser_sim=ser,
        ci95=ci95,
        ser_analytic=estimate.value if estimate else None,
        analytic_kind=estimate.kind if estimate else None,
        errors=errors,
        symbols=config.symbols,
        replications=config.replications,
    )
    analytic = f"{point.ser_analytic:.4g} ({point.analytic_kind.value})" if estimate else "n/a"
    logger.info(f"{config.label} SNR={snr_db:g} dB: SER={ser:.4g} +/- {ci95:.2g}, analytic={analytic}")
    return point


def run_sweep(config: RunConfig, progress: bool = False) -> SerCurve:
    """Simulate every SNR point of the configuration's grid."""
    channel = snapshot(config.geometry, config.symbol_duration)
    alphabets = {
        snr: calibrate_alphabet(config.scheme, config.geometry, snr, config.level_ratios) for snr in config.snr_grid
    }
    tasks = [(snr, rep) for snr in config.snr_grid for rep in range(config.replications)]
    errors: Dict[float, int] = {snr: 0 for snr in config.snr_grid}

    logger.info(
        f"Simulating {config.label}: {len(config.snr_grid)} SNR point(s) x {config.replications} "
        f"replication(s) x {config.symbols} symbols, {config.workers} worker(s)"
    )
    with tqdm(total=len(tasks), desc=config.label, disable=not progress, leave=False) as bar:
        if config.workers == 1:
            for snr, rep in tasks:
                errors[snr] += _simulate_replication(config, channel, alphabets[snr], snr, rep)[0]
                bar.update()
        else:
            with ProcessPoolExecutor(max_workers=config.workers) as executor:
                futures = {
                    executor.submit(_simulate_replication, config, channel, alphabets[snr], snr, rep): snr
                    for snr, rep in tasks
                }
                for future in as_completed(futures):
                    errors[futures[future]] += future.result()[0]
                    bar.update()

    points = [_make_point(config, channel, alphabets[snr], snr, errors[snr]) for snr in config.snr_grid]
    return SerCurve(config=config, points=points)


def run_point(config: RunConfig, snr_db: float) -> SerPoint:
    """Simulate a single SNR point with the configuration's replications."""
    single = config.model_copy(update={"snr_grid": (snr_db,)})
    return run_sweep(single).points[0]


def analytic_sweep(config: RunConfig) -> SerCurve:
    """Closed-form SER over the grid without any simulation."""
    channel = snapshot(config.geometry, config.symbol_duration)
    points = []
    for snr in config.snr_grid:
        alphabet = calibrate_alphabet(config.scheme, config.geometry, snr, config.level_ratios)
        estimate = _overlay(config, channel, alphabet)
        points.append(
            SerPoint(
                snr_db=snr,
                ser_analytic=estimate.value if estimate else None,
                analytic_kind=estimate.kind if estimate else None,
            )
        )
    if all(p.ser_analytic is None for p in points):
        logger.warning(f"No closed form for {config.label} with detector {config.detector.value}")
    return SerCurve(config=config, points=points)
