"""Received concentration for one symbol interval.

Each receiver senses the desired signal plus interference (current inter-link
interference and the residue of the previous symbol from its paired transmitter)
plus Gaussian noise whose variance is the expected concentration over V_RX.
Samples are returned raw; negative concentrations are not clamped.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt

from src.channel import ChannelSnapshot, SystemGeometry
from src.modulation import (
    CskAlphabet,
    MolecularSymbol,
    Scheme,
    SchemeKind,
    SymbolBatch,
    emission_matrix,
    emission_vector,
)

logger = logging.getLogger(__name__)

ReceivedVector = npt.NDArray[np.float64]


@dataclass(frozen=True)
class NoiseStats:
    mean: npt.NDArray[np.float64]
    variance: npt.NDArray[np.float64]


def interference(
    scheme: Scheme,
    snapshot: ChannelSnapshot,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
    receiver: int,
) -> float:
    """Interference sensed by ``receiver``; ``previous=None`` marks the first symbol of a sequence."""
    if not 0 <= receiver < snapshot.n_links:
        raise ValueError(f"receiver {receiver} out of range for {snapshot.n_links} links")

    if scheme.kind is SchemeKind.MIMO_OOK:
        x_now = emission_vector(scheme, current, alphabet)
        others = np.arange(snapshot.n_links) != receiver
        ili = float(np.sum(snapshot.h_now[receiver, others] * x_now[others]))
        isi = 0.0
        if previous is not None:
            isi = snapshot.h_prev_self * float(emission_vector(scheme, previous, alphabet)[receiver])
        return ili + isi

    # Only one transmitter fires per symbol, so the sole interference is the
    # paired residue at the receiver of the previously active link.
    if previous is None or receiver != previous.space_index:
        return 0.0
    return alphabet.levels[previous.level_index] * snapshot.h_prev_self


def received_mean(
    scheme: Scheme,
    snapshot: ChannelSnapshot,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
    include_interference: bool = True,
) -> npt.NDArray[np.float64]:
    """Expected concentration at every receiver for one symbol."""
    x = emission_vector(scheme, current, alphabet)
    if scheme.kind is SchemeKind.MIMO_OOK:
        desired = np.diag(snapshot.h_now) * x
    else:
        desired = snapshot.h_now[:, current.space_index] * x[current.space_index]
    if not include_interference:
        return desired
    return desired + np.array(
        [interference(scheme, snapshot, alphabet, current, previous, i) for i in range(snapshot.n_links)]
    )


def noise_stats(mean: npt.NDArray[np.float64], geom: SystemGeometry) -> NoiseStats:
    """Zero-mean noise whose variance is (signal + interference) / V_RX."""
    variance = np.asarray(mean, dtype=float) / geom.receiver_volume
    if np.any(variance < 0):
        raise RuntimeError("negative noise variance; expected concentrations must be non-negative")
    return NoiseStats(mean=np.zeros_like(variance), variance=variance)


def _add_noise(
    mean: npt.NDArray[np.float64], geom: SystemGeometry, rng: np.random.Generator, noise: bool
) -> ReceivedVector:
    if not noise:
        return mean.copy()
    stats = noise_stats(mean, geom)
    return mean + np.sqrt(stats.variance) * rng.standard_normal(mean.shape)


def sample_received(
    scheme: Scheme,
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
    rng: np.random.Generator,
    noise: bool = True,
    interference: bool = True,
) -> ReceivedVector:
    """Draw the concentrations sensed by all N receivers for one symbol."""
    mean = received_mean(scheme, snapshot, alphabet, current, previous, include_interference=interference)
    return _add_noise(mean, geom, rng, noise)


def expected_sequence(
    scheme: Scheme,
    snapshot: ChannelSnapshot,
    alphabet: CskAlphabet,
    batch: SymbolBatch,
    interference: bool = True,
) -> npt.NDArray[np.float64]:
    """Expected concentrations for a whole symbol sequence, shape (K, N).

    Symbol k sees the residue of symbol k-1; symbol 0 sees none.
    """
    emission = emission_matrix(scheme, batch, alphabet)
    h_now = snapshot.h_now

    if scheme.kind is SchemeKind.MIMO_OOK:
        if not interference:
            return emission * np.diag(h_now)
        mean = emission @ h_now.T
        mean[1:] += snapshot.h_prev_self * emission[:-1]
        return mean

    mean = emission @ h_now.T
    if interference and len(batch) > 1:
        rows = np.arange(1, len(batch))
        previous_space = batch.space[:-1]
        mean[rows, previous_space] += emission[rows - 1, previous_space] * snapshot.h_prev_self
    return mean


def sample_sequence(
    scheme: Scheme,
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    batch: SymbolBatch,
    rng: np.random.Generator,
    noise: bool = True,
    interference: bool = True,
) -> npt.NDArray[np.float64]:
    """Received vectors for a whole symbol sequence, shape (K, N)."""
    mean = expected_sequence(scheme, snapshot, alphabet, batch, interference=interference)
    return _add_noise(mean, geom, rng, noise)
