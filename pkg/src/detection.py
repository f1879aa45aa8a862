"""Receiver decision rules.

Every detector works on a single received vector of shape (N,) or a batch of
shape (K, N) and decides each row independently (memoryless receivers). Ties
always go to the smallest index. Detectors use the true channel snapshot.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from src.channel import ChannelSnapshot
from src.errors import ConfigurationError
from src.modulation import CskAlphabet, Scheme, SchemeKind, SymbolBatch

logger = logging.getLogger(__name__)

Indices = Union[int, npt.NDArray[np.int64]]


class Detector(str, Enum):
    ML = "ml"
    EGC = "egc"
    SC = "sc"


class ThresholdPolicy(str, Enum):
    MIDPOINT = "midpoint"
    MEAN_ILI = "mean_ili"


@dataclass(frozen=True)
class Decision:
    """Decided symbols plus the number of hypothesis metrics evaluated per detection."""

    symbols: SymbolBatch
    evaluations: int


def _as_index(value: npt.NDArray[np.int64]) -> Indices:
    return int(value) if np.ndim(value) == 0 else value


def detect_ml_joint(
    y: npt.ArrayLike, snapshot: ChannelSnapshot, alphabet: CskAlphabet
) -> Tuple[Indices, Indices]:
    """Joint (j, m) minimizing ||y - S_m h_j||^2 over all N*M hypotheses."""
    y_arr = np.asarray(y, dtype=float)
    levels = alphabet.as_array()
    # templates[j, m, :] = S_m * (column j of H)
    templates = levels[None, :, None] * snapshot.h_now.T[:, None, :]
    residual = np.sum((y_arr[..., None, None, :] - templates) ** 2, axis=-1)
    flat = residual.reshape(*residual.shape[:-2], -1)
    space, level = np.divmod(np.argmin(flat, axis=-1), alphabet.size)
    return _as_index(space), _as_index(level)


def detect_space(y: npt.ArrayLike) -> Indices:
    """Index of the receiver sensing the highest concentration."""
    return _as_index(np.argmax(np.asarray(y, dtype=float), axis=-1))


def _nearest_level(observed: npt.NDArray[np.float64], images: npt.NDArray[np.float64]) -> Indices:
    residual = (observed[..., None] - images) ** 2
    return _as_index(np.argmin(residual, axis=-1))


def detect_csk_sc(
    y: npt.ArrayLike, j_hat: Indices, snapshot: ChannelSnapshot, alphabet: CskAlphabet
) -> Indices:
    """Level decision from the detected receiver alone (selection combining)."""
    y_arr = np.asarray(y, dtype=float)
    j_arr = np.asarray(j_hat)
    observed = np.take_along_axis(y_arr, j_arr[..., None], axis=-1)[..., 0]
    images = alphabet.as_array() * np.asarray(snapshot.h_now[j_arr, j_arr])[..., None]
    return _nearest_level(observed, images)


def detect_csk_egc(
    y: npt.ArrayLike, j_hat: Indices, snapshot: ChannelSnapshot, alphabet: CskAlphabet
) -> Indices:
    """Level decision from all receivers against the detected column (equal gain combining)."""
    y_arr = np.asarray(y, dtype=float)
    column = snapshot.h_now.T[np.asarray(j_hat)]
    templates = alphabet.as_array()[:, None] * column[..., None, :]
    residual = np.sum((y_arr[..., None, :] - templates) ** 2, axis=-1)
    return _as_index(np.argmin(residual, axis=-1))


def ook_thresholds(
    snapshot: ChannelSnapshot, alphabet: CskAlphabet, policy: Union[ThresholdPolicy, str] = ThresholdPolicy.MIDPOINT
) -> npt.NDArray[np.float64]:
    """Per-receiver decision thresholds for the MIMO-OOK detector."""
    try:
        policy = ThresholdPolicy(policy)
    except ValueError:
        raise ConfigurationError(f"unknown threshold policy {policy!r}", "threshold_policy") from None

    s_on = alphabet.levels[1]
    diagonal = np.diag(snapshot.h_now)
    thresholds = s_on * diagonal / 2.0
    if policy is ThresholdPolicy.MEAN_ILI:
        # Each unpaired link is on half the time.
        off_diagonal = snapshot.h_now.sum(axis=1) - diagonal
        thresholds = thresholds + s_on * off_diagonal / 2.0
    return thresholds


def detect_mimo_ook(
    y: npt.ArrayLike,
    snapshot: ChannelSnapshot,
    alphabet: CskAlphabet,
    policy: Union[ThresholdPolicy, str] = ThresholdPolicy.MIDPOINT,
) -> npt.NDArray[np.int8]:
    """Per-link bit decisions; a concentration at or above the threshold reads as 1."""
    thresholds = ook_thresholds(snapshot, alphabet, policy)
    return (np.asarray(y, dtype=float) >= thresholds).astype(np.int8)


def detect_siso_csk(y: npt.ArrayLike, snapshot: ChannelSnapshot, alphabet: CskAlphabet) -> Indices:
    """Nearest-level decision for a single link."""
    y_arr = np.asarray(y, dtype=float)
    if y_arr.ndim == 0:
        y_arr = y_arr[None]
    images = alphabet.as_array() * snapshot.h_diag
    return _nearest_level(y_arr[..., 0], images)


def hypothesis_count(detector: Union[Detector, str], n_links: int, csk_order: int) -> int:
    """Metric evaluations per detection: N*M for joint ML, N+M for successive detection."""
    if Detector(detector) is Detector.ML:
        return n_links * csk_order
    return n_links + csk_order


def detect(
    scheme: Scheme,
    detector: Union[Detector, str],
    y: npt.ArrayLike,
    snapshot: ChannelSnapshot,
    alphabet: CskAlphabet,
    threshold_policy: Union[ThresholdPolicy, str] = ThresholdPolicy.MIDPOINT,
) -> Decision:
    """Run the scheme's detector on a batch of received vectors, shape (K, N)."""
    y_arr = np.atleast_2d(np.asarray(y, dtype=float))
    count = y_arr.shape[0]
    zeros = np.zeros(count, dtype=np.int64)

    if scheme.kind is SchemeKind.MIMO_OOK:
        bits = detect_mimo_ook(y_arr, snapshot, alphabet, threshold_policy)
        return Decision(SymbolBatch(space=zeros, level=zeros.copy(), bits=bits), evaluations=scheme.n_links)

    if scheme.kind is SchemeKind.SISO_CSK:
        level = np.asarray(detect_siso_csk(y_arr, snapshot, alphabet), dtype=np.int64)
        return Decision(SymbolBatch(space=zeros, level=level), evaluations=scheme.csk_order)

    try:
        detector = Detector(detector)
    except ValueError:
        raise ConfigurationError(f"unknown detector {detector!r}", "detector") from None

    if detector is Detector.ML:
        space, level = detect_ml_joint(y_arr, snapshot, alphabet)
        evaluations = scheme.n_links * alphabet.size
    else:
        space = detect_space(y_arr)
        if detector is Detector.EGC:
            level = detect_csk_egc(y_arr, space, snapshot, alphabet)
        else:
            level = detect_csk_sc(y_arr, space, snapshot, alphabet)
        evaluations = scheme.n_links + alphabet.size

    return Decision(
        SymbolBatch(space=np.asarray(space, dtype=np.int64), level=np.asarray(level, dtype=np.int64)),
        evaluations=evaluations,
    )
