"""Closed-form symbol error rates.

SSK error probability, the SM error upper bound for successive (space, then EGC
level) detection, and exact overlays for the SISO-CSK and MIMO-OOK baselines.
The probability that receiver j beats every other receiver is factorized into
independent pairwise events; the Monte-Carlo engine measures how much that
approximation costs.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy.special import erfc

from src.channel import ChannelSnapshot, SystemGeometry
from src.detection import Detector, ThresholdPolicy, ook_thresholds
from src.modulation import CskAlphabet, MolecularSymbol, Scheme, SchemeKind

logger = logging.getLogger(__name__)

MAX_OOK_LINKS = 8


class AnalyticKind(str, Enum):
    EXACT = "exact"
    UPPER_BOUND = "upper_bound"


@dataclass(frozen=True)
class ConditionalGaussian:
    """Distribution of y_j - y_i given the current and previous symbols."""

    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class SerEstimate:
    value: float
    kind: AnalyticKind


def q_function(x: Union[float, npt.ArrayLike]) -> Union[float, npt.NDArray[np.float64]]:
    """Gaussian tail probability Q(x) = P(Z > x) for standard normal Z."""
    value = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(value) if np.ndim(value) == 0 else value


def _tail(mean: float, std: float, threshold: float = 0.0) -> float:
    """P(X > threshold) for X ~ N(mean, std^2), with std = 0 read as a point mass."""
    if std == 0.0:
        return 1.0 if mean > threshold else 0.0
    return q_function((threshold - mean) / std)


def _receiver_moments(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Mean and variance of every receiver for a single-transmitter symbol."""
    mean = alphabet.levels[current.level_index] * snapshot.h_now[:, current.space_index].copy()
    if previous is not None:
        mean[previous.space_index] += alphabet.levels[previous.level_index] * snapshot.h_prev_self
    return mean, mean / geom.receiver_volume


def cond_gaussian(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
    i: int,
) -> ConditionalGaussian:
    """Mean and variance of y_j - y_i, j being the active transmitter."""
    j = current.space_index
    if i == j:
        raise ValueError("receiver i must differ from the active link j")
    if not 0 <= i < snapshot.n_links:
        raise ValueError(f"receiver {i} out of range for {snapshot.n_links} links")
    mean, variance = _receiver_moments(snapshot, geom, alphabet, current, previous)
    return ConditionalGaussian(mean=float(mean[j] - mean[i]), variance=float(variance[j] + variance[i]))


def _beats_all(mean: npt.NDArray[np.float64], variance: npt.NDArray[np.float64], winner: int) -> float:
    probability = 1.0
    for i in range(mean.shape[0]):
        if i != winner:
            probability *= _tail(mean[winner] - mean[i], math.sqrt(variance[winner] + variance[i]))
    return probability


def ssk_cond_correct(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
) -> float:
    """Probability that the paired receiver of the active link senses the maximum."""
    mean, variance = _receiver_moments(snapshot, geom, alphabet, current, previous)
    return _beats_all(mean, variance, current.space_index)


def space_detection_row(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
) -> npt.NDArray[np.float64]:
    """Pr[receiver k senses the maximum] for every k, normalized to sum to one."""
    mean, variance = _receiver_moments(snapshot, geom, alphabet, current, previous)
    row = np.array([_beats_all(mean, variance, k) for k in range(snapshot.n_links)])
    total = row.sum()
    if total <= 0.0:
        row = np.zeros_like(row)
        row[current.space_index] = 1.0
        return row
    return row / total


def space_miss_prob(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
    j_hat: int,
) -> float:
    """Probability that receiver ``j_hat`` senses the maximum concentration."""
    if not 0 <= j_hat < snapshot.n_links:
        raise ValueError(f"receiver {j_hat} out of range for {snapshot.n_links} links")
    return float(space_detection_row(snapshot, geom, alphabet, current, previous)[j_hat])


def csk_pairwise(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
    target: int,
    j_hat: int,
) -> float:
    """Probability that EGC against column ``j_hat`` prefers level ``target`` over the sent level."""
    m, j = current.level_index, current.space_index
    if target == m:
        raise ValueError("target level must differ from the transmitted level")
    if not 0 <= target < alphabet.size:
        raise ValueError(f"target level {target} out of range for M={alphabet.size}")

    h = snapshot.h_now
    s_m, s_n = alphabet.levels[m], alphabet.levels[target]
    detected_column = h[:, j_hat]
    _, variance = _receiver_moments(snapshot, geom, alphabet, current, previous)

    projection = s_m * float(detected_column @ h[:, j])
    if previous is not None:
        j_bar = previous.space_index
        # Residue pairing h_{j_bar j}(t + T_s), as in the closed form.
        projection += alphabet.levels[previous.level_index] * h[j_bar, j_hat] * snapshot.h_prev[j_bar, j]

    threshold = 0.5 * (s_m + s_n) * float(detected_column @ detected_column)
    std = math.sqrt(float(np.sum(detected_column**2 * variance)))
    if s_n > s_m:
        return _tail(projection, std, threshold)
    return _tail(-projection, std, -threshold)


def csk_error_bound(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
) -> float:
    """Union bound on the level error, weighted by where the space detector lands."""
    row = space_detection_row(snapshot, geom, alphabet, current, previous)
    total = 0.0
    for target in range(alphabet.size):
        if target == current.level_index:
            continue
        for j_hat, weight in enumerate(row):
            if weight > 0.0:
                total += weight * csk_pairwise(snapshot, geom, alphabet, current, previous, target, j_hat)
    return min(1.0, total)


def _single_transmitter_symbols(n_links: int, csk_order: int) -> List[MolecularSymbol]:
    return [MolecularSymbol(space_index=j, level_index=m) for j in range(n_links) for m in range(csk_order)]


def ssk_ser(snapshot: ChannelSnapshot, geom: SystemGeometry, alphabet: CskAlphabet) -> SerEstimate:
    """SSK symbol error rate averaged over the current and previous transmitter."""
    symbols = _single_transmitter_symbols(snapshot.n_links, 1)
    correct = [
        ssk_cond_correct(snapshot, geom, alphabet, current, previous)
        for current in symbols
        for previous in symbols
    ]
    return SerEstimate(value=min(1.0, max(0.0, 1.0 - float(np.mean(correct)))), kind=AnalyticKind.EXACT)


def sm_conditional_bound(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    current: MolecularSymbol,
    previous: Optional[MolecularSymbol],
    cross_term: bool = False,
) -> float:
    """Space error plus the level union bound.

    With ``cross_term`` the product of the two is subtracted, which gives
    1 - (1 - P_space)(1 - P_level) and never exceeds the plain sum.
    """
    space_error = 1.0 - ssk_cond_correct(snapshot, geom, alphabet, current, previous)
    level_error = csk_error_bound(snapshot, geom, alphabet, current, previous)
    if cross_term:
        return min(1.0, space_error + level_error - space_error * level_error)
    return min(1.0, space_error + level_error)


def sm_ser_bound(
    snapshot: ChannelSnapshot, geom: SystemGeometry, alphabet: CskAlphabet, cross_term: bool = False
) -> SerEstimate:
    """Upper bound on the SM symbol error rate over all current/previous symbol pairs."""
    symbols = _single_transmitter_symbols(snapshot.n_links, alphabet.size)
    bounds = [
        sm_conditional_bound(snapshot, geom, alphabet, current, previous, cross_term)
        for current in symbols
        for previous in symbols
    ]
    return SerEstimate(value=min(1.0, max(0.0, float(np.mean(bounds)))), kind=AnalyticKind.UPPER_BOUND)


def siso_csk_ser(snapshot: ChannelSnapshot, geom: SystemGeometry, alphabet: CskAlphabet) -> SerEstimate:
    """Exact nearest-level error rate of a single link with one-symbol ISI."""
    levels = alphabet.as_array()
    images = levels * snapshot.h_diag
    boundaries = np.concatenate(([-np.inf], (images[:-1] + images[1:]) / 2.0, [np.inf]))

    correct = []
    for m in range(alphabet.size):
        for m_bar in range(alphabet.size):
            mean = images[m] + levels[m_bar] * snapshot.h_prev_self
            std = math.sqrt(mean / geom.receiver_volume)
            lower, upper = boundaries[m], boundaries[m + 1]
            # Region of level m is (lower, upper]; the upper edge goes to the smaller index.
            correct.append(_tail(mean, std, lower) - _tail(mean, std, upper))
    return SerEstimate(value=min(1.0, max(0.0, 1.0 - float(np.mean(correct)))), kind=AnalyticKind.EXACT)


def mimo_ook_ser(
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    policy: Union[ThresholdPolicy, str] = ThresholdPolicy.MIDPOINT,
) -> SerEstimate:
    """Exact any-bit-wrong error rate of per-link threshold detection.

    Enumerates every current and previous bit vector, so it is limited to
    ``MAX_OOK_LINKS`` links.
    """
    n = snapshot.n_links
    if n > MAX_OOK_LINKS:
        raise ValueError(f"exact MIMO-OOK analysis supports at most {MAX_OOK_LINKS} links")
    thresholds = ook_thresholds(snapshot, alphabet, policy)
    s_on = alphabet.levels[1]

    vectors = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    correct = []
    for current in vectors:
        ili_and_signal = s_on * (snapshot.h_now @ current)
        for previous in vectors:
            mean = ili_and_signal + s_on * snapshot.h_prev_self * previous
            std = np.sqrt(mean / geom.receiver_volume)
            per_link = [
                _tail(mean[i], std[i], thresholds[i]) if current[i] else 1.0 - _tail(mean[i], std[i], thresholds[i])
                for i in range(n)
            ]
            correct.append(float(np.prod(per_link)))
    return SerEstimate(value=min(1.0, max(0.0, 1.0 - float(np.mean(correct)))), kind=AnalyticKind.EXACT)


def analytic_ser(
    scheme: Scheme,
    detector: Union[Detector, str],
    snapshot: ChannelSnapshot,
    geom: SystemGeometry,
    alphabet: CskAlphabet,
    threshold_policy: Union[ThresholdPolicy, str] = ThresholdPolicy.MIDPOINT,
    tight_bound: bool = False,
) -> Optional[SerEstimate]:
    """Closed-form overlay for the scheme/detector pair, or None where no closed form applies.

    ``tight_bound`` keeps the space/level cross term in the SM bound.
    """
    detector = Detector(detector)
    if scheme.kind is SchemeKind.SSK:
        return None if detector is Detector.ML else ssk_ser(snapshot, geom, alphabet)
    if scheme.kind is SchemeKind.SM:
        return sm_ser_bound(snapshot, geom, alphabet, tight_bound) if detector is Detector.EGC else None
    if scheme.kind is SchemeKind.SISO_CSK:
        return siso_csk_ser(snapshot, geom, alphabet)
    if scheme.n_links > MAX_OOK_LINKS:
        logger.warning(f"No closed-form MIMO-OOK overlay above {MAX_OOK_LINKS} links")
        return None
    return mimo_ook_ser(snapshot, geom, alphabet, threshold_policy)
