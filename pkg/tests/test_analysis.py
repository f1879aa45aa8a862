"""Tests for analysis module."""

import math

import mpmath
import numpy as np
import pytest

from src.analysis import (
    AnalyticKind,
    analytic_ser,
    cond_gaussian,
    csk_error_bound,
    csk_pairwise,
    mimo_ook_ser,
    q_function,
    siso_csk_ser,
    sm_conditional_bound,
    sm_ser_bound,
    space_detection_row,
    space_miss_prob,
    ssk_cond_correct,
    ssk_ser,
)
from src.channel import SystemGeometry, snapshot
from src.detection import Detector, detect_csk_egc, detect_space
from src.link_model import sample_sequence
from src.modulation import MolecularSymbol, Scheme, SchemeKind, SymbolBatch, calibrate_alphabet

UM = 1e-6


def make_setup(kind, n, m, separation, symbol_duration, snr_db):
    geom = SystemGeometry(
        n_links=n,
        link_distance=20 * UM,
        separation=separation * UM,
        receiver_radius=0.1 * UM,
        diffusion_coeff=2.2e-9,
    )
    scheme = Scheme(kind=kind, n_links=n, csk_order=m)
    return scheme, geom, snapshot(geom, symbol_duration), calibrate_alphabet(scheme, geom, snr_db)


def repeated(symbol, count):
    """A sequence of one symbol, so every symbol after the first sees that symbol as previous."""
    return SymbolBatch(
        space=np.full(count, symbol.space_index, dtype=np.int64),
        level=np.full(count, symbol.level_index, dtype=np.int64),
    )


class TestQFunction:
    """Test suite for the Gaussian tail."""

    def test_reference_values(self):
        """Test a few well-known values."""
        assert q_function(0.0) == 0.5
        assert q_function(1.0) == pytest.approx(0.15865525393145707, rel=1e-14)
        assert q_function(-1.0) == pytest.approx(1 - 0.15865525393145707, rel=1e-14)

    def test_matches_high_precision_erfc(self):
        """Test relative error below 1e-12 against 50-digit arithmetic on a log grid."""
        mpmath.mp.dps = 50
        grid = np.logspace(-3.0, np.log10(37.0), 1000)
        for x in np.concatenate([-grid[::50], grid]):
            exact = 0.5 * mpmath.erfc(mpmath.mpf(float(x)) / mpmath.sqrt(2))
            assert q_function(float(x)) == pytest.approx(float(exact), rel=1e-12)

    @pytest.mark.parametrize("x", [0.25, 1.5, 3.0, 6.0])
    def test_matches_numerical_integration(self, x):
        """Test agreement with direct integration of the normal density."""
        mpmath.mp.dps = 30
        density = lambda t: mpmath.exp(-t * t / 2) / mpmath.sqrt(2 * mpmath.pi)  # noqa: E731
        exact = mpmath.quad(density, [x, mpmath.inf])
        assert q_function(x) == pytest.approx(float(exact), rel=1e-12)

    def test_vectorized(self):
        """Test arrays are evaluated elementwise."""
        values = q_function(np.array([0.0, 0.0]))
        assert values.tolist() == [0.5, 0.5]


class TestConditionalGaussian:
    """Test suite for cond_gaussian."""

    def test_moments_match_samples(self):
        """Test mean and variance of y_j - y_i against 1e6 sampled symbols."""
        scheme, geom, snap, alphabet = make_setup(SchemeKind.SM, 2, 2, 12.5, 0.3, 8.0)
        symbol = MolecularSymbol(space_index=1, level_index=1)
        rng = np.random.default_rng(31)
        y = sample_sequence(scheme, snap, geom, alphabet, repeated(symbol, 1_000_001), rng)[1:]
        diff = y[:, 1] - y[:, 0]

        model = cond_gaussian(snap, geom, alphabet, symbol, symbol, 0)
        count = diff.shape[0]
        assert abs(diff.mean() - model.mean) <= 4 * model.std / math.sqrt(count)
        assert abs(diff.var() - model.variance) <= 4 * model.variance * math.sqrt(2.0 / count)

    def test_first_symbol_has_no_residue(self):
        """Test previous=None drops the ISI term."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SSK, 2, 1, 15.0, 0.2, 10.0)
        current = MolecularSymbol(space_index=0)
        with_isi = cond_gaussian(snap, geom, alphabet, current, current, 1)
        without = cond_gaussian(snap, geom, alphabet, current, None, 1)
        assert with_isi.mean - without.mean == pytest.approx(alphabet.levels[0] * snap.h_prev_self)

    def test_rejects_same_receiver(self):
        """Test i must differ from the active link."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SSK, 2, 1, 15.0, 0.2, 10.0)
        with pytest.raises(ValueError):
            cond_gaussian(snap, geom, alphabet, MolecularSymbol(space_index=1), None, 1)


class TestSpaceDetectionRow:
    """Test suite for space detection probabilities."""

    def _argmax_frequencies(self, scheme, geom, snap, alphabet, symbol, count, seed):
        y = sample_sequence(scheme, snap, geom, alphabet, repeated(symbol, count + 1), np.random.default_rng(seed))[1:]
        return np.bincount(detect_space(y), minlength=scheme.n_links) / count

    def test_two_links_match_simulation(self):
        """Test N = 2 probabilities against argmax frequencies within 3 sigma."""
        scheme, geom, snap, alphabet = make_setup(SchemeKind.SSK, 2, 1, 10.0, 0.2, 4.0)
        symbol = MolecularSymbol(space_index=0)
        row = space_detection_row(snap, geom, alphabet, symbol, symbol)
        count = 1_000_000
        observed = self._argmax_frequencies(scheme, geom, snap, alphabet, symbol, count, 41)
        sigma = np.sqrt(row * (1 - row) / count)
        assert row.sum() == pytest.approx(1.0)
        assert np.all(np.abs(observed - row) <= 3 * sigma + 1e-12)

    def test_four_links_match_simulation(self):
        """Test N = 4 probabilities against argmax frequencies within 3 sigma."""
        scheme, geom, snap, alphabet = make_setup(SchemeKind.SSK, 4, 1, 30.0, 0.1, 16.0)
        symbol = MolecularSymbol(space_index=1)
        row = space_detection_row(snap, geom, alphabet, symbol, symbol)
        count = 1_000_000
        observed = self._argmax_frequencies(scheme, geom, snap, alphabet, symbol, count, 43)
        sigma = np.sqrt(row * (1 - row) / count)
        assert np.all(np.abs(observed - row) <= 3 * sigma + 1e-6)

    def test_two_link_correct_matches_row(self):
        """Test the SSK correct-decision probability is the paired entry of an N = 2 row."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SSK, 2, 1, 12.5, 0.2, 6.0)
        current = MolecularSymbol(space_index=1)
        previous = MolecularSymbol(space_index=0)
        row = space_detection_row(snap, geom, alphabet, current, previous)
        correct = ssk_cond_correct(snap, geom, alphabet, current, previous)
        assert 0.5 < correct < 1.0
        assert correct == pytest.approx(row[1], rel=1e-12)

    def test_miss_prob_reads_row(self):
        """Test space_miss_prob returns one entry of the row."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SSK, 4, 1, 12.5, 0.2, 6.0)
        current = MolecularSymbol(space_index=2)
        previous = MolecularSymbol(space_index=3)
        row = space_detection_row(snap, geom, alphabet, current, previous)
        assert space_miss_prob(snap, geom, alphabet, current, previous, 3) == row[3]
        with pytest.raises(ValueError):
            space_miss_prob(snap, geom, alphabet, current, previous, 4)


class TestCskPairwise:
    """Test suite for EGC pairwise level errors."""

    def test_matches_simulation(self):
        """Test the pairwise probability against EGC decisions on the paired column."""
        scheme, geom, snap, alphabet = make_setup(SchemeKind.SM, 2, 2, 15.0, 1.0, 6.0)
        symbol = MolecularSymbol(space_index=0, level_index=0)
        count = 1_000_000
        y = sample_sequence(scheme, snap, geom, alphabet, repeated(symbol, count + 1), np.random.default_rng(51))[1:]
        levels = detect_csk_egc(y, np.zeros(count, dtype=np.int64), snap, alphabet)
        observed = float(np.mean(levels == 1))
        p = csk_pairwise(snap, geom, alphabet, symbol, symbol, target=1, j_hat=0)
        assert abs(observed - p) <= 3 * math.sqrt(p * (1 - p) / count) + 1e-12

    def test_error_bound_weights_pairwise(self):
        """Test the level bound is the row-weighted sum of pairwise errors for BCSK."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SM, 2, 2, 10.0, 0.3, 8.0)
        current = MolecularSymbol(space_index=0, level_index=1)
        previous = MolecularSymbol(space_index=1, level_index=0)
        row = space_detection_row(snap, geom, alphabet, current, previous)
        expected = sum(
            row[j_hat] * csk_pairwise(snap, geom, alphabet, current, previous, target=0, j_hat=j_hat)
            for j_hat in range(2)
        )
        assert csk_error_bound(snap, geom, alphabet, current, previous) == pytest.approx(min(1.0, expected))

    def test_rejects_sent_level(self):
        """Test the target level must differ from the sent level."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SM, 2, 2, 15.0, 1.0, 6.0)
        with pytest.raises(ValueError):
            csk_pairwise(snap, geom, alphabet, MolecularSymbol(level_index=1), None, target=1, j_hat=0)


class TestSerExpressions:
    """Test suite for the averaged SER expressions."""

    def test_ssk_decreases_with_snr(self):
        """Test SSK SER falls as SNR grows."""
        values = []
        for snr in (0.0, 10.0, 20.0):
            _, geom, snap, alphabet = make_setup(SchemeKind.SSK, 4, 1, 15.0, 1.0, snr)
            values.append(ssk_ser(snap, geom, alphabet).value)
        assert values[0] > values[1] > values[2]

    def test_ssk_reflection_symmetry(self):
        """Test mirroring every link index i -> N-1-i leaves the conditional and average SER unchanged."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SSK, 4, 1, 12.5, 0.2, 8.0)
        for j in range(4):
            for j_bar in range(4):
                current, previous = MolecularSymbol(space_index=j), MolecularSymbol(space_index=j_bar)
                mirrored = MolecularSymbol(space_index=3 - j), MolecularSymbol(space_index=3 - j_bar)
                assert ssk_cond_correct(snap, geom, alphabet, current, previous) == pytest.approx(
                    ssk_cond_correct(snap, geom, alphabet, *mirrored), rel=1e-12
                )
        flipped = snap.h_now[::-1, ::-1]
        assert np.allclose(flipped, snap.h_now, rtol=1e-14, atol=0.0)

    def test_sm_bound_tightens(self):
        """Test the SM bound decreases with SNR and stays a probability."""
        bounds = []
        for snr in (-20.0, 10.0, 20.0):
            _, geom, snap, alphabet = make_setup(SchemeKind.SM, 2, 2, 15.0, 1.0, snr)
            estimate = sm_ser_bound(snap, geom, alphabet)
            assert estimate.kind is AnalyticKind.UPPER_BOUND
            assert 0.0 <= estimate.value <= 1.0
            bounds.append(estimate.value)
        assert bounds[1] > bounds[2]

    def test_sm_bound_cross_term(self):
        """Test keeping the cross term gives 1 - (1 - P_space)(1 - P_level) and a lower average bound."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SM, 2, 2, 10.0, 0.3, 4.0)
        current = MolecularSymbol(space_index=1, level_index=0)
        previous = MolecularSymbol(space_index=0, level_index=1)
        space_error = 1.0 - ssk_cond_correct(snap, geom, alphabet, current, previous)
        level_error = csk_error_bound(snap, geom, alphabet, current, previous)
        tight = sm_conditional_bound(snap, geom, alphabet, current, previous, cross_term=True)
        assert tight == pytest.approx(1.0 - (1.0 - space_error) * (1.0 - level_error))
        assert sm_ser_bound(snap, geom, alphabet, cross_term=True).value < sm_ser_bound(snap, geom, alphabet).value

    def test_siso_exact_is_probability(self):
        """Test the exact SISO-QCSK SER lies strictly between 0 and 1."""
        _, geom, snap, alphabet = make_setup(SchemeKind.SISO_CSK, 1, 4, 15.0, 1.0, 10.0)
        estimate = siso_csk_ser(snap, geom, alphabet)
        assert estimate.kind is AnalyticKind.EXACT
        assert 0.0 < estimate.value < 1.0

    def test_mimo_ook_link_limit(self):
        """Test exact MIMO-OOK enumeration refuses more than 8 links."""
        _, geom, snap, alphabet = make_setup(SchemeKind.MIMO_OOK, 16, 2, 15.0, 1.0, 10.0)
        with pytest.raises(ValueError):
            mimo_ook_ser(snap, geom, alphabet)


class TestAnalyticDispatch:
    """Test suite for analytic_ser."""

    @pytest.mark.parametrize(
        "kind,n,m,detector,expected",
        [
            (SchemeKind.SSK, 2, 1, Detector.EGC, AnalyticKind.EXACT),
            (SchemeKind.SSK, 4, 1, Detector.SC, AnalyticKind.EXACT),
            (SchemeKind.SSK, 4, 1, Detector.ML, None),
            (SchemeKind.SM, 2, 2, Detector.EGC, AnalyticKind.UPPER_BOUND),
            (SchemeKind.SM, 2, 2, Detector.SC, None),
            (SchemeKind.SM, 2, 2, Detector.ML, None),
            (SchemeKind.SISO_CSK, 1, 4, Detector.EGC, AnalyticKind.EXACT),
            (SchemeKind.MIMO_OOK, 2, 2, Detector.EGC, AnalyticKind.EXACT),
            (SchemeKind.MIMO_OOK, 16, 2, Detector.EGC, None),
        ],
    )
    def test_kinds(self, kind, n, m, detector, expected):
        """Test which overlay each scheme/detector pair receives."""
        scheme, geom, snap, alphabet = make_setup(kind, n, m, 15.0, 1.0, 10.0)
        estimate = analytic_ser(scheme, detector, snap, geom, alphabet)
        if expected is None:
            assert estimate is None
        else:
            assert estimate.kind is expected
            assert 0.0 <= estimate.value <= 1.0
