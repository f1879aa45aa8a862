"""Tests for engine module."""

import numpy as np
import pytest
from pydantic import ValidationError

import src.engine
from src.analysis import AnalyticKind
from src.channel import SystemGeometry
from src.detection import Detector
from src.engine import RunConfig, analytic_sweep, run_point, run_sweep, substream
from src.modulation import Scheme, SchemeKind

UM = 1e-6


def make_config(kind=SchemeKind.SSK, n=2, m=1, separation=12.5, symbol_duration=0.8, **kwargs):
    geometry = SystemGeometry(
        n_links=n,
        link_distance=20 * UM,
        separation=separation * UM,
        receiver_radius=0.1 * UM,
        diffusion_coeff=2.2e-9,
    )
    values = dict(snr_grid=(10.0,), symbols=20_000, replications=2, seed=1234)
    values.update(kwargs)
    return RunConfig(
        scheme=Scheme(kind=kind, n_links=n, csk_order=m),
        geometry=geometry,
        symbol_duration=symbol_duration,
        **values,
    )


class TestRunConfig:
    """Test suite for RunConfig validation."""

    def test_rejects_short_sequences(self):
        """Test fewer than 1000 symbols per replication is rejected."""
        with pytest.raises(ValidationError):
            make_config(symbols=999)

    def test_rejects_empty_grid(self):
        """Test the SNR grid must not be empty."""
        with pytest.raises(ValidationError):
            make_config(snr_grid=())

    def test_rejects_zero_replications(self):
        """Test at least one replication is required."""
        with pytest.raises(ValidationError):
            make_config(replications=0)

    def test_rejects_link_mismatch(self):
        """Test scheme and geometry must agree on N."""
        config = make_config()
        with pytest.raises(ValidationError, match="n_links"):
            RunConfig(
                scheme=Scheme(kind=SchemeKind.SSK, n_links=4, csk_order=1),
                geometry=config.geometry,
                symbol_duration=1.0,
                snr_grid=(0.0,),
            )

    def test_rejects_duplicate_points(self):
        """Test repeated SNR points are rejected."""
        with pytest.raises(ValidationError):
            make_config(snr_grid=(2.0, 2.0))

    def test_label_names_detector(self):
        """Test non-default detectors show up in the curve label."""
        assert make_config(SchemeKind.SM, 2, 2, detector=Detector.SC).label == "2x2 SM-BCSK (SC)"
        assert make_config(SchemeKind.SM, 2, 2).label == "2x2 SM-BCSK"


class TestSubstreams:
    """Test suite for random substreams."""

    def test_reproducible(self):
        """Test the same key gives the same stream."""
        a = substream(7, 4.0, 3).standard_normal(5)
        b = substream(7, 4.0, 3).standard_normal(5)
        assert np.array_equal(a, b)

    def test_distinct_keys(self):
        """Test different seeds, points and replications give different streams."""
        base = substream(7, 4.0, 3).standard_normal(5)
        for other in (substream(8, 4.0, 3), substream(7, -4.0, 3), substream(7, 4.0, 4)):
            assert not np.array_equal(base, other.standard_normal(5))


class TestRunPoint:
    """Test suite for run_point."""

    def test_noise_and_interference_off(self):
        """Test a noiseless, interference-free link never errs."""
        for kind, n, m in [(SchemeKind.SM, 4, 4), (SchemeKind.MIMO_OOK, 2, 2), (SchemeKind.SISO_CSK, 1, 4)]:
            config = make_config(kind, n, m, noise=False, interference=False, snr_grid=(0.0,))
            point = run_point(config, 0.0)
            assert point.ser_sim == 0.0
            assert point.errors == 0
            assert point.ci95 == 0.0
            assert point.ser_analytic is None

    def test_deterministic(self):
        """Test the same seed gives an identical point."""
        config = make_config()
        assert run_point(config, 10.0) == run_point(config, 10.0)

    def test_seed_changes_result(self):
        """Test a different seed draws different symbols."""
        config = make_config(snr_grid=(0.0, 2.0, 4.0))
        other = config.model_copy(update={"seed": 99})
        assert run_sweep(config).points != run_sweep(other).points

    def test_pooled_counts(self):
        """Test SER is total errors over total symbols and ci95 follows the binomial formula."""
        point = run_point(make_config(snr_grid=(0.0,)), 0.0)
        total = 20_000 * 2
        assert point.total_symbols == total
        assert point.ser_sim == point.errors / total
        expected = 1.96 * np.sqrt(point.ser_sim * (1 - point.ser_sim) / total)
        assert point.ci95 == pytest.approx(expected, rel=1e-12)

    def test_bssk_matches_analysis(self):
        """Test BSSK simulation agrees with the exact SER within 3 standard errors."""
        config = make_config(symbols=100_000, replications=5)
        point = run_point(config, 10.0)
        assert point.analytic_kind is AnalyticKind.EXACT
        sigma = np.sqrt(point.ser_analytic * (1 - point.ser_analytic) / point.total_symbols)
        assert abs(point.ser_sim - point.ser_analytic) <= 3 * sigma

    @pytest.mark.parametrize(
        "kind,n,m,separation,symbol_duration,snr",
        [
            (SchemeKind.SISO_CSK, 1, 4, 15.0, 0.2, 14.0),
            (SchemeKind.MIMO_OOK, 2, 2, 15.0, 0.2, 12.0),
        ],
    )
    def test_exact_baselines_match_analysis(self, kind, n, m, separation, symbol_duration, snr):
        """Test exact SISO-CSK and MIMO-OOK overlays agree with simulation within 3 standard errors."""
        config = make_config(kind, n, m, separation, symbol_duration, symbols=100_000, replications=2, snr_grid=(snr,))
        point = run_point(config, snr)
        assert point.analytic_kind is AnalyticKind.EXACT
        sigma = np.sqrt(point.ser_analytic * (1 - point.ser_analytic) / point.total_symbols)
        assert abs(point.ser_sim - point.ser_analytic) <= 3 * sigma + 1e-12

    def test_ci_coverage(self, monkeypatch):
        """Test the 95% interval covers a known error rate in at least 93% of runs."""
        true_rate = 0.2
        rng = np.random.default_rng(2024)

        def fake_errors(scheme, sent, decided):
            return rng.random(len(sent)) < true_rate

        monkeypatch.setattr(src.engine, "symbol_errors", fake_errors)
        config = make_config(symbols=1000, replications=4, snr_grid=(0.0,), noise=False)
        covered = 0
        runs = 1000
        for _ in range(runs):
            point = run_point(config, 0.0)
            covered += abs(point.ser_sim - true_rate) <= point.ci95
        assert covered / runs >= 0.93


class TestRunSweep:
    """Test suite for run_sweep."""

    def test_single_point_matches_run_point(self):
        """Test a one-point sweep equals run_point."""
        config = make_config(snr_grid=(6.0,))
        assert run_sweep(config).points == [run_point(config, 6.0)]

    def test_points_independent_of_grid(self):
        """Test a point's result does not depend on the rest of the grid."""
        config = make_config(snr_grid=(0.0, 6.0))
        sweep = run_sweep(config)
        assert sweep.points[1] == run_point(config, 6.0)

    def test_worker_count_does_not_change_results(self):
        """Test serial and parallel runs are bit-identical."""
        config = make_config(snr_grid=(0.0, 4.0), symbols=5000, replications=3)
        parallel = config.model_copy(update={"workers": 2})
        assert run_sweep(config).points == run_sweep(parallel).points

    def test_ser_decreases_with_snr(self):
        """Test simulated SER does not increase along the grid beyond noise."""
        config = make_config(SchemeKind.SSK, 4, 1, 12.5, 0.5, snr_grid=(0.0, 4.0, 8.0, 12.0))
        points = run_sweep(config).points
        for lower, higher in zip(points, points[1:]):
            assert higher.ser_sim <= lower.ser_sim + 3 * (lower.std_error + higher.std_error)

    def test_curve_label(self):
        """Test the curve carries its configuration."""
        config = make_config()
        curve = run_sweep(config)
        assert curve.label == "BSSK"
        assert curve.config == config


class TestAnalyticSweep:
    """Test suite for analytic_sweep."""

    def test_no_simulation(self):
        """Test analysis-only points carry no simulated values."""
        config = make_config(SchemeKind.SM, 2, 2, snr_grid=(0.0, 10.0, 20.0))
        curve = analytic_sweep(config)
        assert [p.snr_db for p in curve.points] == [0.0, 10.0, 20.0]
        assert all(p.ser_sim is None and p.errors == 0 for p in curve.points)
        assert all(p.analytic_kind is AnalyticKind.UPPER_BOUND for p in curve.points)

    def test_missing_closed_form(self):
        """Test detectors without a closed form give empty overlays."""
        config = make_config(SchemeKind.SM, 2, 2, detector=Detector.ML)
        assert analytic_sweep(config).points[0].ser_analytic is None

    def test_switched_off_channel_has_no_overlay(self):
        """Test the closed form is withheld when interference is disabled."""
        config = make_config(interference=False)
        assert analytic_sweep(config).points[0].ser_analytic is None

    def test_tight_bound_option(self):
        """Test the cross-term bound is reported as a bound and never exceeds the plain one."""
        plain = analytic_sweep(make_config(SchemeKind.SM, 2, 2, snr_grid=(0.0, 10.0)))
        tight = analytic_sweep(make_config(SchemeKind.SM, 2, 2, snr_grid=(0.0, 10.0), tight_bound=True))
        for a, b in zip(plain.points, tight.points):
            assert b.analytic_kind is AnalyticKind.UPPER_BOUND
            assert b.ser_analytic <= a.ser_analytic
        assert tight.points[0].ser_analytic < plain.points[0].ser_analytic
