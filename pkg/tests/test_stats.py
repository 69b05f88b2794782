import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from core import rng, stats
from core.errors import ConfigError, StatisticsError
from core.lattice import DisorderSpec
from core.sweep import cell_stream_key, simulate_ensemble


def _records(intensity_rows, excited_site=0):
    return [stats.EnsembleRecord.from_output(i, (), row, excited_site) for i, row in enumerate(intensity_rows)]


def _ring_ensemble(n, size, seed=3):
    out = simulate_ensemble(DisorderSpec(0.5, 0.8), n, 17.25, range(size), seed, cell_stream_key(n, 0.8))
    return out


def test_g2_examples():
    assert stats.g2([1.0, 1.0, 1.0]) == pytest.approx(1.0)
    assert stats.g2([0.0, 2.0]) == pytest.approx(2.0)
    assert stats.g2([1.0, 3.0]) == pytest.approx(1.25)
    with pytest.raises(StatisticsError):
        stats.g2([1.0])
    with pytest.raises(StatisticsError):
        stats.g2([0.0, 0.0])


def test_exponential_intensities_give_two():
    samples = rng.stream(5, rng.SYNTHETIC_TAG).exponential(1.0, size=4_000_000)
    assert stats.g2(samples) == pytest.approx(2.0, abs=0.01)


def test_bootstrap_identical_records():
    records = _records([[0.25, 0.25, 0.25, 0.25]] * 50)
    report = stats.bootstrap_g2(records, None, 200, rng.stream(1, rng.BOOTSTRAP_TAG))
    assert report.g2_mean == pytest.approx(1.0)
    assert report.g2_std == pytest.approx(0.0, abs=1e-15)
    assert report.resample_size == 50


def test_bootstrap_deterministic():
    samples = rng.stream(2, rng.SYNTHETIC_TAG).exponential(size=500)
    a = stats.bootstrap_samples(samples, 120, 300, rng.stream(8, rng.BOOTSTRAP_TAG))
    b = stats.bootstrap_samples(samples, 120, 300, rng.stream(8, rng.BOOTSTRAP_TAG))
    assert a == b


def test_bootstrap_std_scales_with_size():
    samples = rng.stream(4, rng.SYNTHETIC_TAG).exponential(size=100_000)
    small = stats.bootstrap_samples(samples, 120, 1000, rng.stream(4, rng.BOOTSTRAP_TAG, 0))
    large = stats.bootstrap_samples(samples, 240, 1000, rng.stream(4, rng.BOOTSTRAP_TAG, 1))
    assert 1.2 <= small.g2_std / large.g2_std <= 1.7


def test_bootstrap_std_for_ring_ensemble():
    out = _ring_ensemble(4, 120)
    records = [
        stats.EnsembleRecord.from_output(i, out.couplings[i], np.abs(out.amplitudes[i]) ** 2, 0)
        for i in range(120)
    ]
    report = stats.bootstrap_g2(records, None, 1000, rng.stream(3, rng.BOOTSTRAP_TAG))
    # full-size resampling with replacement of 120 four-site records spreads g2 by about 0.1
    assert 0.06 <= report.g2_std <= 0.2
    assert report.g2_mean > 1.0
    assert report.g2_mean >= 1.0 - 3 * report.g2_std


def test_bootstrap_mean_stays_above_one():
    samples = rng.stream(9, rng.SYNTHETIC_TAG).exponential(size=120)
    report = stats.bootstrap_samples(samples, 120, 500, rng.stream(9, rng.BOOTSTRAP_TAG))
    assert report.g2_mean >= 1.0 - 3 * report.g2_std
    assert report.g2_mean >= 1.0  # <I^2> >= <I>^2 for every resample


def test_g2_ignores_scale():
    samples = rng.stream(11, rng.SYNTHETIC_TAG).exponential(size=1000)
    assert stats.g2(samples * 7.5) == pytest.approx(stats.g2(samples), rel=1e-12)
    assert stats.g2(samples * 1e-6) == pytest.approx(stats.g2(samples), rel=1e-12)


def test_localization_level_ignores_site_order():
    stream = rng.stream(12, rng.SYNTHETIC_TAG)
    mean = stream.random(7)
    mean /= mean.sum()
    expected = stats.localization_level(mean)
    for _ in range(5):
        shuffled = stream.permutation(mean)
        assert stats.localization_level(shuffled) == pytest.approx(expected, abs=1e-15)


def test_bootstrap_rejects_bad_parameters():
    with pytest.raises(ConfigError):
        stats.bootstrap_samples(np.ones(10), 1, 100, rng.stream(0))
    with pytest.raises(StatisticsError):
        stats.bootstrap_samples(np.array([]), 10, 100, rng.stream(0))


def test_localization_level():
    assert stats.localization_level([0.25] * 4) == pytest.approx(0.0)
    assert stats.localization_level([1.0, 0.0, 0.0, 0.0]) == pytest.approx(0.75)
    assert stats.localization_level([0.5, 0.5, 0.0, 0.0]) == pytest.approx(0.5)
    with pytest.raises(StatisticsError):
        stats.localization_level([0.5, 0.6])


def test_records_are_normalized():
    record = stats.EnsembleRecord.from_output(0, (0.5, 0.5, 0.5), [2.0, 1.0, 1.0], 0)
    assert record.normalized_intensities == (0.5, 0.25, 0.25)
    assert record.excited_intensity == 0.5
    with pytest.raises(StatisticsError):
        stats.EnsembleRecord(0, (), (0.5, 0.6, 0.1), 0, 3)
    with pytest.raises(ConfigError):
        stats.EnsembleRecord(0, (0.5, 0.5), (0.5, 0.25, 0.25), 0, 3)
    with pytest.raises(StatisticsError):
        stats.normalize([0.0, 0.0])


def test_per_site_views_follow_excited_site():
    records = _records([[0.1, 0.6, 0.3], [0.3, 0.4, 0.3]], excited_site=1)
    profile = stats.mean_intensity_profile(records)
    assert profile.excited_share == pytest.approx(0.5)
    assert profile.by_distance.sum() == pytest.approx(1.0)
    assert profile.by_distance[0] == pytest.approx(0.5)
    per_site = stats.g2_per_site(records)
    assert per_site[0] == pytest.approx(stats.g2([0.6, 0.4]))


def test_classifier_on_synthetic_laws():
    stream = rng.stream(6, rng.SYNTHETIC_TAG)
    rayleigh = np.abs(stream.normal(size=5000) + 1j * stream.normal(size=5000))
    halfnorm = np.abs(stream.normal(size=5000))
    assert stats.classify_amplitude_distribution(rayleigh).label == stats.RAYLEIGH_LIKE
    assert stats.classify_amplitude_distribution(halfnorm).label == stats.GAUSSIAN_LIKE
    with pytest.raises(StatisticsError):
        stats.classify_amplitude_distribution(rayleigh[:10])


def test_classifier_self_consistency():
    stream = rng.stream(10, rng.SYNTHETIC_TAG)
    correct = 0
    for _ in range(100):
        rayleigh = np.abs(stream.normal(size=200) + 1j * stream.normal(size=200))
        halfnorm = np.abs(stream.normal(size=200))
        correct += stats.classify_amplitude_distribution(rayleigh).label == stats.RAYLEIGH_LIKE
        correct += stats.classify_amplitude_distribution(halfnorm).label == stats.GAUSSIAN_LIKE
    assert correct >= 198


def test_classifier_follows_ring_parity():
    odd = _ring_ensemble(5, 2000)
    even = _ring_ensemble(6, 2000)
    assert stats.classify_amplitude_distribution(np.abs(odd.amplitudes[:, 0])).label == stats.RAYLEIGH_LIKE
    assert stats.classify_amplitude_distribution(np.abs(even.amplitudes[:, 0])).label == stats.GAUSSIAN_LIKE
    # even rings keep the excited-site field real
    assert np.max(np.abs(even.amplitudes[:, 0].imag)) < 1e-9


def test_constant_sites_are_degenerate():
    amplitudes = np.full((60, 4), 0.5)
    amplitudes[:, 3] = rng.stream(13, rng.SYNTHETIC_TAG).rayleigh(size=60)
    results = stats.classify_sites(amplitudes)
    assert [r.label for r in results[:3]] == [stats.DEGENERATE] * 3
    assert results[3].label in (stats.RAYLEIGH_LIKE, stats.GAUSSIAN_LIKE)
    assert results[0].samples == 60
    with pytest.raises(StatisticsError):
        stats.classify_amplitude_distribution(amplitudes[:, 0])


def test_histogram():
    hist = stats.histogram([0.0, 0.1, 0.5, 1.0], 4, (0.0, 1.0))
    assert hist.counts.tolist() == [2, 0, 1, 1]
    assert len(hist.edges) == 5
    assert np.sum(hist.density * np.diff(hist.edges)) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        stats.histogram([0.1], 0)


if __name__ == "__main__":
    test_g2_examples()
    test_exponential_intensities_give_two()
    test_bootstrap_identical_records()
    test_bootstrap_deterministic()
    test_bootstrap_std_scales_with_size()
    test_bootstrap_std_for_ring_ensemble()
    test_bootstrap_mean_stays_above_one()
    test_g2_ignores_scale()
    test_localization_level_ignores_site_order()
    test_bootstrap_rejects_bad_parameters()
    test_localization_level()
    test_records_are_normalized()
    test_per_site_views_follow_excited_site()
    test_classifier_on_synthetic_laws()
    test_classifier_self_consistency()
    test_classifier_follows_ring_parity()
    test_constant_sites_are_degenerate()
    test_histogram()
    print("ok")
