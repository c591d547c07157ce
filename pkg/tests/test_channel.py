import numpy as np
import pytest
from scipy import stats

from simulation.channel import HopChannel, NoiseModel, complex_gaussian, sample_hop, subcarrier_snr, transmit
from simulation.errors import ParameterError


def test_sample_hop_mean_power_includes_path_loss(rng):
    hop = sample_hop(rng, 200_000, 5.0, 2.0)
    assert hop.path_loss == pytest.approx(0.04)
    assert np.mean(hop.power_gains) == pytest.approx(0.04, rel=0.02)


def test_sample_hop_unit_distance(rng):
    hop = sample_hop(rng, 200_000, 1.0, 2.0)
    assert np.mean(hop.power_gains) == pytest.approx(1.0, rel=0.02)


@pytest.mark.parametrize("distance", [0.0, -3.0])
def test_sample_hop_rejects_non_positive_distance(rng, distance):
    with pytest.raises(ParameterError):
        sample_hop(rng, 4, distance, 2.0)


def test_rayleigh_envelope_passes_ks_test():
    hop = sample_hop(np.random.default_rng(5), 100_000, 1.0, 2.0)
    result = stats.kstest(np.abs(hop.gains), "rayleigh", args=(0, 1 / np.sqrt(2)))
    assert result.pvalue > 0.01


def test_subcarriers_are_uncorrelated():
    power = sample_hop(np.random.default_rng(6), 200_000, 1.0, 2.0).power_gains
    rho = np.corrcoef(power[0::2], power[1::2])[0, 1]
    assert abs(rho) < 0.01


def test_successive_hops_are_uncorrelated():
    rng = np.random.default_rng(8)
    first = sample_hop(rng, 100_000, 1.0, 2.0).power_gains
    second = sample_hop(rng, 100_000, 1.0, 2.0).power_gains
    assert abs(np.corrcoef(first, second)[0, 1]) < 0.01


def test_same_seed_gives_identical_channels():
    a = sample_hop(np.random.default_rng(42), 16, 3.0, 2.0)
    b = sample_hop(np.random.default_rng(42), 16, 3.0, 2.0)
    np.testing.assert_array_equal(a.gains, b.gains)


def test_transmit_vanishing_noise(rng):
    hop = sample_hop(rng, 4, 2.0, 2.0)
    x = np.array([1, -1, 0, 0], dtype=complex)
    y = transmit(x, hop, NoiseModel(1e-30), rng)
    np.testing.assert_allclose(y, hop.gains * x, atol=1e-12)


def test_transmit_noise_only_power(rng):
    hop = HopChannel(np.ones(200_000, dtype=complex), 1.0, 2.0)
    y = transmit(np.zeros(200_000), hop, NoiseModel(2.0), rng)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(2.0, rel=0.02)


def test_transmit_active_subcarrier_snr_matches_analytic(rng):
    n, power, distance = 200_000, 5.0, 5.0
    hop = sample_hop(rng, n, distance, 2.0)
    x = np.full(n, np.sqrt(power), dtype=complex)
    y = transmit(x, hop, NoiseModel(1.0), rng)

    signal = np.mean(np.abs(hop.gains * x) ** 2)
    noise = np.mean(np.abs(y - hop.gains * x) ** 2)
    assert signal / noise == pytest.approx(power * distance ** -2.0, rel=0.02)
    assert np.mean(subcarrier_snr(hop, power, NoiseModel(1.0))) == pytest.approx(signal / noise, rel=0.02)


def test_transmit_rejects_length_mismatch(rng):
    hop = HopChannel(np.ones(4, dtype=complex), 1.0, 2.0)
    with pytest.raises(ParameterError):
        transmit(np.zeros(3), hop, NoiseModel(), rng)


def test_noise_model_requires_positive_variance():
    with pytest.raises(ParameterError):
        NoiseModel(0.0)


def test_complex_gaussian_splits_variance(rng):
    samples = complex_gaussian(rng, 200_000, 4.0)
    assert np.var(samples.real) == pytest.approx(2.0, rel=0.02)
    assert np.var(samples.imag) == pytest.approx(2.0, rel=0.02)
