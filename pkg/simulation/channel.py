"""Frequency-domain hop channels: Rayleigh block fading, power-law path loss and AWGN."""

from dataclasses import dataclass

import numpy as np

from simulation.errors import ParameterError


@dataclass(frozen=True, eq=False)
class HopChannel:
    """Per-subcarrier amplitude gains of one hop, path loss included."""

    gains: np.ndarray
    distance: float
    path_loss_exponent: float

    @property
    def power_gains(self) -> np.ndarray:
        """|g[n]|^2 for every subcarrier."""
        return self.gains.real ** 2 + self.gains.imag ** 2

    @property
    def path_loss(self) -> float:
        return float(self.distance ** -self.path_loss_exponent)


@dataclass(frozen=True)
class NoiseModel:
    """Circularly-symmetric complex AWGN of total variance ``variance``."""

    variance: float = 1.0

    def __post_init__(self):
        if not self.variance > 0:
            raise ParameterError(f"Noise variance must be positive, got {self.variance}")


def complex_gaussian(rng: np.random.Generator, size: int, variance: float = 1.0) -> np.ndarray:
    """CN(0, variance) samples: real and imaginary parts each carry variance/2."""
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_hop(rng: np.random.Generator, n_subcarriers: int, distance: float,
               alpha: float) -> HopChannel:
    """Draw one independent Rayleigh block-fading realization for a hop.

    Args:
        rng: Random stream owned by the calling trial
        n_subcarriers: Number of subcarriers N
        distance: Hop length in meters
        alpha: Path-loss exponent

    Returns:
        HopChannel with gains h[n] * distance^(-alpha/2), h[n] ~ CN(0, 1)

    Raises:
        ParameterError: If distance is not positive
    """
    if not distance > 0:
        raise ParameterError(f"Hop distance must be positive, got {distance}")
    fading = complex_gaussian(rng, n_subcarriers)
    return HopChannel(fading * distance ** (-alpha / 2), float(distance), float(alpha))


def transmit(block_amplitudes: np.ndarray, hop: HopChannel, noise: NoiseModel,
             rng: np.random.Generator) -> np.ndarray:
    """y[n] = g[n] * x[n] + w[n] with w[n] ~ CN(0, sigma^2)."""
    block_amplitudes = np.asarray(block_amplitudes, dtype=complex)
    if block_amplitudes.shape != hop.gains.shape:
        raise ParameterError(
            f"Block of {block_amplitudes.size} subcarriers does not match hop of {hop.gains.size}"
        )
    return hop.gains * block_amplitudes + complex_gaussian(rng, hop.gains.size, noise.variance)


def subcarrier_snr(hop: HopChannel, power_per_subcarrier: float, noise: NoiseModel) -> np.ndarray:
    """Instantaneous per-subcarrier SNR (P/sigma^2) * |g[n]|^2."""
    return power_per_subcarrier * hop.power_gains / noise.variance
