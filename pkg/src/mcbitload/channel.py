"""Rayleigh-fading multicarrier channel generation.

Each subcarrier sees an independent flat fade. With Rayleigh-distributed
amplitude the power gain ``|H_i|^2`` is exponential with mean ``mean_gain``,
and the channel-to-noise ratio ``C_i = |H_i|^2 / noise_variance`` is
exponential with rate ``noise_variance / mean_gain``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["FadingModel", "ChannelRealization", "generate_rayleigh", "average_snr_db"]


@dataclass(frozen=True)
class FadingModel:
    """Rayleigh fading ensemble, parameterized by the mean power gain.

    The rate of the resulting exponential CNR distribution depends on the
    noise level and is derived on demand rather than stored, so the model
    cannot fall out of sync with a realization's noise variance.
    """

    mean_gain: float = 1.0

    def __post_init__(self):
        if self.mean_gain <= 0:
            raise ValueError(f"mean_gain must be > 0, got {self.mean_gain}")

    def rate(self, noise_variance: float) -> float:
        """Rate of the exponential CNR distribution (mean CNR is 1/rate)."""
        if noise_variance <= 0:
            raise ValueError(f"noise_variance must be > 0, got {noise_variance}")
        return noise_variance / self.mean_gain


@dataclass(frozen=True)
class ChannelRealization:
    """One multicarrier channel draw.

    Attributes
    ----------
    gain_sq : ndarray
        Per-subcarrier power gain |H_i|^2, length N.
    noise_variance : float
        Noise power in mW, common to all subcarriers.
    cnr : ndarray
        Per-subcarrier channel-to-noise ratio gain_sq/noise_variance, in 1/mW.
    """

    gain_sq: np.ndarray
    noise_variance: float
    cnr: np.ndarray = field(init=False)

    def __post_init__(self):
        gain_sq = np.asarray(self.gain_sq, dtype=np.float64)
        if gain_sq.ndim != 1 or gain_sq.size < 1:
            raise ValueError("gain_sq must be a 1-D array of length >= 1")
        if np.any(gain_sq < 0):
            raise ValueError("gain_sq entries must be >= 0")
        if self.noise_variance <= 0:
            raise ValueError(f"noise_variance must be > 0, got {self.noise_variance}")
        object.__setattr__(self, "gain_sq", gain_sq)
        object.__setattr__(self, "cnr", gain_sq / self.noise_variance)

    @property
    def n(self) -> int:
        return self.gain_sq.size


def generate_rayleigh(n, model, noise_variance, seed):
    """Draw one Rayleigh channel realization with ``n`` subcarriers.

    Parameters
    ----------
    n : int
        Subcarrier count, >= 1.
    model : FadingModel
    noise_variance : float
        Noise power in mW.
    seed : int or sequence of int
        Seed for ``numpy.random.default_rng``. Identical seeds give bitwise
        identical realizations; sequences of ints give independent
        substreams, so batches stay reproducible however they are scheduled.

    Returns
    -------
    ChannelRealization
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if noise_variance <= 0:
        raise ValueError(f"noise_variance must be > 0, got {noise_variance}")
    rng = np.random.default_rng(seed)
    gain_sq = rng.exponential(model.mean_gain, n)
    return ChannelRealization(gain_sq=gain_sq, noise_variance=noise_variance)


def average_snr_db(allocations, realizations):
    """Average received SNR in dB over allocations and their channels.

    The received SNR of subcarrier i is ``P_i * C_i``; subcarriers with zero
    power contribute zero. The mean is taken over every subcarrier of every
    realization, then converted to dB. Returns ``-inf`` when every power is
    zero (nothing transmitted, below any floor).
    """
    if len(allocations) == 0 or len(realizations) == 0:
        raise ValueError("allocations and realizations must be non-empty")
    if len(allocations) != len(realizations):
        raise ValueError("allocations and realizations must be index-aligned")
    total = 0.0
    count = 0
    for alloc, chan in zip(allocations, realizations):
        powers = np.asarray(alloc.powers, dtype=np.float64)
        if powers.shape != chan.cnr.shape:
            raise ValueError("allocation and realization dimensions differ")
        total += float(powers @ chan.cnr)
        count += powers.size
    mean = total / count
    if mean <= 0.0:
        return float("-inf")
    return 10.0 * np.log10(mean)
