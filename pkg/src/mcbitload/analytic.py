"""Closed-form fading averages of the continuous loading solution.

When the channel-to-noise ratio of each subcarrier is exponential with rate
``lam`` (Rayleigh power fading), the ensemble averages of the continuous
bits and power have closed forms in ``z = lam * C_th``, the activation
threshold measured in units of the mean CNR. Both involve the exponential
integral Ei(-z), implemented here with a dual-route evaluator: a power
series below z = 1 and a modified-Lentz continued fraction above.

These averages describe the unconstrained solution only; under an active
power budget the weight moves per realization and no closed form applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocator import LN2, BER_CEILING, cnr_threshold

__all__ = ["AnalyticParams", "exp_integral_neg", "avg_throughput", "avg_power"]

EULER_GAMMA = 0.5772156649015329

# z below which the power series converges fast and without cancellation;
# above it the continued fraction takes over.
_SERIES_CUTOFF = 1.0


@dataclass(frozen=True)
class AnalyticParams:
    """Inputs of the fading averages.

    Attributes
    ----------
    alpha : float
        Power/throughput weight, in (0, 1).
    ber_th : float or ndarray
        BER threshold, scalar or one per subcarrier, each in (0, 0.2).
    rate : float
        Rate of the exponential CNR distribution (mean CNR = 1/rate), mW.
    n : int
        Subcarrier count.
    """

    alpha: float
    ber_th: float | np.ndarray
    rate: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        t = np.asarray(self.ber_th, dtype=np.float64)
        if np.any(t <= 0) or np.any(t >= BER_CEILING):
            raise ValueError(f"ber_th entries must lie in (0, {BER_CEILING})")
        if t.ndim not in (0, 1):
            raise ValueError("ber_th must be scalar or 1-D")
        if t.ndim == 1 and t.size != self.n:
            raise ValueError(f"ber_th has length {t.size}, expected {self.n}")
        if self.rate <= 0:
            raise ValueError(f"rate must be > 0, got {self.rate}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    def thresholds(self) -> np.ndarray:
        """Per-subcarrier activation thresholds, length n."""
        cth = cnr_threshold(self.alpha, self.ber_th)
        return np.broadcast_to(np.asarray(cth, dtype=np.float64), self.n)


def _ei_neg_series(z):
    # Ei(-z) = gamma + ln(z) + sum_k (-z)**k / (k * k!), accurate for small z
    total = EULER_GAMMA + math.log(z)
    term = 1.0
    for k in range(1, 200):
        term *= -z / k
        contrib = term / k
        total += contrib
        if abs(contrib) < 1e-17 * max(abs(total), 1e-300):
            break
    return total


def _e1_lentz(z):
    # E1(z) = exp(-z) * CF, CF = 1/(z+1- 1/(z+3- 4/(z+5- ...))) evaluated
    # by the modified Lentz method; Ei(-z) = -E1(z)
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for i in range(1, 500):
        an = -float(i) * float(i)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        f *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return math.exp(-z) * f


def exp_integral_neg(z):
    """Exponential integral Ei(-z) for z > 0; always negative.

    Scalar or elementwise on arrays. Power series below z = 1, continued
    fraction above; both routes agree to ~1e-14 relative where they
    overlap, and the result is accurate to better than 1e-12 relative
    against quadrature of the defining integral.
    """
    arr = np.asarray(z, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValueError("z must be > 0")
    if arr.ndim == 0:
        zf = float(arr)
        return _ei_neg_series(zf) if zf < _SERIES_CUTOFF else -_e1_lentz(zf)
    out = np.empty_like(arr)
    flat = arr.ravel()
    dst = out.ravel()
    for i, zf in enumerate(flat):
        dst[i] = _ei_neg_series(zf) if zf < _SERIES_CUTOFF else -_e1_lentz(zf)
    return out


def avg_throughput(params):
    """Mean total bits per multicarrier symbol of the continuous solution.

    Per subcarrier, with z = rate * C_th:

        (1/log10(2)) * (log10(4) * exp(-z) - Ei(-z)/ln(10))

    which equals the all-nats form 2*exp(-z) - Ei(-z)/ln(2). Summed over
    subcarriers; nonnegative, and 0 in the limit of vanishing mean CNR.
    """
    z = params.rate * params.thresholds()
    ei = exp_integral_neg(z)
    per = (1.0 / math.log10(2.0)) * (math.log10(4.0) * np.exp(-z) - ei / math.log(10.0))
    return float(np.sum(per))


def avg_power(params):
    """Mean total transmit power in mW of the continuous solution.

    Per subcarrier, with z = rate * C_th and k = (1-alpha)/(alpha*ln 2):

        k * (exp(-z) + (z/4) * Ei(-z))

    Summed over subcarriers; nonnegative, increasing toward the ceiling
    n*k as the mean CNR grows.
    """
    z = params.rate * params.thresholds()
    ei = exp_integral_neg(z)
    k = (1.0 - params.alpha) / (params.alpha * LN2)
    per = k * (np.exp(-z) + (z / 4.0) * ei)
    return float(np.sum(per))
