"""Joint bit and power loading for a multicarrier link.

The per-subcarrier BER of square M-QAM with Gray mapping is approximated by

    ber(P, b, C) = 0.2 * exp(-1.6 * P * C / (2**b - 1))

where P is transmit power (mW), b the bits per symbol and C the
channel-to-noise ratio (1/mW). The loading problem trades total transmit
power against total throughput through a weight ``alpha``:

    minimize  alpha * s * sum(P_i) - (1 - alpha) * sum(b_i)

subject to each active subcarrier meeting its BER threshold with equality.
With the BER constraint eliminated, the per-subcarrier optimum has the
closed form implemented by :func:`continuous_bits` and
:func:`continuous_power`; a subcarrier is worth activating only when its CNR
reaches :func:`cnr_threshold`, at which point the optimum is exactly 2 bits.

:func:`allocate_unconstrained` rounds the continuous solution to integer
bits, recomputes powers by BER equality and nulls subcarriers below
threshold. :func:`allocate` adds a total-power budget by bisecting on
``alpha``: raising the weight shrinks every subcarrier's allocation, so the
smallest feasible weight is found in at most
``ceil(log2((1 - alpha0)/alpha_tol))`` midpoint evaluations.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .errors import InfeasibleError

__all__ = [
    "LoadingConfig",
    "ContinuousAllocation",
    "DiscreteAllocation",
    "ber",
    "power_for_bits",
    "cnr_threshold",
    "continuous_bits",
    "continuous_power",
    "relation_power_of_bits",
    "effective_alpha",
    "solve_continuous",
    "allocate_unconstrained",
    "allocate",
    "scalarize",
]

LN2 = math.log(2.0)

# BER saturates at 0.2 when nothing is transmitted, so thresholds at or
# above it are meaningless (log(5*t) >= 0 breaks every closed form).
BER_CEILING = 0.2


@dataclass(frozen=True)
class LoadingConfig:
    """Validated knobs of the loading problem.

    Attributes
    ----------
    alpha0 : float
        Initial power/throughput weight, in (0, 1).
    ber_th : float or ndarray
        BER threshold, scalar or one per subcarrier, each in (0, 0.2).
    p_th : float or None
        Total transmit power budget in mW; None means unconstrained.
    epsilon : float
        Power feasibility band in mW: bisection may stop early once a
        feasible total lands within epsilon below the budget.
    power_scale : float
        Scale factor s applied to the power term of the objective (1/mW).
    alpha_tol : float
        Bisection interval width at which the search stops.
    """

    alpha0: float = 0.5
    ber_th: float | np.ndarray = 1e-4
    p_th: float | None = None
    epsilon: float = 1e-9
    power_scale: float = 1.0
    alpha_tol: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 1.0:
            raise ValueError(f"alpha0 must be in (0, 1), got {self.alpha0}")
        t = np.asarray(self.ber_th, dtype=np.float64)
        if np.any(t <= 0.0) or np.any(t >= BER_CEILING):
            raise ValueError(f"ber_th entries must lie in (0, {BER_CEILING})")
        if self.p_th is not None and self.p_th <= 0:
            raise ValueError(f"p_th must be > 0 or None, got {self.p_th}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.power_scale <= 0:
            raise ValueError(f"power_scale must be > 0, got {self.power_scale}")
        if self.alpha_tol <= 0:
            raise ValueError(f"alpha_tol must be > 0, got {self.alpha_tol}")
        # per-n materialized threshold vectors; allocate() calls ber_array
        # on every bisection step, so rebuilding the array each time would
        # dominate small-n runtimes
        object.__setattr__(self, "_ber_cache", {})

    def ber_array(self, n: int) -> np.ndarray:
        """BER thresholds broadcast to ``n`` subcarriers (readonly view)."""
        t = self._ber_cache.get(n)
        if t is not None:
            return t
        t = np.asarray(self.ber_th, dtype=np.float64)
        if t.ndim == 0:
            t = np.full(n, float(t))
        elif t.shape != (n,):
            raise ValueError(f"ber_th has shape {t.shape}, expected ({n},)")
        else:
            t = t.copy()
        t.setflags(write=False)
        self._ber_cache[n] = t
        return t


@dataclass
class ContinuousAllocation:
    """Real-valued per-subcarrier solution before rounding.

    ``active`` marks subcarriers at or above their CNR threshold; the rest
    carry zero bits and power. Treat instances as immutable.
    """

    bits: np.ndarray
    powers: np.ndarray
    active: np.ndarray


@dataclass(slots=True)
class DiscreteAllocation:
    """Integer-bit allocation with powers set by BER equality.

    ``bisection_iterations`` counts budget-search midpoint evaluations and
    is 0 when the budget was absent or already satisfied. Baseline
    algorithms reuse this container with ``alpha_used`` and ``objective``
    set to NaN (no weight is involved there). Treat instances as immutable.
    """

    bits: np.ndarray
    powers: np.ndarray
    alpha_used: float
    total_bits: int
    total_power: float
    objective: float
    bisection_iterations: int = 0


def ber(power, bits, cnr):
    """BER of an M-QAM subcarrier at the given power, bits and CNR.

    Equals 0.2 at zero power and decays exponentially with power. ``bits``
    must be positive; at zero bits the expression is undefined.
    """
    bits_arr = np.asarray(bits, dtype=np.float64)
    if np.any(bits_arr <= 0):
        raise ValueError("bits must be > 0 (the BER model is undefined at 0)")
    if np.any(np.asarray(power) < 0):
        raise ValueError("power must be >= 0")
    if np.any(np.asarray(cnr) < 0):
        raise ValueError("cnr must be >= 0")
    out = 0.2 * np.exp(-1.6 * np.asarray(power) * np.asarray(cnr) / (np.exp2(bits_arr) - 1.0))
    return out if out.ndim else float(out)


def _gamma(ber_th):
    # -log(5*t) > 0 for t < 0.2; shorthand used throughout
    return -np.log(5.0 * np.asarray(ber_th, dtype=np.float64))


def power_for_bits(bits, cnr, ber_th):
    """Power making the BER exactly ``ber_th`` at ``bits`` and ``cnr``, in mW.

    Inverts the BER model: (2**bits - 1) * (-log(5*ber_th)) / (1.6 * cnr).
    Raises InfeasibleError on zero CNR (no finite power reaches the target).
    """
    bits_arr = np.asarray(bits, dtype=np.float64)
    t = np.asarray(ber_th, dtype=np.float64)
    if np.any(bits_arr < 2):
        raise ValueError("bits must be >= 2")
    if np.any(t <= 0) or np.any(t >= BER_CEILING):
        raise ValueError(f"ber_th must lie in (0, {BER_CEILING})")
    cnr_arr = np.asarray(cnr, dtype=np.float64)
    if np.any(cnr_arr <= 0):
        raise InfeasibleError("cnr must be > 0 to meet a BER target with finite power")
    out = (np.exp2(bits_arr) - 1.0) * _gamma(t) / (1.6 * cnr_arr)
    return out if out.ndim else float(out)


def _check_alpha_ber(alpha, ber_th):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    t = np.asarray(ber_th, dtype=np.float64)
    if np.any(t <= 0) or np.any(t >= BER_CEILING):
        raise ValueError(f"ber_th must lie in (0, {BER_CEILING})")


def cnr_threshold(alpha, ber_th):
    """Smallest CNR at which a subcarrier is worth activating, in 1/mW.

    At this CNR the continuous solution is exactly 2 bits; below it the
    subcarrier is nulled. Grows without bound as alpha -> 1.
    """
    _check_alpha_ber(alpha, ber_th)
    out = 2.5 * _gamma(ber_th) * (alpha * LN2 / (1.0 - alpha))
    return out if out.ndim else float(out)


def continuous_bits(alpha, cnr, ber_th):
    """Real-valued optimal bits at weight ``alpha``; defined for CNR at or
    above :func:`cnr_threshold`, where it is >= 2.

    Raises ValueError below threshold: the caller must null such
    subcarriers rather than extrapolate the closed form.
    """
    _check_alpha_ber(alpha, ber_th)
    cnr_arr = np.asarray(cnr, dtype=np.float64)
    if np.any(cnr_arr < cnr_threshold(alpha, ber_th)):
        raise ValueError("cnr below activation threshold; null the subcarrier")
    k = (1.0 - alpha) / (alpha * LN2)
    out = np.log2(1.6 * k * cnr_arr / _gamma(ber_th))
    return out if out.ndim else float(out)


def continuous_power(alpha, cnr, ber_th):
    """Real-valued optimal power in mW at weight ``alpha``.

    Consistent with the bits solution: equals ``power_for_bits`` evaluated
    at the real-valued optimum, and saturates at (1-alpha)/(alpha*ln 2) as
    CNR grows. Same domain restriction as :func:`continuous_bits`.
    """
    _check_alpha_ber(alpha, ber_th)
    cnr_arr = np.asarray(cnr, dtype=np.float64)
    if np.any(cnr_arr < cnr_threshold(alpha, ber_th)):
        raise ValueError("cnr below activation threshold; null the subcarrier")
    k = (1.0 - alpha) / (alpha * LN2)
    out = k * (1.0 - _gamma(ber_th) / (1.6 * k * cnr_arr))
    return out if out.ndim else float(out)


def relation_power_of_bits(alpha, bits):
    """Power in mW that the stationarity relation assigns to a bit load.

    Equals (1-alpha)/(alpha*ln 2) * (1 - 2**-bits): zero exactly at zero
    bits, increasing and bounded by (1-alpha)/(alpha*ln 2).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    bits_arr = np.asarray(bits, dtype=np.float64)
    if np.any(bits_arr < 0):
        raise ValueError("bits must be >= 0")
    k = (1.0 - alpha) / (alpha * LN2)
    out = k * (1.0 - np.exp2(-bits_arr))
    return out if out.ndim else float(out)


def effective_alpha(alpha, power_scale):
    """Weight absorbing the power-term scale factor.

    Scaling the power term by s is equivalent to running the unscaled
    problem at alpha*s / (alpha*s + (1-alpha)); the closed forms are reused
    unchanged at this weight. Monotone increasing in alpha; equals alpha
    when s == 1.
    """
    sa = alpha * power_scale
    return sa / (sa + (1.0 - alpha))


def solve_continuous(alpha, realization, ber_th):
    """Continuous closed-form solution over a whole realization.

    Subcarriers below their activation threshold are nulled (zero bits and
    power); no rounding, no budget.
    """
    _check_alpha_ber(alpha, ber_th)
    cnr = realization.cnr
    t = np.broadcast_to(np.asarray(ber_th, dtype=np.float64), cnr.shape)
    g = _gamma(t)
    cth = 2.5 * g * (alpha * LN2 / (1.0 - alpha))
    active = cnr >= cth
    k = (1.0 - alpha) / (alpha * LN2)
    safe = np.where(active, cnr, 1.0)
    bits = np.where(active, np.log2(1.6 * k * safe / g), 0.0)
    powers = np.where(active, k * (1.0 - g / (1.6 * k * safe)), 0.0)
    return ContinuousAllocation(bits=bits, powers=powers, active=active)


def _load_numpy(cnr, ber_th, alpha):
    """Vectorized twin of the jit kernel; reference implementation.

    Same per-element expressions in the same order, so bits and powers are
    bitwise identical to the kernel's (up to libm rounding of log2); only
    the scalar totals may differ in the last ulp because numpy sums
    pairwise while the kernel accumulates in index order.
    """
    g = -np.log(5.0 * ber_th)
    s = alpha * LN2 / (1.0 - alpha)
    k = (1.0 - alpha) / (alpha * LN2)
    active = cnr >= 2.5 * g * s
    safe = np.where(active, cnr, 1.0)
    b = np.where(active, np.floor(np.log2(1.6 * k * safe / g) + 0.5), 0.0)
    p = np.where(active, (np.exp2(b) - 1.0) * g / (1.6 * safe), 0.0)
    return b.astype(np.int64), p, int(b.sum()), float(p.sum())


try:  # pragma: no cover - exercised through the dispatch below
    if os.environ.get("MCBITLOAD_DISABLE_NUMBA"):
        raise ImportError("disabled by MCBITLOAD_DISABLE_NUMBA")
    import numba

    @numba.njit(cache=True)
    def _load_numba(cnr, ber_th, alpha):
        s = alpha * LN2 / (1.0 - alpha)
        k = (1.0 - alpha) / (alpha * LN2)
        n = cnr.shape[0]
        bits = np.zeros(n, dtype=np.int64)
        powers = np.zeros(n, dtype=np.float64)
        total_bits = 0
        total_power = 0.0
        for i in range(n):
            g = -np.log(5.0 * ber_th[i])
            c = cnr[i]
            if c >= 2.5 * g * s:
                b = np.floor(np.log2(1.6 * k * c / g) + 0.5)
                p = (np.exp2(b) - 1.0) * g / (1.6 * c)
                bi = np.int64(b)
                bits[i] = bi
                powers[i] = p
                total_bits += bi
                total_power += p
        return bits, powers, total_bits, total_power

    _load = _load_numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _load = _load_numpy
    HAVE_NUMBA = False


def _objective(alpha, power_scale, total_power, total_bits):
    return alpha * power_scale * total_power - (1.0 - alpha) * total_bits


def allocate_unconstrained(alpha, realization, config):
    """Load every subcarrier at weight ``alpha``, ignoring any budget.

    Rounds the continuous bits half away from zero, recomputes each active
    power by BER equality and nulls subcarriers below threshold. The
    objective is scalarized at the caller's ``alpha`` and
    ``config.power_scale``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    cnr = realization.cnr
    t = config.ber_array(cnr.shape[0])
    scale = config.power_scale
    a_eff = alpha if scale == 1.0 else effective_alpha(alpha, scale)
    bits, powers, total_bits, total_power = _load(cnr, t, a_eff)
    return DiscreteAllocation(
        bits=bits,
        powers=powers,
        alpha_used=alpha,
        total_bits=int(total_bits),
        total_power=total_power,
        objective=alpha * scale * total_power - (1.0 - alpha) * total_bits,
    )


def allocate(realization, config):
    """Load a realization, honoring the total-power budget if one is set.

    Without a budget (or when the initial weight already fits) this is
    ``allocate_unconstrained`` at ``config.alpha0``. Otherwise the weight is
    bisected on [alpha0, 1]: feasible midpoints shrink the interval from
    above, infeasible ones from below, and the best feasible allocation
    (largest total power not exceeding the budget) is returned. The search
    stops early once a feasible total lands within ``config.epsilon`` of the
    budget, and always within ``ceil(log2((1-alpha0)/alpha_tol))`` midpoint
    evaluations. The returned ``alpha_used`` is the smallest feasible
    midpoint found, not a provably minimal weight: the rounded total power
    is a step function of the weight.

    The result satisfies ``total_power <= p_th`` in all cases; if no probed
    weight fits (budget below the cheapest single active subcarrier), the
    all-nulled allocation is returned with ``alpha_used`` near 1.
    """
    initial = allocate_unconstrained(config.alpha0, realization, config)
    if config.p_th is None or initial.total_power <= config.p_th:
        return initial

    lo, hi = config.alpha0, 1.0
    best = None
    iterations = 0
    mid = 0.5 * (lo + hi)
    while hi - lo >= config.alpha_tol:
        mid = 0.5 * (lo + hi)
        cand = allocate_unconstrained(mid, realization, config)
        iterations += 1
        if cand.total_power <= config.p_th:
            if best is None or cand.total_power > best.total_power:
                best = cand
            hi = mid
            if config.p_th - cand.total_power <= config.epsilon:
                break
        else:
            lo = mid
    if best is None:
        n = realization.cnr.shape[0]
        best = DiscreteAllocation(
            bits=np.zeros(n, dtype=np.int64),
            powers=np.zeros(n, dtype=np.float64),
            alpha_used=mid,
            total_bits=0,
            total_power=0.0,
            objective=0.0,
        )
    best.bisection_iterations = iterations
    return best


def scalarize(alpha, allocation, power_scale=1.0):
    """Weighted objective alpha*s*sum(P) - (1-alpha)*sum(b) of an allocation.

    Accepts continuous or discrete allocations; sums the stored vectors.
    """
    if power_scale <= 0:
        raise ValueError(f"power_scale must be > 0, got {power_scale}")
    total_power = float(np.sum(allocation.powers))
    total_bits = float(np.sum(allocation.bits))
    return _objective(alpha, power_scale, total_power, total_bits)
