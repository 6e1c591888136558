"""Comparison algorithms: an exhaustive oracle and three reconstructions.

The exhaustive search enumerates every integer bit vector over the alphabet
{0} u {2..b_max} and is the optimality reference for small subcarrier
counts. The other three are reconstructions of common loading strategies
(uniform power, equal bits, greedy margin-adaptive), not ports of any
specific published implementation; comparison outputs should be labeled
accordingly.

Baselines fill the same ``DiscreteAllocation`` container as the allocator
but with ``alpha_used`` and ``objective`` set to NaN, since no weight is
involved. The uniform-power baseline also keeps its per-subcarrier power on
subcarriers whose bit count clamps to zero, and meets its BER targets by
inequality rather than equality.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .allocator import DiscreteAllocation, _gamma, _objective, power_for_bits
from .errors import EnumerationTooLargeError, InfeasibleError

__all__ = [
    "ExhaustiveConfig",
    "exhaustive_search",
    "uniform_power_bit_loading",
    "equal_bit_power_loading",
    "greedy_margin_adaptive",
]

# hard cap on enumerated candidates; above this the oracle refuses to run
ENUMERATION_GUARD = 10**8

_CHUNK = 1 << 16


@dataclass(frozen=True)
class ExhaustiveConfig:
    """Search depth of the exhaustive oracle."""

    b_max: int = 8

    def __post_init__(self):
        if self.b_max < 2:
            raise ValueError(f"b_max must be >= 2, got {self.b_max}")

    @property
    def bit_alphabet(self) -> np.ndarray:
        """Admissible bit loads: zero or anything from 2 to b_max."""
        return np.concatenate(([0], np.arange(2, self.b_max + 1)))


def _baseline_allocation(bits, powers):
    return DiscreteAllocation(
        bits=bits,
        powers=powers,
        alpha_used=float("nan"),
        total_bits=int(bits.sum()),
        total_power=float(powers.sum()),
        objective=float("nan"),
    )


def exhaustive_search(realization, config, ex):
    """Globally optimal discrete allocation by full enumeration.

    Every bit vector over ``ex.bit_alphabet`` is scored with powers set by
    BER equality; vectors whose total power exceeds ``config.p_th`` are
    discarded, and the feasible minimizer of the weighted objective at
    ``config.alpha0`` is returned. Ties break toward smaller total power,
    then toward the lexicographically smallest bit vector, which makes the
    result deterministic. The all-zero vector is always feasible, so a
    result always exists.

    Raises EnumerationTooLargeError when alphabet_size**n exceeds the
    10**8 guard.
    """
    cnr = realization.cnr
    n = cnr.shape[0]
    alphabet = ex.bit_alphabet
    m = alphabet.shape[0]
    total = m**n
    if total > ENUMERATION_GUARD:
        raise EnumerationTooLargeError(
            f"{m}**{n} = {total} candidates exceed the {ENUMERATION_GUARD} guard"
        )
    t = config.ber_array(n)
    g = _gamma(t)
    alpha = config.alpha0
    scale = config.power_scale
    p_th = config.p_th

    # per-subcarrier power of each alphabet entry; index [i, j] is the cost
    # of loading alphabet[j] bits on subcarrier i (inf when cnr is 0)
    # 0*inf in the masked zero-bit column is discarded by the where
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = np.where(
            alphabet[np.newaxis, :] > 0,
            (np.exp2(alphabet.astype(np.float64))[np.newaxis, :] - 1.0)
            * (g / (1.6 * cnr))[:, np.newaxis],
            0.0,
        )

    # enumerate candidate index -> base-m digits, subcarrier 0 as the most
    # significant digit so ascending indices are lexicographic bit vectors
    place = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    best_key = None
    best_digits = None
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = (idx[:, np.newaxis] // place[np.newaxis, :]) % m
        bits = alphabet[digits]
        powers = np.take_along_axis(cost.T, digits, axis=0).sum(axis=1)
        objective = _objective(alpha, scale, powers, bits.sum(axis=1))
        feasible = powers <= p_th if p_th is not None else np.isfinite(powers)
        if not feasible.any():
            continue
        objective = np.where(feasible, objective, np.inf)
        powers = np.where(feasible, powers, np.inf)
        order = np.lexsort((idx, powers, objective))
        j = order[0]
        key = (objective[j], powers[j], int(idx[j]))
        if best_key is None or key < best_key:
            best_key = key
            best_digits = digits[j]

    bits = alphabet[best_digits]
    active = bits > 0
    powers = np.zeros(n, dtype=np.float64)
    if active.any():
        powers[active] = power_for_bits(bits[active], cnr[active], t[active])
    total_power = float(powers.sum())
    return DiscreteAllocation(
        bits=bits.astype(np.int64),
        powers=powers,
        alpha_used=alpha,
        total_bits=int(bits.sum()),
        total_power=total_power,
        objective=_objective(alpha, scale, total_power, int(bits.sum())),
    )


def uniform_power_bit_loading(realization, p_budget, ber_th):
    """Spread the budget evenly and load the most bits each BER allows.

    Every subcarrier gets p_budget/n mW, including those too weak to carry
    the 2-bit minimum (their bits clamp to 0 but the power stays, as a
    uniform transmitter would). The bit count is the largest b with
    ber(p, b, cnr) <= ber_th; a 1e-9 slack inside the floor keeps exact
    BER-equality boundaries from rounding down by one ulp.
    """
    if p_budget < 0:
        raise ValueError(f"p_budget must be >= 0, got {p_budget}")
    cnr = realization.cnr
    n = cnr.shape[0]
    t = np.broadcast_to(np.asarray(ber_th, dtype=np.float64), n)
    p = p_budget / n
    b = np.floor(np.log2(1.0 + 1.6 * p * cnr / _gamma(t)) + 1e-9)
    bits = np.where(b >= 2, b, 0.0).astype(np.int64)
    return _baseline_allocation(bits, np.full(n, p))


def equal_bit_power_loading(realization, total_bits_target, ber_th):
    """Load the same bit count everywhere; power follows from BER equality.

    The target must split into an integer b >= 2 per subcarrier (the caller
    rounds its target to a multiple of n first). Any zero-CNR subcarrier
    makes the instance infeasible, since it would need infinite power.
    """
    cnr = realization.cnr
    n = cnr.shape[0]
    if total_bits_target % n != 0 or total_bits_target // n < 2:
        raise ValueError(
            f"target {total_bits_target} does not split into an integer >= 2 "
            f"over {n} subcarriers"
        )
    if np.any(cnr <= 0):
        raise InfeasibleError("zero-CNR subcarrier cannot carry bits at finite power")
    b = total_bits_target // n
    t = np.broadcast_to(np.asarray(ber_th, dtype=np.float64), n)
    powers = power_for_bits(np.full(n, b), cnr, t)
    return _baseline_allocation(np.full(n, b, dtype=np.int64), powers)


def greedy_margin_adaptive(realization, total_bits_target, ber_th):
    """Reach a bit target at small total power by greedy increments.

    Moves are compared by incremental power per bit: activating a
    subcarrier (0 -> 2 bits) costs its 2-bit power over two bits, and each
    further bit doubles in price. Because activation comes in a 2-bit lump,
    a myopic greedy can overshoot on the last bit; when a single bit
    remains, the cheapest of three repairs is applied instead: one plain
    increment, an activation paid for by removing the most expensive top
    increment elsewhere, or an activation at 3 bits replacing a 2-bit
    subcarrier. Powers are set by BER equality on the final bit vector.

    Raises ValueError for targets the alphabet cannot express (1, or
    negative) and InfeasibleError when no subcarrier has positive CNR.
    """
    cnr = realization.cnr
    n = cnr.shape[0]
    if total_bits_target < 0 or total_bits_target == 1:
        raise ValueError(f"target {total_bits_target} is not reachable over {{0, 2, 3, ...}}")
    t = np.broadcast_to(np.asarray(ber_th, dtype=np.float64), n)
    bits = np.zeros(n, dtype=np.int64)
    if total_bits_target == 0:
        return _baseline_allocation(bits, np.zeros(n))
    usable = cnr > 0
    if not usable.any():
        raise InfeasibleError("no subcarrier has positive CNR; target unreachable")

    # u[i] is the power of one linear unit of 2**b on subcarrier i
    with np.errstate(divide="ignore"):
        u = np.where(usable, _gamma(t) / (1.6 * cnr), np.inf)

    # one live heap entry per subcarrier: its next available move
    heap = [(1.5 * u[i], i, 2) for i in range(n) if usable[i]]
    heapq.heapify(heap)
    remaining = int(total_bits_target)
    while remaining >= 2:
        cost_per_bit, i, grant = heapq.heappop(heap)
        if grant == 2:
            bits[i] = 2
        else:
            bits[i] += 1
        remaining -= grant
        heapq.heappush(heap, (u[i] * 2.0 ** bits[i], i, 1))

    if remaining == 1:
        active = np.flatnonzero(bits > 0)
        inactive = np.flatnonzero((bits == 0) & usable)
        options = []
        j = active[np.argmin(u[active] * 2.0 ** bits[active])]
        options.append((u[j] * 2.0 ** bits[j], ("increment", j)))
        if inactive.size:
            a = inactive[np.argmin(u[inactive])]
            high = active[bits[active] >= 3]
            if high.size:
                d = high[np.argmax(u[high] * 2.0 ** (bits[high] - 1))]
                options.append(
                    (3.0 * u[a] - u[d] * 2.0 ** (bits[d] - 1), ("swap_down", a, d))
                )
            two = active[bits[active] == 2]
            if two.size:
                d = two[np.argmax(u[two])]
                options.append((7.0 * u[a] - 3.0 * u[d], ("swap_out", a, d)))
        cost, move = min(options, key=lambda item: item[0])
        if move[0] == "increment":
            bits[move[1]] += 1
        elif move[0] == "swap_down":
            bits[move[1]] = 2
            bits[move[2]] -= 1
        else:
            bits[move[1]] = 3
            bits[move[2]] = 0

    powers = np.zeros(n, dtype=np.float64)
    loaded = bits > 0
    powers[loaded] = power_for_bits(bits[loaded], cnr[loaded], t[loaded])
    return _baseline_allocation(bits, powers)
