"""Joint bit and power loading for multicarrier links.

The allocator trades total transmit power against total throughput through a
single weight, solves each subcarrier in closed form, and meets a power
budget by bisection on that weight. Companion modules supply the Rayleigh
channel model, closed-form fading averages, reference baselines, an
exhaustive-search oracle and a first-order optimality checker, plus a sweep
harness and CLI around them.
"""

from .allocator import (
    BER_CEILING,
    ContinuousAllocation,
    DiscreteAllocation,
    HAVE_NUMBA,
    LoadingConfig,
    allocate,
    allocate_unconstrained,
    ber,
    cnr_threshold,
    continuous_bits,
    continuous_power,
    effective_alpha,
    power_for_bits,
    relation_power_of_bits,
    scalarize,
    solve_continuous,
)
from .analytic import AnalyticParams, avg_power, avg_throughput, exp_integral_neg
from .baselines import (
    ExhaustiveConfig,
    equal_bit_power_loading,
    exhaustive_search,
    greedy_margin_adaptive,
    uniform_power_bit_loading,
)
from .channel import ChannelRealization, FadingModel, average_snr_db, generate_rayleigh
from .errors import EnumerationTooLargeError, InfeasibleError
from .harness import (
    ALGORITHMS,
    CSV_HEADER,
    ExperimentSpec,
    GapRecord,
    GapStudyResult,
    SweepRecord,
    emit,
    load_record_schema,
    read_records,
    run_compare,
    run_gap_study,
    run_sweep,
)
from .kkt import KktReport, check_kkt, finite_difference_stationarity, multipliers

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AnalyticParams",
    "BER_CEILING",
    "CSV_HEADER",
    "ChannelRealization",
    "ContinuousAllocation",
    "DiscreteAllocation",
    "EnumerationTooLargeError",
    "ExhaustiveConfig",
    "ExperimentSpec",
    "FadingModel",
    "GapRecord",
    "GapStudyResult",
    "HAVE_NUMBA",
    "InfeasibleError",
    "KktReport",
    "LoadingConfig",
    "SweepRecord",
    "allocate",
    "allocate_unconstrained",
    "average_snr_db",
    "avg_power",
    "avg_throughput",
    "ber",
    "check_kkt",
    "cnr_threshold",
    "continuous_bits",
    "continuous_power",
    "effective_alpha",
    "emit",
    "equal_bit_power_loading",
    "exhaustive_search",
    "exp_integral_neg",
    "finite_difference_stationarity",
    "generate_rayleigh",
    "greedy_margin_adaptive",
    "load_record_schema",
    "multipliers",
    "power_for_bits",
    "read_records",
    "relation_power_of_bits",
    "run_compare",
    "run_gap_study",
    "run_sweep",
    "scalarize",
    "solve_continuous",
    "uniform_power_bit_loading",
    "__version__",
]
