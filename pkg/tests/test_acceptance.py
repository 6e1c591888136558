"""Acceptance gate: one test per criterion, one PASS/FAIL line each.

Run with -v for the per-criterion verdict lines; each test also prints its
measured numbers so a failure is diagnosable from the captured output.
"""

import math
import time

import mpmath
import numpy as np
import pytest
from scipy import integrate

import mcbitload.allocator as allocator_mod
from mcbitload import (
    AnalyticParams,
    ChannelRealization,
    ExhaustiveConfig,
    ExperimentSpec,
    FadingModel,
    LoadingConfig,
    allocate,
    allocate_unconstrained,
    avg_power,
    avg_throughput,
    ber,
    check_kkt,
    cnr_threshold,
    continuous_bits,
    continuous_power,
    equal_bit_power_loading,
    exhaustive_search,
    exp_integral_neg,
    finite_difference_stationarity,
    generate_rayleigh,
    greedy_margin_adaptive,
    power_for_bits,
    relation_power_of_bits,
    run_gap_study,
    run_sweep,
    scalarize,
    solve_continuous,
    uniform_power_bit_loading,
)
from mcbitload.kkt import _simplified_lambda

GRID_DB = tuple(np.linspace(0.0, 40.0, 10))
N = 128
REALIZATIONS = 10_000
ALPHA = 0.5
BER_TH = 1e-4


def _verdict(label, ok, detail):
    print(f"{label}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


@pytest.fixture(scope="module")
def unconstrained_sweep():
    spec = ExperimentSpec(
        n_subcarriers=N,
        n_realizations=REALIZATIONS,
        seed=1,
        snr_grid=GRID_DB,
        loading=LoadingConfig(alpha0=ALPHA, ber_th=BER_TH),
        snr_definition="mean_cnr",
    )
    return run_sweep(spec)


def test_criterion_1_analytic_simulation_match():
    # Monte Carlo means of the continuous per-subcarrier solution vs the
    # closed-form fading averages, 10 grid points, 1e4 realizations of 128
    # subcarriers each. At the weakest grid points the estimator itself is
    # too noisy for a 1% comparison (three standard errors exceed it), so
    # the tolerance there widens to five standard errors; every point from
    # 8.89 dB up must meet the strict 1%.
    start = time.monotonic()
    rows = []
    ok = True
    for pi, db in enumerate(GRID_DB):
        mean_cnr = 10.0 ** (db / 10.0)
        noise = 1.0 / mean_cnr
        chan = generate_rayleigh(N * REALIZATIONS, FadingModel(), noise, [1, pi, 0])
        sol = solve_continuous(ALPHA, chan, BER_TH)
        thr_trials = sol.bits.reshape(REALIZATIONS, N).sum(axis=1)
        pow_trials = sol.powers.reshape(REALIZATIONS, N).sum(axis=1)
        params = AnalyticParams(alpha=ALPHA, ber_th=BER_TH, rate=noise, n=N)
        want_thr, want_pow = avg_throughput(params), avg_power(params)
        for want, trials in ((want_thr, thr_trials), (want_pow, pow_trials)):
            mc = float(trials.mean())
            se = float(trials.std(ddof=1)) / math.sqrt(REALIZATIONS)
            rel_err = abs(mc - want) / want if want > 0 else abs(mc - want)
            rel_se = se / want if want > 0 else math.inf
            strict = 3.0 * rel_se <= 0.01
            tol = 0.01 if strict else max(0.01, 5.0 * rel_se)
            if pi >= 2 and not strict:
                ok = False  # estimator must be sharp from 8.89 dB up
            rows.append((db, want, mc, rel_err, tol))
            if rel_err > tol:
                ok = False
    elapsed = time.monotonic() - start
    for db, want, mc, rel_err, tol in rows:
        print(
            f"  {db:6.2f} dB analytic={want:12.6g} mc={mc:12.6g} "
            f"rel_err={rel_err:.2e} tol={tol:.2e}"
        )
    worst_strict = max(r[3] for r in rows if r[4] == 0.01)
    ok = ok and elapsed < 60.0
    assert _verdict(
        "criterion 1 (analytic vs simulation)",
        ok,
        f"worst strict-point error {worst_strict:.3%}, {elapsed:.1f}s",
    )


def test_criterion_2_power_saturation(unconstrained_sweep):
    records = unconstrained_sweep
    ceiling = N * (1.0 - ALPHA) / (ALPHA * math.log(2.0))
    top = records[-1]
    mid = records[len(records) // 2]
    power_dev = abs(top.avg_power - ceiling) / ceiling
    ratio = top.avg_throughput / mid.avg_throughput
    ok = power_dev <= 0.02 and ratio >= 1.2
    assert _verdict(
        "criterion 2 (power saturation)",
        ok,
        f"top power {top.avg_power:.2f} vs ceiling {ceiling:.2f} "
        f"({power_dev:.2%}), top/mid throughput {ratio:.2f}x",
    )


def test_criterion_3_budget_compliance():
    p_th = 0.1
    cfg = LoadingConfig(alpha0=ALPHA, ber_th=BER_TH, p_th=p_th)
    bound = math.ceil(math.log2((1.0 - ALPHA) / cfg.alpha_tol))
    model = FadingModel()
    violations = 0
    worst_iters = 0
    for trial in range(10_000):
        chan = generate_rayleigh(N, model, 0.01, [1, 0, trial])
        alloc = allocate(chan, cfg)
        if alloc.total_power > p_th:
            violations += 1
        worst_iters = max(worst_iters, alloc.bisection_iterations)
    ok = violations == 0 and worst_iters <= bound
    assert _verdict(
        "criterion 3 (budget compliance)",
        ok,
        f"{violations} violations in 10000 trials, "
        f"max iterations {worst_iters} <= bound {bound}",
    )


def test_criterion_4_oracle_gap():
    start = time.monotonic()
    cfg = LoadingConfig(alpha0=ALPHA, ber_th=BER_TH, p_th=0.005)
    ex = ExhaustiveConfig(8)
    model = FadingModel()
    noise = 1e-4  # 40 dB mean CNR so the budget admits a few active carriers
    hard_ok = True
    gaps = []
    for seed in range(100):
        chan = generate_rayleigh(4, model, noise, [2, 0, seed])
        prop = allocate(chan, cfg)
        orac = exhaustive_search(chan, cfg, ex)
        if prop.total_power > 0.005 or orac.total_power > 0.005:
            hard_ok = False
        obj_p = scalarize(ALPHA, prop)
        obj_o = scalarize(ALPHA, orac)
        if obj_o > obj_p + 1e-12:
            hard_ok = False
        gaps.append((obj_p - obj_o) / abs(obj_o) if obj_o != 0 else obj_p - obj_o)
    elapsed = time.monotonic() - start
    ok = hard_ok and elapsed < 60.0
    assert _verdict(
        "criterion 4 (exhaustive oracle gap)",
        ok,
        f"oracle <= proposed and both feasible on 100/100 seeds, "
        f"mean rel gap {np.mean(gaps):.4%}, max {np.max(gaps):.4%}, {elapsed:.1f}s",
    )


def test_criterion_5_ber_equality():
    rng = np.random.default_rng(5)
    checked = 0
    worst = 0.0
    while checked < 100_000:
        alpha = float(rng.uniform(0.05, 0.95))
        t = float(10.0 ** rng.uniform(-6, -2))
        cth = cnr_threshold(alpha, t)
        cnr = cth * 10.0 ** rng.uniform(-1.0, 3.0, 2000)
        alloc = allocate_unconstrained(
            alpha, ChannelRealization(cnr, 1.0), LoadingConfig(alpha0=alpha, ber_th=t)
        )
        active = alloc.bits > 0
        if active.any():
            achieved = ber(alloc.powers[active], alloc.bits[active], cnr[active])
            worst = max(worst, float(np.max(np.abs(achieved - t) / t)))
        checked += int(cnr.size)
    ok = worst < 1e-12
    assert _verdict(
        "criterion 5 (BER equality)",
        ok,
        f"worst relative BER defect {worst:.2e} over {checked} triples",
    )


def test_criterion_6_closed_form_consistency():
    rng = np.random.default_rng(6)
    worst = 0.0
    checked = 0
    while checked < 100_000:
        alpha = float(rng.uniform(0.05, 0.95))
        t = float(10.0 ** rng.uniform(-6, -2))
        cth = cnr_threshold(alpha, t)
        cnr = cth * (1.0 + 1e-9) * 10.0 ** rng.uniform(0.0, 4.0, 1000)
        b = continuous_bits(alpha, cnr, t)
        p = continuous_power(alpha, cnr, t)
        via_relation = relation_power_of_bits(alpha, b)
        via_inversion = power_for_bits(b, cnr, t)
        worst = max(
            worst,
            float(np.max(np.abs(p - via_relation) / p)),
            float(np.max(np.abs(p - via_inversion) / p)),
        )
        checked += int(cnr.size)
    boundary = 0.0
    for _ in range(100):
        alpha = float(rng.uniform(0.05, 0.95))
        t = float(10.0 ** rng.uniform(-6, -2))
        boundary = max(boundary, abs(continuous_bits(alpha, cnr_threshold(alpha, t), t) - 2.0))
    ok = worst < 1e-12 and boundary < 1e-12
    assert _verdict(
        "criterion 6 (closed-form consistency)",
        ok,
        f"worst relative mismatch {worst:.2e}, threshold bits defect {boundary:.2e}",
    )


def test_criterion_7_alpha_monotonicity():
    alphas = np.arange(0.05, 0.951, 0.05)
    model = FadingModel()
    violations = 0
    for trial in range(1000):
        chan = generate_rayleigh(64, model, 1e-3, [7, 0, trial])
        totals = [float(solve_continuous(a, chan, BER_TH).powers.sum()) for a in alphas]
        if not all(x > y for x, y in zip(totals, totals[1:])):
            violations += 1
    ok = violations == 0
    assert _verdict(
        "criterion 7 (alpha monotonicity)",
        ok,
        f"{violations} violations over 1000 realizations x {len(alphas)} weights",
    )


def test_criterion_8_kkt_verification():
    rng = np.random.default_rng(8)
    model = FadingModel()
    worst_res = 0.0
    min_lambda = math.inf
    solutions = 0
    for trial in range(10_000):
        chan = generate_rayleigh(16, model, 0.01, [8, 0, trial])
        alpha = float(rng.uniform(0.1, 0.9))
        sol = solve_continuous(alpha, chan, BER_TH)
        rep = check_kkt(alpha, sol, chan, BER_TH)
        worst_res = max(worst_res, rep.max_abs_residual)
        if rep.lambda_.size:
            min_lambda = min(min_lambda, float(rep.lambda_.min()))
        solutions += 1

    # finite differences vs the analytic gradients away from solutions;
    # halving h must cut the error roughly fourfold
    orders_p, orders_b = [], []
    for _ in range(300):
        alpha = float(rng.uniform(0.1, 0.9))
        b = float(rng.uniform(2.5, 10.0))
        P = float(rng.uniform(0.05, 3.0))
        C = float(rng.uniform(20.0, 500.0))
        lam = _simplified_lambda(alpha, b, C, BER_TH)
        m1 = 2.0**b - 1.0
        decay = math.exp(-1.6 * C * P / m1)
        res_p = alpha - lam * 0.2 * (1.6 * C / m1) * decay
        res_b = -(1.0 - alpha) + lam * 0.2 * math.log(2.0) * (
            1.6 * C * P * 2.0**b / m1**2
        ) * decay
        d1 = finite_difference_stationarity(alpha, b, P, C, BER_TH, 1e-4)
        d2 = finite_difference_stationarity(alpha, b, P, C, BER_TH, 5e-5)
        e1p, e2p = abs(d1[0] - res_p), abs(d2[0] - res_p)
        e1b, e2b = abs(d1[1] - res_b), abs(d2[1] - res_b)
        if e2p > 1e-12:  # keep truncation-dominated samples only
            orders_p.append(math.log2(e1p / e2p))
        if e2b > 1e-12:
            orders_b.append(math.log2(e1b / e2b))
    order_p = float(np.median(orders_p))
    order_b = float(np.median(orders_b))
    ok = (
        worst_res < 1e-9
        and min_lambda >= 0.0
        and order_p >= 1.9
        and order_b >= 1.9
    )
    assert _verdict(
        "criterion 8 (KKT verification)",
        ok,
        f"max residual {worst_res:.2e} over {solutions} solutions, "
        f"min multiplier {min_lambda:.3g}, FD orders "
        f"({order_p:.2f}, {order_b:.2f})",
    )


def test_criterion_9_special_function_accuracy():
    quad_val, _ = integrate.quad(lambda t: np.exp(-t) / t, 1.0, np.inf)
    at_one = exp_integral_neg(1.0)
    quad_err = abs(at_one - (-quad_val))
    literal_err = abs(at_one - (-0.21938393439552))

    mpmath.mp.dps = 30
    z_grid = np.logspace(-6, math.log10(50.0), 400)
    worst_oracle = 0.0
    for z in z_grid:
        want = float(mpmath.ei(-mpmath.mpf(repr(float(z)))))
        got = exp_integral_neg(float(z))
        worst_oracle = max(worst_oracle, abs(got - want) / abs(want))

    from mcbitload.analytic import _e1_lentz, _ei_neg_series

    worst_overlap = 0.0
    for z in np.linspace(0.5, 4.0, 60):
        series = _ei_neg_series(float(z))
        lentz = -_e1_lentz(float(z))
        worst_overlap = max(worst_overlap, abs(series - lentz) / abs(lentz))

    ok = (
        quad_err < 1e-10
        and literal_err < 1e-10
        and worst_oracle < 1e-12
        and worst_overlap < 1e-12
    )
    assert _verdict(
        "criterion 9 (special function accuracy)",
        ok,
        f"Ei(-1) vs quadrature {quad_err:.1e}, vs reference {literal_err:.1e}; "
        f"oracle gap {worst_oracle:.1e} on [1e-6,50], "
        f"series/cf overlap gap {worst_overlap:.1e}",
    )


def test_criterion_10_complexity_behavior(monkeypatch):
    sizes = (128, 512, 2048, 8192)
    cfg = LoadingConfig(alpha0=ALPHA, ber_th=BER_TH)
    model = FadingModel()
    chans = {n: generate_rayleigh(n, model, 0.01, [10, 0, n]) for n in sizes}
    for _ in range(50):
        allocate(chans[128], cfg)  # warm the kernel and caches

    times = {}
    for n in sizes:
        chan = chans[n]
        reps = max(30, 200_000 // n)
        best = math.inf
        for _ in range(9):
            t0 = time.perf_counter()
            for _ in range(reps):
                allocate(chan, cfg)
            best = min(best, (time.perf_counter() - t0) / reps)
        times[n] = best
    logn = np.log2(np.array(sizes, dtype=np.float64))
    logt = np.log2(np.array([times[n] for n in sizes]))
    slope = float(np.polyfit(logn, logt, 1)[0])
    for n in sizes:
        print(f"  N={n}: {times[n] * 1e6:.2f} us")

    # with the budget active, count solver probes: everything after the
    # initial feasibility check must fit the criterion-3 iteration bound
    bound = math.ceil(math.log2((1.0 - ALPHA) / cfg.alpha_tol))
    budget_cfg = LoadingConfig(alpha0=ALPHA, ber_th=BER_TH, p_th=0.1)
    calls = {"count": 0}
    inner = allocator_mod.allocate_unconstrained

    def counting(*args, **kwargs):
        calls["count"] += 1
        return inner(*args, **kwargs)

    monkeypatch.setattr(allocator_mod, "allocate_unconstrained", counting)
    worst_evals = 0
    for trial in range(200):
        chan = generate_rayleigh(N, model, 0.01, [10, 1, trial])
        calls["count"] = 0
        allocate(chan, budget_cfg)
        worst_evals = max(worst_evals, calls["count"] - 1)
    monkeypatch.undo()

    ok = 0.85 <= slope <= 1.15 and worst_evals <= bound
    assert _verdict(
        "criterion 10 (linear complexity)",
        ok,
        f"log-log slope {slope:.3f} in [0.85, 1.15], "
        f"max midpoint evaluations {worst_evals} <= bound {bound}",
    )


def test_figure_3_substitute_proposed_beats_uniform():
    # at matched average power the proposed loading should out-carry the
    # uniform-power baseline on nearly every weak-channel trial
    model = FadingModel()
    trials = 400
    ok = True
    fractions = []
    for pi, db in enumerate((0.0, 2.5, 5.0, 7.5, 10.0)):
        noise = 1.0 / 10.0 ** (db / 10.0)
        chans = [generate_rayleigh(64, model, noise, [3, pi, t]) for t in range(trials)]
        proposed = [allocate(c, LoadingConfig(alpha0=ALPHA, ber_th=BER_TH)) for c in chans]
        budget = float(np.mean([a.total_power for a in proposed]))
        wins = 0
        for chan, prop in zip(chans, proposed):
            uni = uniform_power_bit_loading(chan, budget, BER_TH)
            if prop.total_bits >= uni.total_bits:
                wins += 1
        frac = wins / trials
        fractions.append((db, frac))
        if frac < 0.95:
            ok = False
    detail = ", ".join(f"{db:g} dB: {frac:.1%}" for db, frac in fractions)
    assert _verdict("figure 3 substitute (proposed vs uniform)", ok, detail)


def test_figure_4_substitute_greedy_never_worse_than_equal_bit():
    model = FadingModel()
    worst_excess = -math.inf
    ok = True
    for trial in range(1000):
        chan = generate_rayleigh(64, model, 0.01, [4, 0, trial])
        eq = equal_bit_power_loading(chan, 64 * 4, BER_TH)
        gr = greedy_margin_adaptive(chan, 64 * 4, BER_TH)
        excess = gr.total_power - eq.total_power
        worst_excess = max(worst_excess, excess)
        if gr.total_bits != eq.total_bits or excess > eq.total_power * 1e-12:
            ok = False
    assert _verdict(
        "figure 4 substitute (greedy vs equal-bit)",
        ok,
        f"worst greedy-minus-equal power {worst_excess:.3e} mW over 1000 trials",
    )
