"""Acceptance battery: one test per top-level criterion, stated tolerances.

Each criterion is a separate test so `pytest -v` emits exactly one pass/fail
line per criterion.  The dichotomy fractions asserted in criterion 7 and the
sweep/grid choices in criteria 7, 8, 9 were pinned by pilot runs before this
suite was frozen; simulations here are seeded and deterministic, so the
frozen fractions reproduce exactly unless the generator or scheme drifts.
"""

import math
import time

import numpy as np
import pytest

from spde_lab.coefficients import (
    Bounded,
    CoefficientSpec,
    Constant,
    LogCritical,
    PowerDrift,
    SuperLog,
)
from spde_lab.diagnostics import (
    holder_fit,
    log_sobolev_check,
    lyapunov_value,
    moment_norm_estimate,
    weak_form_residual,
)
from spde_lab.experiment import ExperimentConfig, SineMode, run, sweep
from spde_lab.heat_kernel import (
    DEFAULT_SWEEPS,
    UNIFORM_RATIO_LEMMAS,
    HeatKernel,
)
from spde_lab.noise_field import GridSpec, NoisePath, make_coupled_pair
from spde_lab.solver import simulate_localized


def report(criterion, detail):
    print(f"[criterion {criterion}] {detail}")


def test_criterion_01_kernel_cross_agreement():
    start = time.time()
    kernel = HeatKernel()
    xs = np.arange(0.1, 0.95, 0.1)
    worst = 0.0
    for t in (1e-3, 1e-2, 1e-1, 1.0):
        spectral = kernel.eval_kernel(t, xs[:, None], xs[None, :], form="spectral")
        image = kernel.eval_kernel(t, xs[:, None], xs[None, :], form="image")
        worst = max(worst, float(np.max(np.abs(spectral - image))))
        free = np.exp(-((xs[:, None] - xs[None, :]) ** 2) / (2.0 * t)) / math.sqrt(
            2.0 * math.pi * t
        )
        assert np.all(spectral >= 0.0)
        assert np.all(spectral <= free + kernel.tail_tol)
    elapsed = time.time() - start
    assert worst <= 1e-10
    assert elapsed < 5.0
    report(1, f"cross-form disagreement {worst:.2e} <= 1e-10, "
              f"Gaussian domination holds, {elapsed:.2f}s < 5s")


def test_criterion_02_appendix_battery():
    start = time.time()
    kernel = HeatKernel()
    cache = {}

    def check(lemma, params):
        key = (lemma, tuple(sorted(params.items())))
        if key not in cache:
            cache[key] = kernel.verify_green_bound(lemma, params)
        return cache[key]

    # margin > 0 with the quadrature error inside it, for A1 over the full
    # (w, v) square and A2/A3/A5/A6 over their stated sweeps
    reports = []
    for w in (1.0, 10.0, 100.0):
        for v in (1.0, 10.0, 100.0):
            reports.append(check("A1", {"w": w, "v": v}))
    for lemma in ("A2", "A3", "A5", "A6"):
        for params in DEFAULT_SWEEPS[lemma]:
            reports.append(check(lemma, params))
    for rep in reports:
        assert rep.margin > 0.0, (rep.lemma_id, rep.params, rep.margin)
        assert rep.quadrature_error < abs(rep.margin), (rep.lemma_id, rep.params)

    # the calibrated constants must not drift across their design sweeps
    spread = {}
    for lemma in UNIFORM_RATIO_LEMMAS:
        ratios = [check(lemma, p).lhs / check(lemma, p).rhs_bound
                  for p in DEFAULT_SWEEPS[lemma]]
        spread[lemma] = max(ratios) / min(ratios)
        assert spread[lemma] < 3.0, (lemma, spread[lemma])
    elapsed = time.time() - start
    assert elapsed < 60.0
    report(2, f"{len(reports)} bounds all pass margin > qerr, ratio spreads "
              + ", ".join(f"{k}={v:.2f}" for k, v in spread.items())
              + f", {elapsed:.1f}s < 60s")


def test_criterion_03_log_sobolev_battery():
    start = time.time()
    rng = np.random.default_rng(42)
    xs_closed = np.linspace(0.0, 1.0, 257)
    dx = xs_closed[1] - xs_closed[0]
    checked = 0
    for _ in range(100):
        n_modes = int(rng.integers(1, 21))
        amps = rng.normal(0.0, 2.0, size=n_modes)
        h = np.zeros_like(xs_closed)
        for n, a in enumerate(amps, start=1):
            h += a * np.sin(n * np.pi * xs_closed)
        h[0] = h[-1] = 0.0
        for eps in (0.9, 0.5, 0.1, 0.01):
            rep = log_sobolev_check(h, dx, eps)
            assert rep.margin > -rep.quadrature_error, (n_modes, eps, rep.margin)
            checked += 1
    elapsed = time.time() - start
    assert checked == 400
    assert elapsed < 10.0
    report(3, f"400 mixture/epsilon pairs, zero violations beyond quadrature "
              f"error, {elapsed:.1f}s < 10s")


def test_criterion_04_lyapunov_identity():
    worst = 0.0
    for r in (1.0, 10.0, 1e3, 1e6):
        delta = 1e-3 * r
        phi = lyapunov_value(r)
        deriv = (lyapunov_value(r + delta) - lyapunov_value(r - delta)) / (2 * delta)
        log_plus = max(math.log(r), 1.0) if r > 0 else 1.0
        rel = abs(deriv * (1.0 + r * log_plus) - phi) / phi
        worst = max(worst, rel)
        assert rel <= 1e-6, (r, rel)
    e_err = abs(lyapunov_value(math.e) - (1.0 + math.e))
    assert e_err <= 1e-8
    report(4, f"identity residual {worst:.2e} <= 1e-6, "
              f"value at e off by {e_err:.2e} <= 1e-8")


def test_criterion_05_solver_orders():
    start = time.time()
    coeffs = CoefficientSpec(LogCritical(0.0, 0.0), Constant(0.0))
    errs = []
    for nx in (15, 31, 63):
        grid = GridSpec(nx=nx, dt=2e-6, t_end=0.05)
        u0 = np.sin(np.pi * grid.xs)
        res = simulate_localized(
            u0, coeffs, NoisePath(0, grid), ladder=(10.0,), out_stride=10**6
        )
        want = math.exp(-0.5 * math.pi**2 * 0.05) * u0
        errs.append(float(np.max(np.abs(res.final_field.values - want))))
    spatial = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    for order in spatial:
        assert 1.7 < order < 2.3, spatial

    nx = 255
    dx = 1.0 / (nx + 1)
    lam1 = (4.0 / dx**2) * math.sin(0.5 * math.pi * dx) ** 2
    errs_t = []
    for dt in (2e-3, 1e-3, 5e-4):
        grid = GridSpec(nx=nx, dt=dt, t_end=0.25, relax_dt_gate=True)
        u0 = np.sin(np.pi * grid.xs)
        res = simulate_localized(
            u0, coeffs, NoisePath(0, grid), ladder=(10.0,), out_stride=10**6
        )
        want = math.exp(-0.5 * lam1 * 0.25) * u0
        errs_t.append(float(np.max(np.abs(res.final_field.values - want))))
    temporal = [math.log2(a / b) for a, b in zip(errs_t, errs_t[1:])]
    for order in temporal:
        assert 0.7 < order < 1.3, temporal
    elapsed = time.time() - start
    assert elapsed < 30.0
    report(5, f"spatial orders {['%.2f' % o for o in spatial]} in [1.7,2.3], "
              f"temporal {['%.2f' % o for o in temporal]} in [0.7,1.3], "
              f"{elapsed:.1f}s < 30s")


def test_criterion_06_localization_and_comparison():
    start = time.time()
    # (i) the threshold ladder must not change a single output bit
    coeffs = CoefficientSpec(PowerDrift(2.0), Constant(1.0))
    grid = GridSpec(nx=63, dt=1.0 / 4096, t_end=0.4)
    u0 = 5.0 * np.sin(np.pi * grid.xs)
    for seed in range(20):
        one = simulate_localized(
            u0, coeffs, NoisePath(seed, grid), ladder=(40.0,), blowup_threshold=1e6
        )
        many = simulate_localized(
            u0, coeffs, NoisePath(seed, grid), ladder=(10.0, 20.0, 40.0),
            blowup_threshold=1e6,
        )
        assert np.array_equal(one.series, many.series, equal_nan=True), seed
        assert one.record.blew_up == many.record.blew_up
        assert one.record.tau_hat == many.record.tau_hat

    # (ii) ordered drifts with shared noise stay pointwise ordered
    grid_c = GridSpec(nx=127, dt=1.0 / 32768, t_end=0.0625)
    u0_c = 2.0 * np.sin(np.pi * grid_c.xs)
    drifts = (LogCritical(0.0, 0.5), LogCritical(0.0, 1.0), LogCritical(1.0, 1.0))
    worst_gap = 0.0
    for seed in range(20):
        runs = [
            simulate_localized(
                u0_c,
                CoefficientSpec(b, Constant(1.0)),
                NoisePath(seed, grid_c),
                ladder=(),
                out_stride=16,
                store_fields=True,
            )
            for b in drifts
        ]
        for lo, hi in zip(runs, runs[1:]):
            for (t_lo, f_lo), (t_hi, f_hi) in zip(lo.fields, hi.fields):
                assert t_lo == t_hi
                gap = float(np.max(f_lo - f_hi))
                worst_gap = max(worst_gap, gap)
                assert gap <= 1e-9, (seed, t_lo, gap)
    elapsed = time.time() - start
    assert elapsed < 120.0
    report(6, f"20 paths ladder-bitwise, comparison ordering violated by at "
              f"most {worst_gap:.2e} <= 1e-9, {elapsed:.1f}s < 120s")


def dichotomy_base(drift, t_end, outputs):
    return ExperimentConfig(
        grid=GridSpec(127, 1.0 / 128, t_end, relax_dt_gate=True),
        drift=drift,
        diffusion=Constant(1.0),
        initial_data=SineMode(5.0),
        n_paths=200,
        seed_base=20_000,
        out_stride=8,
        outputs=str(outputs),
    )


def test_criterion_07_dichotomy(tmp_path):
    start = time.time()
    # (a) square drift: blowup dominates and only grows with the horizon
    sw_a = sweep(
        dichotomy_base(PowerDrift(2.0), 8.0, tmp_path / "power_T"),
        "T", [1.0, 2.0, 4.0, 8.0],
    )
    fracs_a = [p.blowup_fraction for p in sw_a.points]
    for frac, pilot in zip(fracs_a, (0.995, 1.0, 1.0, 1.0)):
        assert frac >= 0.5
        assert abs(frac - pilot) <= 0.05, (fracs_a,)
    for lo, hi in zip(fracs_a, fracs_a[1:]):
        assert hi >= lo, fracs_a

    # (b) critical log drift: no path anywhere near the threshold
    agg_b = run(dichotomy_base(LogCritical(0.0, 1.0), 5.0, tmp_path / "logcrit"))
    assert agg_b.ensemble["n_blowup"] == 0, agg_b.ensemble
    assert agg_b.ensemble["sup_max"] < 1e3

    # (c) fraction nondecreasing in the super-log exponent, up to CI overlap
    sw_c = sweep(
        dichotomy_base(SuperLog(0.5, scale=2.0), 5.0, tmp_path / "superlog_eps"),
        "epsilon", [0.25, 0.5, 1.0],
    )
    points_c = list(sw_c.points)
    for frac, pilot in zip((p.blowup_fraction for p in points_c), (0.17, 0.87, 1.0)):
        assert abs(frac - pilot) <= 0.05, [p.blowup_fraction for p in points_c]
    for a, b in zip(points_c, points_c[1:]):
        assert b.blowup_fraction >= a.blowup_fraction or b.ci_low <= a.ci_high, (
            points_c,
        )
    elapsed = time.time() - start
    assert elapsed < 1800.0
    report(7, f"power fractions {fracs_a}, log-critical blowups 0/200, "
              f"super-log fractions {[p.blowup_fraction for p in points_c]}, "
              f"{elapsed:.0f}s < 30min")


def test_criterion_08_regularity_exponents():
    start = time.time()
    grid = GridSpec(63, 1.0 / 4096, 0.625)
    coeffs = CoefficientSpec(LogCritical(0.0, 0.0), Constant(1.0))
    u0 = np.zeros(grid.nx)
    paths = [
        simulate_localized(
            u0, coeffs, NoisePath(30_000 + i, grid), (),
            out_stride=8, snapshot_times=(0.5,),
        )
        for i in range(200)
    ]
    fit_space = holder_fit(paths, "space", k=2.0, t_star=0.5,
                           lag_range=(2.0 / 64, 0.16))
    fit_time = holder_fit(paths, "time", k=2.0, t_star=0.5)
    assert 0.40 <= fit_space.exponent_hat <= 0.55, fit_space
    assert 0.20 <= fit_time.exponent_hat <= 0.30, fit_time
    assert fit_space.r2 >= 0.98 and fit_time.r2 >= 0.98
    elapsed = time.time() - start
    assert elapsed < 600.0
    report(8, f"space {fit_space.exponent_hat:.4f} in [0.40,0.55], "
              f"time {fit_time.exponent_hat:.4f} in [0.20,0.30], "
              f"r2 {fit_space.r2:.4f}/{fit_time.r2:.4f} >= 0.98, "
              f"{elapsed:.0f}s < 10min")


def test_criterion_09_gaussian_moment_shape():
    start = time.time()
    grid = GridSpec(63, 1.0 / 512, 1.0, relax_dt_gate=True)
    coeffs = CoefficientSpec(LogCritical(0.0, 1.0), Bounded("cos", 1.0))
    u0 = np.zeros(grid.nx)
    paths = [
        simulate_localized(
            u0, coeffs, NoisePath(40_000 + i, grid), (),
            out_stride=64, store_fields=True,
        )
        for i in range(2000)
    ]
    ratios = {}
    for k in (2.0, 4.0, 6.0, 8.0):
        est = moment_norm_estimate(paths, beta=0.0, k=k)
        assert est.value > 0.0 and math.isfinite(est.value)
        ratios[k] = est.value / math.sqrt(k)
    fitted_c = max(ratios.values())
    assert fitted_c < 3.0, ratios
    elapsed = time.time() - start
    assert elapsed < 900.0
    report(9, "M_k/sqrt(k) = "
              + ", ".join(f"{k:g}:{v:.3f}" for k, v in ratios.items())
              + f", fitted C = {fitted_c:.3f} < 3, {elapsed:.0f}s < 15min")


def test_criterion_10_weak_form_refinement():
    families = [
        ("log-critical", LogCritical(0.0, 1.0), Constant(1.0)),
        ("super-log", SuperLog(0.5, scale=2.0), Constant(1.0)),
        ("power", PowerDrift(2.0), Bounded("cos", 1.0)),
    ]
    coarse = GridSpec(63, 1.0 / 8192, 0.0625)
    ratios = {}
    for name, drift, diffusion in families:
        coeffs = CoefficientSpec(drift, diffusion)
        agg_noise, fine_noise = make_coupled_pair(77, coarse)
        u0_c = np.sin(np.pi * coarse.xs)
        u0_f = np.sin(np.pi * fine_noise.grid.xs)
        res_c = simulate_localized(u0_c, coeffs, agg_noise, (),
                                   out_stride=1, store_fields=True)
        res_f = simulate_localized(u0_f, coeffs, fine_noise, (),
                                   out_stride=1, store_fields=True)
        ratios[name] = weak_form_residual(res_c, coeffs, agg_noise, phi_mode=1) / \
            weak_form_residual(res_f, coeffs, fine_noise, phi_mode=1)
        assert ratios[name] > 1.5, (name, ratios[name])
    report(10, "residual ratios under (dx,dt) -> (dx/2,dt/4): "
               + ", ".join(f"{k}={v:.2f}" for k, v in ratios.items())
               + " all > 1.5")


def test_criterion_11_secondary_report_smoke(tmp_path):
    # the simulation suite must run without the report package installed,
    # so this criterion skips (rather than fails) when it is absent
    spde_report = pytest.importorskip("spde_report")

    sweep(
        ExperimentConfig(
            grid=GridSpec(31, 1.0 / 32, 2.0, relax_dt_gate=True),
            drift=SuperLog(0.5, scale=2.0),
            diffusion=Constant(1.0),
            initial_data=SineMode(5.0),
            n_paths=30,
            seed_base=50_000,
            out_stride=4,
            outputs=str(tmp_path / "in"),
        ),
        "epsilon", [0.25, 0.5, 1.0],
    )
    from spde_lab.cli import main as lab_main
    # the fit conditions on survival, so it reads the no-blowup sweep point
    sample_dir = tmp_path / "in" / "epsilon=0.25"
    assert lab_main([
        "holder", "--paths", str(sample_dir / "path_*.jsonl"),
        "--direction", "time", "--t-star", "0.5", "--min-paths", "20",
        "--lag-lo", "0.25", "--lag-hi", "1.4",
        "--out", str(tmp_path / "in" / "holder.csv"),
    ]) == 0

    out_dir = tmp_path / "report"
    code = spde_report.render_report(
        in_dir=tmp_path / "in", out_dir=out_dir, fmt="svg"
    )
    assert code == 0
    figures = sorted(out_dir.glob("*.svg"))
    assert len(figures) >= 4
    for fig in figures:
        assert fig.stat().st_size > 0
    index = out_dir / "index.html"
    assert index.exists()
    first = {p.name: p.read_bytes() for p in out_dir.iterdir()}
    assert spde_report.render_report(
        in_dir=tmp_path / "in", out_dir=out_dir, fmt="svg"
    ) == 0
    second = {p.name: p.read_bytes() for p in out_dir.iterdir()}
    assert second == first
    report(11, f"{len(figures)} figures plus index rendered, "
               "re-render content-identical")
