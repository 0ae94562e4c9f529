"""Norm functionals, the entropy inequality, and moment/regularity estimators."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spde_lab.coefficients import CoefficientSpec, Constant, LogCritical
from spde_lab.diagnostics import (
    WeakFormInconclusive,
    first_mode_functional,
    holder_fit,
    log_sobolev_check,
    lyapunov_value,
    moment_norm_estimate,
    norms,
    weak_form_residual,
)
from spde_lab.noise_field import GridSpec, NoisePath
from spde_lab.solver import simulate_localized

ZERO_DRIFT = LogCritical(0.0, 0.0)
NO_NOISE = Constant(0.0)


def interior_xs(nx):
    return np.arange(1, nx + 1) / (nx + 1)


def test_norms_sine_closed_forms():
    nx = 511
    dx = 1.0 / (nx + 1)
    v = np.sin(math.pi * interior_xs(nx))
    ns = norms(v, dx)
    assert ns.finite
    assert abs(ns.sup - 1.0) < 1e-12
    assert abs(ns.l2 - math.sqrt(0.5)) < 1e-5
    assert abs(ns.h1 - math.pi / math.sqrt(2.0)) < 1e-2
    # |v| <= 1 everywhere, so log_plus is identically 1 and the entropy
    # functional collapses to the squared L2 norm
    assert abs(ns.l2logl - ns.l2**2) < 1e-14


def test_norms_zero_field():
    ns = norms(np.zeros(64), 1.0 / 65)
    assert ns == (0.0, 0.0, 0.0, 0.0, True)


def test_norms_flag_nonfinite():
    v = np.ones(16)
    v[3] = np.nan
    ns = norms(v, 1.0 / 17)
    assert not ns.finite
    assert math.isinf(ns.sup) and math.isinf(ns.l2)


def test_norms_summation_by_parts_is_exact():
    rng = np.random.default_rng(11)
    nx = 100
    dx = 1.0 / (nx + 1)
    v = rng.normal(size=nx)
    closed = np.concatenate([[0.0], v, [0.0]])
    lap = (closed[2:] - 2.0 * closed[1:-1] + closed[:-2]) / dx**2
    ibp = -dx * float(v @ lap)
    assert abs(norms(v, dx).h1 ** 2 - ibp) < 1e-9 * max(1.0, abs(ibp))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=64))
def test_entropy_functional_dominates_l2_square(vals):
    v = np.asarray(vals)
    dx = 1.0 / (v.size + 1)
    ns = norms(v, dx)
    assert ns.l2logl >= ns.l2**2 - 1e-12


def test_first_mode_closed_forms():
    nx = 511
    dx = 1.0 / (nx + 1)
    xs = interior_xs(nx)
    assert abs(first_mode_functional(np.sin(math.pi * xs), dx) - 0.5) < 1e-5
    assert abs(first_mode_functional(np.sin(2 * math.pi * xs), dx)) < 1e-5
    a = first_mode_functional(np.sin(math.pi * xs) + np.sin(2 * math.pi * xs), dx)
    assert abs(a - 0.5) < 1e-5


def test_lyapunov_closed_form_region():
    assert lyapunov_value(0.0) == 1.0
    assert abs(lyapunov_value(math.e) - (1.0 + math.e)) < 1e-8
    assert abs(lyapunov_value(1.0) - 2.0) < 1e-12
    for bad in (-1.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            lyapunov_value(bad)


def test_lyapunov_derivative_identity():
    # phi'(r) (1 + r log_plus r) = phi(r), checked by centered differences
    for r in (1.0, 10.0, 1e3, 1e6):
        delta = 1e-3 * max(r, 1.0)
        fd = (lyapunov_value(r + delta) - lyapunov_value(r - delta)) / (2.0 * delta)
        lp = math.log(max(r, math.e))
        rel = abs(fd * (1.0 + r * lp) / lyapunov_value(r) - 1.0)
        assert rel < 1e-6


def test_lyapunov_strictly_increasing():
    rs = np.concatenate([[0.0], np.logspace(-3, 6, 40)])
    vals = [lyapunov_value(r) for r in rs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def closed_sine_mixture(nx, amps):
    xs = np.linspace(0.0, 1.0, nx + 2)
    h = np.zeros(nx + 2)
    for j, a in enumerate(amps, start=1):
        h += a * np.sin(j * math.pi * xs)
    h[0] = 0.0
    h[-1] = 0.0
    return h


def test_log_sobolev_zero_function():
    rep = log_sobolev_check(np.zeros(513), 1.0 / 512, epsilon=0.5)
    assert rep.lhs == 0.0
    assert abs(rep.margin - 1.0 / math.e) < 1e-12
    assert rep.verdict == "pass"


def test_log_sobolev_single_mode_example():
    h = closed_sine_mixture(511, [10.0])
    rep = log_sobolev_check(h, 1.0 / 512, epsilon=0.1)
    assert rep.margin > 0.0
    assert rep.quadrature_error < rep.margin
    assert rep.verdict == "pass"


def test_log_sobolev_battery_of_mixtures():
    rng = np.random.default_rng(42)
    nx = 511
    dx = 1.0 / 512
    for _ in range(100):
        n_modes = int(rng.integers(1, 21))
        amps = rng.normal(0.0, 2.0, n_modes)
        h = closed_sine_mixture(nx, amps)
        for eps in (0.9, 0.5, 0.1, 0.01):
            rep = log_sobolev_check(h, dx, epsilon=eps)
            assert rep.margin > -rep.quadrature_error
            assert rep.margin > 0.0


def test_log_sobolev_epsilon_domain():
    for eps in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            log_sobolev_check(np.zeros(65), 1.0 / 64, epsilon=eps)


def _heat_path(nx, dt, t_end, store=True, stride=1, seed=0, sigma=0.0, amp=1.0):
    grid = GridSpec(nx=nx, dt=dt, t_end=t_end, relax_dt_gate=True)
    coeffs = CoefficientSpec(ZERO_DRIFT, Constant(sigma))
    u0 = amp * np.sin(math.pi * grid.xs)
    res = simulate_localized(
        u0,
        coeffs,
        NoisePath(seed, grid),
        ladder=(),
        out_stride=stride,
        store_fields=store,
    )
    return grid, coeffs, res


def test_weak_form_residual_zero_path():
    grid = GridSpec(nx=63, dt=1.0 / 1024, t_end=0.05, relax_dt_gate=True)
    coeffs = CoefficientSpec(ZERO_DRIFT, NO_NOISE)
    res = simulate_localized(
        np.zeros(grid.nx), coeffs, NoisePath(0, grid), ladder=(), store_fields=True
    )
    assert weak_form_residual(res, coeffs, NoisePath(0, grid), phi_mode=1) == 0.0


def test_weak_form_residual_heat_flow_small():
    grid, coeffs, res = _heat_path(nx=255, dt=1e-4, t_end=0.25)
    r = weak_form_residual(res, coeffs, NoisePath(0, grid), phi_mode=1)
    assert r < 1e-3


def test_weak_form_requires_every_step():
    grid, coeffs, res = _heat_path(nx=63, dt=1e-3, t_end=0.05, stride=2)
    with pytest.raises(WeakFormInconclusive):
        weak_form_residual(res, coeffs, NoisePath(0, grid), phi_mode=1)
    grid2, coeffs2, res2 = _heat_path(nx=63, dt=1e-3, t_end=0.05, store=False)
    with pytest.raises(WeakFormInconclusive):
        weak_form_residual(res2, coeffs2, NoisePath(0, grid2), phi_mode=1)


def test_weak_form_residual_shrinks_under_refinement():
    drift = LogCritical(0.0, 1.0)
    rs = {}
    for nx, dt in ((63, 1.0 / 4096), (127, 1.0 / 16384)):
        grid = GridSpec(nx=nx, dt=dt, t_end=0.125)
        coeffs = CoefficientSpec(drift, NO_NOISE)
        u0 = 2.0 * np.sin(math.pi * grid.xs)
        res = simulate_localized(
            u0, coeffs, NoisePath(0, grid), ladder=(), store_fields=True
        )
        rs[nx] = weak_form_residual(res, coeffs, NoisePath(0, grid), phi_mode=1)
    assert rs[63] / rs[127] > 1.5


def test_moment_estimate_deterministic_is_exact():
    grid, coeffs, res = _heat_path(nx=63, dt=1e-3, t_end=0.064, stride=8, amp=3.0)
    ensemble = [res] * 32
    est = moment_norm_estimate(ensemble, beta=0.0, k=2.0)
    want = max(float(np.abs(u).max()) for _, u in res.fields)
    assert abs(est.value - want) < 1e-12
    assert est.mc_stderr == 0.0
    assert est.n_paths == 32
    assert not est.qualitative
    est_b = moment_norm_estimate(ensemble, beta=0.7, k=2.0)
    want_b = max(
        math.exp(-0.7 * t) * float(np.abs(u).max()) for t, u in res.fields
    )
    assert abs(est_b.value - want_b) < 1e-12
    assert est_b.value <= est.value


def test_moment_estimate_validates_inputs():
    grid, coeffs, res = _heat_path(nx=31, dt=1e-3, t_end=0.02, stride=4)
    with pytest.raises(ValueError):
        moment_norm_estimate([res] * 29, beta=0.0, k=2.0)
    with pytest.raises(ValueError):
        moment_norm_estimate([res] * 30, beta=0.0, k=1.0)
    with pytest.raises(ValueError):
        moment_norm_estimate([res] * 30, beta=-1.0, k=2.0)
    est = moment_norm_estimate([res] * 30, beta=0.0, k=14.0)
    assert est.qualitative


def test_moment_estimate_matches_additive_noise_series():
    # u0 = 0, b = 0, sigma = 1: E u(t,x)^2 has an explicit mode expansion
    nx, dt, t_end = 31, 1.0 / 1024, 0.5
    grid = GridSpec(nx=nx, dt=dt, t_end=t_end)
    coeffs = CoefficientSpec(ZERO_DRIFT, Constant(1.0))
    ensemble = []
    for seed in range(400):
        ensemble.append(
            simulate_localized(
                np.zeros(nx),
                coeffs,
                NoisePath(seed, grid),
                ladder=(),
                out_stride=512,
                store_fields=True,
            )
        )
    est = moment_norm_estimate(ensemble, beta=0.0, k=2.0)
    xs = grid.xs
    var = np.zeros(nx)
    for n in range(1, nx + 1):
        lam = (n * math.pi) ** 2
        var += 2.0 * np.sin(n * math.pi * xs) ** 2 * (1.0 - math.exp(-lam * t_end)) / lam
    theory = math.sqrt(float(var.max()))
    assert abs(est.value - theory) / theory < 0.2
    assert est.mc_stderr > 0.0


def test_holder_fit_smooth_field_has_unit_exponent():
    grid = GridSpec(nx=255, dt=1e-4, t_end=1.0, relax_dt_gate=True)
    coeffs = CoefficientSpec(ZERO_DRIFT, NO_NOISE)
    res = simulate_localized(
        2.0 * np.sin(math.pi * grid.xs),
        coeffs,
        NoisePath(0, grid),
        ladder=(),
        out_stride=20,
        snapshot_times=(0.5,),
    )
    fit_x = holder_fit([res], "space", k=2.0, min_paths=1)
    assert 0.9 < fit_x.exponent_hat < 1.1
    assert fit_x.mu_theory == 0.25
    assert fit_x.eta_theory == 0.5
    fit_t = holder_fit([res], "time", k=2.0, min_paths=1, lag_range=(4e-3, 0.03))
    assert 0.85 < fit_t.exponent_hat < 1.1


def test_holder_fit_additive_noise_sanity():
    nx, dt, t_end = 63, 1.0 / 4096, 0.625
    grid = GridSpec(nx=nx, dt=dt, t_end=t_end)
    coeffs = CoefficientSpec(ZERO_DRIFT, Constant(1.0))
    ensemble = []
    for seed in range(120):
        ensemble.append(
            simulate_localized(
                np.zeros(nx),
                coeffs,
                NoisePath(seed, grid),
                ladder=(),
                out_stride=32,
                snapshot_times=(0.5,),
            )
        )
    fit_x = holder_fit(ensemble, "space", k=2.0, lag_range=(2.0 / 64, 0.16))
    assert 0.35 < fit_x.exponent_hat < 0.60
    fit_t = holder_fit(ensemble, "time", k=2.0)
    assert 0.15 < fit_t.exponent_hat < 0.35


def test_holder_fit_validations():
    grid, coeffs, res = _heat_path(nx=63, dt=1e-3, t_end=1.0, stride=50)
    with pytest.raises(ValueError):
        holder_fit([res], "sideways", min_paths=1)
    with pytest.raises(ValueError):
        holder_fit([res] * 3, "space", min_paths=10)
    with pytest.raises(ValueError):
        holder_fit([res], "space", min_paths=1, lag_range=(2.0 / 64, 3.0 / 64))
