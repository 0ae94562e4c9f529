"""Functionals and estimators quantifying solution behavior.

Everything here works on plain arrays plus grid constants, so the module has
no dependency on the stepper; path-level estimators duck-type the PathResult
objects the solver produces (they only touch .series, .fields, .final_field,
.grid, .out_stride and .record).

Conventions: a field is the vector of interior node values, the boundary is
an implicit pair of zeros, integrals use midpoint quadrature dx * sum, and
discrete H1 uses forward differences across all nx+1 gaps including both
boundary cells, which makes summation by parts exact for the 3-point
Laplacian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .coefficients import log_plus
from .heat_kernel import BoundReport

E = math.e

__all__ = [
    "NormSet",
    "norms",
    "first_mode_functional",
    "lyapunov_value",
    "log_sobolev_check",
    "WeakFormInconclusive",
    "weak_form_residual",
    "MomentEstimate",
    "moment_norm_estimate",
    "HolderFit",
    "holder_fit",
]


class NormSet(NamedTuple):
    sup: float
    l2: float
    h1: float
    l2logl: float
    finite: bool


def norms(values, dx: float) -> NormSet:
    """(sup, L2, H1, L2logL) of an interior field; flagged if non-finite.

    l2logl is the functional integral |h|^2 log_plus|h| itself, not a square
    root, since that is the shape the entropy inequality uses.
    """
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return NormSet(math.inf, math.inf, math.inf, math.inf, False)
    av = np.abs(v)
    sup = float(av.max(initial=0.0))
    sq = np.square(v)
    l2 = math.sqrt(dx * float(sq.sum()))
    l2logl = dx * float((sq * log_plus(av)).sum())
    gaps = np.diff(v, prepend=0.0, append=0.0)
    h1 = math.sqrt(float(np.square(gaps).sum()) / dx)
    return NormSet(sup, l2, h1, l2logl, True)


def first_mode_functional(values, dx: float) -> float:
    """Midpoint quadrature of u against sin(pi x), the lowest Dirichlet mode."""
    v = np.asarray(values, dtype=float)
    xs = np.arange(1, v.size + 1) * dx
    return dx * float(v @ np.sin(math.pi * xs))


def _lyapunov_integrand(z):
    return 1.0 / (1.0 + z * math.log(max(z, E)))


def lyapunov_value(r: float) -> float:
    """exp of the integral of dz / (1 + z log_plus z) from 0 to r.

    Closed form 1 + r up to r = e (the integrand is 1/(1+z) there); adaptive
    quadrature beyond.  Strictly increasing, and satisfies
    phi'(r) * (1 + r log_plus r) = phi(r).
    """
    if not (math.isfinite(r) and r >= 0.0):
        raise ValueError("r must be finite and nonnegative")
    if r <= E:
        return 1.0 + r
    tail, err = integrate.quad(
        _lyapunov_integrand, E, r, limit=400, epsabs=1e-13, epsrel=1e-12
    )
    return (1.0 + E) * math.exp(tail)


def log_sobolev_check(h, dx: float, epsilon: float) -> BoundReport:
    """Entropy inequality check for a grid function vanishing at the endpoints.

    lhs = integral |h|^2 log_plus|h|;
    rhs = eps ||h'||^2 + K_eps ||h||^2 + ||h||^2 log_plus(||h||^2) + 1/e,
    K_eps = 1 + (1/4) log(1/eps).  The quadrature error is estimated by
    re-evaluating both sides on the 2x-coarsened sample when the grid allows.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    arr = np.asarray(h, dtype=float)
    closed = None
    if arr.size >= 3 and arr[0] == 0.0 and arr[-1] == 0.0:
        closed = arr
        arr = arr[1:-1]

    def both_sides(interior, step):
        ns = norms(interior, step)
        lhs = ns.l2logl
        l2sq = ns.l2**2
        k_eps = 1.0 + 0.25 * math.log(1.0 / epsilon)
        rhs = (
            epsilon * ns.h1**2
            + k_eps * l2sq
            + l2sq * float(log_plus(l2sq))
            + 1.0 / E
        )
        return lhs, rhs

    lhs, rhs = both_sides(arr, dx)
    if closed is not None and (closed.size - 1) % 2 == 0:
        lhs_c, rhs_c = both_sides(closed[::2][1:-1], 2.0 * dx)
        qerr = (abs(lhs - lhs_c) + abs(rhs - rhs_c)) * (2.0 / 3.0)
    else:
        ns = norms(arr, dx)
        qerr = 8.0 * dx * dx * (ns.h1**2 + ns.l2**2 + 1.0)
    return BoundReport(
        lemma_id="logSobolev",
        params={"epsilon": epsilon},
        lhs=lhs,
        rhs_bound=rhs,
        margin=rhs - lhs,
        quadrature_error=qerr,
    )


class WeakFormInconclusive(RuntimeError):
    pass


def weak_form_residual(result, coeffs, noise, phi_mode: int) -> float:
    """|<u(T),phi> - <u0,phi> - (1/2) int <u,phi''> - int <b(u),phi> - noise|.

    phi(x) = sin(phi_mode * pi * x), so phi'' = -(phi_mode*pi)^2 phi exactly.
    The Laplacian term uses the right endpoint and the drift/noise terms the
    left endpoint of each step, matching the stepper, so the residual
    isolates the spatial discretization defect.  Requires the path to carry
    full fields at every step.
    """
    fields = getattr(result, "fields", None)
    if fields is None or getattr(result, "out_stride", None) != 1:
        raise WeakFormInconclusive(
            "stride too coarse for the time quadrature; "
            "rerun with out_stride=1 and store_fields=True"
        )
    grid = result.grid
    dt, dx = grid.dt, grid.dx
    xs = grid.xs
    phi = np.sin(phi_mode * math.pi * xs)
    phi_pp = -((phi_mode * math.pi) ** 2) * phi
    us = [f[1] for f in fields]
    total_mass = dx * float((us[-1] - us[0]) @ phi)
    lap = 0.0
    drift = 0.0
    stoch = 0.0
    b, sig = coeffs.drift, coeffs.diffusion
    for m in range(len(us) - 1):
        lap += 0.5 * dt * dx * float(us[m + 1] @ phi_pp)
        drift += dt * dx * float(np.asarray(b(us[m])) @ phi)
        w = noise.sample_increments(m)
        stoch += float((np.asarray(sig(us[m])) * w) @ phi)
    return abs(total_mass - lap - drift - stoch)


@dataclass(frozen=True)
class MomentEstimate:
    beta: float
    k: float
    value: float
    mc_stderr: float
    n_paths: int
    qualitative: bool = False


def _stacked_fields(results):
    times = [t for t, _ in results[0].fields]
    data = np.empty((len(results), len(times), results[0].grid.nx))
    for p, res in enumerate(results):
        if len(res.fields) != len(times):
            raise ValueError("paths carry different snapshot sets")
        for s, (t, vals) in enumerate(res.fields):
            if abs(t - times[s]) > 1e-9:
                raise ValueError("paths carry different snapshot times")
            data[p, s] = vals
    return np.asarray(times), data


def moment_norm_estimate(
    results, beta: float, k: float, n_boot: int = 200, boot_seed: int = 0
) -> MomentEstimate:
    """sup over sampled (t, x) of e^{-beta t} (E|u(t,x)|^k)^{1/k}.

    Needs stored fields on every path; the standard error comes from a
    path-level bootstrap.  Orders beyond k = 12 are computed but flagged
    qualitative: empirical tails are too thin to certify them.
    """
    if len(results) < 30:
        raise ValueError("need at least 30 paths")
    if k < 2.0 or beta < 0.0:
        raise ValueError("need k >= 2 and beta >= 0")
    if any(r.fields is None for r in results):
        raise ValueError("paths must carry stored fields")
    times, data = _stacked_fields(results)
    n = data.shape[0]
    pk = np.abs(data.reshape(n, -1)) ** k
    damp = np.repeat(np.exp(-beta * times), data.shape[2])

    def statistic(rows):
        mom = rows.mean(axis=0)
        return float(np.max(damp * mom ** (1.0 / k)))

    value = statistic(pk)
    rng = np.random.default_rng(boot_seed)
    boots = np.empty(n_boot)
    for bi in range(n_boot):
        boots[bi] = statistic(pk[rng.integers(0, n, n)])
    return MomentEstimate(
        beta=beta,
        k=k,
        value=value,
        mc_stderr=float(boots.std(ddof=1)),
        n_paths=n,
        qualitative=k > 12.0,
    )


@dataclass(frozen=True)
class HolderFit:
    direction: str
    k: float
    exponent_hat: float
    intercept: float
    r2: float
    lag_range: tuple
    mu_theory: float
    eta_theory: float
    n_lags: int
    lags: tuple = ()
    moments: tuple = ()
    stderr: float = math.nan


def _log_log_fit(lags, moments, k):
    x = np.log(lags)
    y = np.log(moments)
    (slope, intercept), cov = np.polyfit(x, y, 1, cov=True)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    # slope error propagates through the 1/k scaling of the exponent
    stderr = float(np.sqrt(cov[0, 0])) / k
    return float(slope) / k, float(intercept), r2, stderr


def _log_spaced_ints(lo, hi, count=12):
    if hi < lo:
        return np.array([], dtype=int)
    vals = np.unique(
        np.round(np.exp(np.linspace(math.log(lo), math.log(hi), count))).astype(int)
    )
    return vals[(vals >= lo) & (vals <= hi)]

def _snapshot_at(result, t_star):
    for store in (getattr(result, "snapshots", None), result.fields):
        if store:
            for t, vals in store:
                if t >= t_star - 1e-9:
                    return vals
    if result.final_field is not None and result.final_field.time >= t_star - 1e-9:
        return result.final_field.values
    raise ValueError(f"no stored field at or after t = {t_star}")


def holder_fit(
    results,
    direction: str,
    k: float = 2.0,
    lag_range=None,
    t_star: float = 0.5,
    alpha: float = 1.0,
    min_paths: int = 100,
) -> HolderFit:
    """Regression estimate of the pathwise regularity exponent.

    Space: increments of the field stored at the reference time t_star, lags
    between 2*dx and 0.1.  Time: increments of the midpoint series restricted
    to t >= t_star, lags between 2 output strides and 0.1.  The slope of
    log E|increment|^k against log lag, divided by k, estimates the exponent;
    alpha is the regularity of the initial data and only feeds the theory
    columns min(1/4, alpha/2) and min(alpha, 1/2).
    """
    if direction not in ("space", "time"):
        raise ValueError("direction must be 'space' or 'time'")
    # blown-up paths stop early, so their truncated series would bias the
    # increment moments; the fit conditions on survival to the horizon
    results = [r for r in results if not r.record.blew_up]
    if len(results) < min_paths:
        raise ValueError(
            f"need at least {min_paths} paths surviving to the horizon"
        )
    grid = results[0].grid
    if direction == "space":
        step = grid.dx
        sample = np.stack([_snapshot_at(r, t_star) for r in results])
    else:
        step = grid.dt * results[0].out_stride
        ts = results[0].series[:, 0]
        keep = ts >= t_star - 1e-9
        if keep.sum() < 8:
            raise ValueError("series too short past the reference time")
        sample = np.stack([r.series[keep, 5] for r in results])
    lo, hi = lag_range if lag_range is not None else (2.0 * step, 0.1)
    js = _log_spaced_ints(max(2, int(round(lo / step))), int(math.floor(hi / step)))
    if js.size < 6:
        raise ValueError("lag range admits fewer than 6 lags")
    lags = js * step
    moments = np.empty(lags.size)
    for i, j in enumerate(js):
        inc = sample[:, j:] - sample[:, :-j]
        moments[i] = float(np.mean(np.abs(inc) ** k))
    exponent, intercept, r2, stderr = _log_log_fit(lags, moments, k)
    return HolderFit(
        direction=direction,
        k=k,
        exponent_hat=exponent,
        intercept=intercept,
        r2=r2,
        lag_range=(float(lags.min()), float(lags.max())),
        mu_theory=min(0.25, alpha / 2.0),
        eta_theory=min(alpha, 0.5),
        n_lags=int(js.size),
        lags=tuple(float(v) for v in lags),
        moments=tuple(float(v) for v in moments),
        stderr=stderr,
    )
