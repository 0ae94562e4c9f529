"""Time integration of the localized dynamics, with blowup detection.

The scheme is semi-implicit: implicit 3-point Laplacian, explicit drift and
noise,

    (I - (dt/2) Lap_h) u^{m+1} = u^m + dt b(u^m) + sigma(u^m) W_m / dx,

solved per step by diagonalizing Lap_h with the type-1 discrete sine
transform.  Paths are stepped one at a time; batching across paths is left to
process-level parallelism so that a path's arithmetic never depends on which
ensemble it runs in.

Localization: the dynamics at ladder level N uses both coefficients clamped
to [-N, N], and the level is promoted as soon as sup|u| crosses N, before the
next drift evaluation.  Because clamping is the identity below its level,
trajectories are bitwise independent of the ladder until they leave its top
level, which is the discrete form of the consistency property the stopping
time construction relies on.

Near blowup (sup above 1e3) the step is subdivided by halving dt once per
decade of growth, with the coarse increment split into conditionally correct
pieces using the noise path's bridge stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .coefficients import CoefficientSpec, Constant, truncate
from .diagnostics import first_mode_functional, norms
from .noise_field import GridSpec

SERIES_COLUMNS = ("t", "sup_norm", "l2_norm", "h1_norm", "first_mode", "mid_value")

DEFAULT_BLOWUP_THRESHOLD = 1e6
ADAPT_SUP = 1e3
MAX_HALVINGS = 10

__all__ = [
    "SERIES_COLUMNS",
    "DEFAULT_BLOWUP_THRESHOLD",
    "Field",
    "BlowupRecord",
    "PathResult",
    "Stepper",
    "step",
    "simulate_localized",
    "picard_solve",
    "PicardDivergenceError",
    "detect_blowup",
]


@dataclass
class Field:
    """Interior node values at one time; the boundary is implicitly zero."""

    values: np.ndarray
    time: float

    def closed(self) -> np.ndarray:
        """Values on the closed grid including the zero endpoints."""
        return np.concatenate([[0.0], np.asarray(self.values, float), [0.0]])


@lru_cache(maxsize=64)
def _eigenvalues(nx: int) -> np.ndarray:
    # eigenvalues of -Lap_h under the Dirichlet closure
    dx = 1.0 / (nx + 1)
    k = np.arange(1, nx + 1)
    return (4.0 / (dx * dx)) * np.sin(0.5 * math.pi * k * dx) ** 2


class Stepper:
    """One semi-implicit step on a fixed grid; drift and noise are explicit."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self._lam = _eigenvalues(grid.nx)
        self._norm = 1.0 / (2.0 * (grid.nx + 1))
        self._inv_dx = 1.0 / grid.dx
        self._denom: dict[float, np.ndarray] = {}

    def denom(self, dt: float) -> np.ndarray:
        d = self._denom.get(dt)
        if d is None:
            d = 1.0 + (0.5 * dt) * self._lam
            self._denom[dt] = d
        return d

    def advance(self, values, w, dt, drift, sigma) -> np.ndarray:
        # overflow is a terminal state handled by the caller, not an error
        with np.errstate(over="ignore", invalid="ignore"):
            rhs = (
                values
                + dt * np.asarray(drift(values))
                + np.asarray(sigma(values)) * (w * self._inv_dx)
            )
            spec = sfft.dst(rhs, type=1)
            spec /= self.denom(dt)
            return sfft.dst(spec, type=1) * self._norm

    def smooth(self, values, dt) -> np.ndarray:
        """Pure diffusion update: drop drift and noise."""
        spec = sfft.dst(np.asarray(values, float), type=1)
        spec /= self.denom(dt)
        return sfft.dst(spec, type=1) * self._norm


@lru_cache(maxsize=64)
def _stepper_for(grid: GridSpec) -> Stepper:
    return Stepper(grid)


def _split_coeffs(coeffs):
    if isinstance(coeffs, CoefficientSpec):
        return coeffs.drift, coeffs.diffusion
    if callable(coeffs):
        # a bare (possibly truncated) drift, with no noise term
        return coeffs, Constant(0.0)
    raise TypeError("coeffs must be a CoefficientSpec or a drift callable")


def step(field: Field, coeffs, noise, m: int) -> Field:
    """Advance one step; never raises on overflow, non-finites flow through."""
    grid = noise.grid
    t_expect = m * grid.dt
    if abs(field.time - t_expect) > 1e-9 * max(1.0, abs(t_expect)):
        raise ValueError(f"field time {field.time} does not match step {m}")
    drift, sigma = _split_coeffs(coeffs)
    stepper = _stepper_for(grid)
    w = noise.sample_increments(m)
    vals = stepper.advance(np.asarray(field.values, float), w, grid.dt, drift, sigma)
    return Field(vals, (m + 1) * grid.dt)


@dataclass(frozen=True)
class BlowupRecord:
    blew_up: bool
    tau_hat: float
    threshold_ladder: tuple
    terminal_sup: float


@dataclass
class PathResult:
    record: BlowupRecord
    series: np.ndarray
    final_field: Field | None
    config_hash: str
    seed: int
    grid: GridSpec
    out_stride: int
    fields: list | None = None
    snapshots: list | None = None


def _series_row(t, u, dx, mid):
    ns = norms(u, dx)
    if not ns.finite:
        return (t, math.inf, math.nan, math.nan, math.nan, math.nan)
    return (t, ns.sup, ns.l2, ns.h1, first_mode_functional(u, dx), float(u[mid]))


def detect_blowup(series, threshold: float, ladder=()) -> BlowupRecord:
    """First sup-norm crossing, linearly interpolated between output rows.

    Non-finite rows count as +inf and place the crossing at their own time.
    Ladder crossings must come out nondecreasing in the level.
    """
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("series is empty")
    ts = arr[:, 0]
    sups = arr[:, 1].copy()
    sups[~np.isfinite(sups)] = math.inf

    def crossing(level):
        hits = np.nonzero(sups >= level)[0]
        if hits.size == 0:
            return None
        j = int(hits[0])
        if j == 0:
            return float(ts[0])
        s0, s1 = sups[j - 1], sups[j]
        if math.isinf(s1):
            return float(ts[j])
        return float(ts[j - 1] + (ts[j] - ts[j - 1]) * (level - s0) / (s1 - s0))

    pairs = []
    prev = -math.inf
    for level in ladder:
        c = crossing(float(level))
        if c is None:
            break
        if c < prev - 1e-12:
            raise ValueError("ladder crossings are out of order")
        pairs.append((float(level), c))
        prev = c
    tau = crossing(float(threshold))
    return BlowupRecord(
        blew_up=tau is not None,
        tau_hat=tau if tau is not None else math.inf,
        threshold_ladder=tuple(pairs),
        terminal_sup=float(sups.max()),
    )


def simulate_localized(
    u0,
    coeffs: CoefficientSpec,
    noise,
    ladder,
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
    t_end: float | None = None,
    out_stride: int = 1,
    store_fields: bool = False,
    snapshot_times=(),
    config_hash: str = "",
) -> PathResult:
    """Run one path of the localized dynamics to t_end or blowup."""
    grid = noise.grid
    if isinstance(u0, Field):
        if u0.time != 0.0:
            raise ValueError("initial field must start at time 0")
        u = np.array(u0.values, dtype=float)
    else:
        u = np.array(u0, dtype=float)
    if u.shape != (grid.nx,):
        raise ValueError("u0 must be sampled on the interior grid")
    if not np.all(np.isfinite(u)):
        raise ValueError("u0 must be finite")
    ladder = tuple(float(n) for n in ladder)
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be strictly increasing")
    sup = float(np.abs(u).max())
    if ladder and ladder[0] <= sup:
        raise ValueError("ladder must start above sup|u0|")
    if t_end is None:
        t_end = grid.t_end
    if t_end > grid.t_end * (1.0 + 1e-12):
        raise ValueError("t_end exceeds the noise horizon")
    if out_stride < 1:
        raise ValueError("out_stride must be >= 1")

    noise.reset_bridge()
    stepper = _stepper_for(grid)
    dt, dx, nx = grid.dt, grid.dx, grid.nx
    mid = (nx - 1) // 2
    total_steps = min(grid.steps, int(math.ceil(t_end / dt - 1e-9)))

    base = _split_coeffs(coeffs)
    pairs = [(truncate(base[0], n), truncate(base[1], n)) for n in ladder]
    pairs.append(base)

    level = 0
    promotions = []
    rows = [_series_row(0.0, u, dx, mid)]
    fields = [(0.0, u.copy())] if store_fields else None
    snaps = []
    snap_queue = sorted(float(s) for s in snapshot_times)
    while snap_queue and snap_queue[0] <= 1e-12:
        snaps.append((0.0, u.copy()))
        snap_queue.pop(0)

    blew = False
    t = 0.0
    m = 0
    while m < total_steps:
        sup = float(np.abs(u).max())
        while level < len(ladder) and sup > ladder[level]:
            promotions.append((ladder[level], t))
            level += 1
        drift, sigma = pairs[level]
        halvings = 0
        if sup > ADAPT_SUP:
            halvings = min(MAX_HALVINGS, int(math.floor(math.log10(sup))) - 2)
        w = noise.sample_increments(m)
        if halvings == 0:
            u = stepper.advance(u, w, dt, drift, sigma)
            t = (m + 1) * dt
            if not np.isfinite(u).all() or float(np.abs(u).max()) >= blowup_threshold:
                blew = True
        else:
            nsub = 1 << halvings
            dt_loc = dt / nsub
            z = noise.bridge_normals((nsub, nx))
            parts = w / nsub + math.sqrt(dt_loc * dx) * (z - z.mean(axis=0))
            for j in range(nsub):
                u = stepper.advance(u, parts[j], dt_loc, drift, sigma)
                t = m * dt + (j + 1) * dt_loc
                if not np.isfinite(u).all():
                    blew = True
                    break
                sup = float(np.abs(u).max())
                if sup >= blowup_threshold:
                    blew = True
                    break
                while level < len(ladder) and sup > ladder[level]:
                    promotions.append((ladder[level], t))
                    level += 1
                drift, sigma = pairs[level]
            if not blew:
                # realign after the substep sum to keep the lattice exact
                t = (m + 1) * dt
        m += 1
        if blew:
            rows.append(_series_row(t, u, dx, mid))
            break
        if m % out_stride == 0:
            rows.append(_series_row(t, u, dx, mid))
            if store_fields:
                fields.append((t, u.copy()))
        while snap_queue and t >= snap_queue[0] - 1e-12:
            snaps.append((t, u.copy()))
            snap_queue.pop(0)

    if not blew and rows[-1][0] < t - 1e-12:
        rows.append(_series_row(t, u, dx, mid))

    series = np.asarray(rows, dtype=float)
    detected = detect_blowup(series, blowup_threshold)
    record = BlowupRecord(
        blew_up=detected.blew_up,
        tau_hat=detected.tau_hat,
        threshold_ladder=tuple(promotions),
        terminal_sup=detected.terminal_sup,
    )
    final = None
    if not blew:
        final = Field(u.copy(), t)
    return PathResult(
        record=record,
        series=series,
        final_field=final,
        config_hash=config_hash,
        seed=noise.seed,
        grid=grid,
        out_stride=out_stride,
        fields=fields,
        snapshots=snaps or None,
    )


class PicardDivergenceError(RuntimeError):
    def __init__(self, gaps):
        super().__init__(
            f"no contraction after {len(gaps)} iterations; gap history {gaps}"
        )
        self.gaps = gaps


def picard_solve(
    u0,
    coeffs,
    noise,
    t: float,
    tol: float = 1e-10,
    max_iters: int = 60,
    return_info: bool = False,
):
    """Fixed point of the discrete mild map, holding the noise path fixed.

    Iterates u_{n+1}(t_j) = S^j u0 + sum_{m<j} S^{j-m} [dt b(u_n(t_m)) +
    sigma(u_n(t_m)) W_m / dx] with S the implicit diffusion factor, starting
    from the noise-free flow, until the sup distance of successive iterates
    drops below tol.  The fixed point satisfies exactly the same recurrence
    as the stepper.
    """
    grid = noise.grid
    m_steps = int(round(t / grid.dt))
    if m_steps < 1 or abs(m_steps * grid.dt - t) > 1e-9:
        raise ValueError("t must be a positive multiple of dt")
    if m_steps > grid.steps:
        raise ValueError("t exceeds the noise horizon")
    drift, sigma = _split_coeffs(coeffs)
    u0v = np.asarray(u0.values if isinstance(u0, Field) else u0, dtype=float)
    stepper = _stepper_for(grid)
    dt, dx = grid.dt, grid.dx
    incs = [noise.sample_increments(m) for m in range(m_steps)]

    traj = np.empty((m_steps + 1, grid.nx))
    traj[0] = u0v
    for j in range(1, m_steps + 1):
        traj[j] = stepper.smooth(traj[j - 1], dt)

    gaps = []
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iters):
            new = np.empty_like(traj)
            new[0] = u0v
            for j in range(1, m_steps + 1):
                forcing = dt * np.asarray(drift(traj[j - 1])) + np.asarray(
                    sigma(traj[j - 1])
                ) * (incs[j - 1] / dx)
                new[j] = stepper.smooth(new[j - 1] + forcing, dt)
            gap = float(np.max(np.abs(new - traj)))
            gaps.append(gap)
            traj = new
            if gap < tol:
                out = Field(traj[m_steps].copy(), m_steps * dt)
                return (out, gaps) if return_info else out
    raise PicardDivergenceError(gaps)
