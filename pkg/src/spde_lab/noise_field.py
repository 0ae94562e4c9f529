"""Space-time white noise increments on a uniform interior grid.

The driving noise is piecewise constant on space-time cells: interior node i
(1-based, at x = i*dx) owns the cell ((i-1)*dx, i*dx] x [m*dt, (m+1)*dt), and
its increment is W(m, i) = sqrt(dt*dx) * eta(m, i) with eta iid standard
normal.  Left-aligned cells nest exactly under the dx -> dx/2, dt -> dt/4
refinement used by the coupled-grid checks, so a coarse increment is the sum
of its eight fine children.

Normals come from counter-based Philox streams so that W(m, i) is a pure
function of (seed, m, i): step block b = m // 256 draws from counter b << 128,
one uint64 word per normal through a fixed-consumption Box-Muller transform
(rejection samplers would break the counter addressing).  A separate bridge
stream, offset far above any reachable block counter, feeds the conditional
splits the adaptive stepper uses near blowup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BLOCK_STEPS = 256
GENERATOR_TAG = "philox-blocked256-boxmuller-v1"

_TWO_PI = 2.0 * math.pi
_U53 = 2.0**-53

__all__ = [
    "BLOCK_STEPS",
    "GENERATOR_TAG",
    "GridSpec",
    "NoisePath",
    "AggregatedNoise",
    "sample_increments",
    "integrate_test_function",
    "refine",
    "make_coupled_pair",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: nx interior nodes, dx = 1/(nx+1), steps of size dt.

    The default stability gate dt <= dx^2 suits explicit schemes;
    relax_dt_gate widens it to dt <= dx for the semi-implicit stepper.
    """

    nx: int
    dt: float
    t_end: float
    relax_dt_gate: bool = False

    def __post_init__(self):
        if not isinstance(self.nx, int) or self.nx < 1:
            raise ValueError("nx must be a positive integer")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError("dt must be positive and finite")
        if not (math.isfinite(self.t_end) and self.t_end > 0.0):
            raise ValueError("t_end must be positive and finite")
        gate = self.dx if self.relax_dt_gate else self.dx * self.dx
        if self.dt > gate * (1.0 + 1e-12):
            raise ValueError(
                f"dt={self.dt} exceeds the stability gate {gate} "
                f"(relax_dt_gate={self.relax_dt_gate})"
            )

    @property
    def dx(self) -> float:
        return 1.0 / (self.nx + 1)

    @property
    def steps(self) -> int:
        # ceil with a tolerance so exact multiples do not gain a step
        return int(math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def xs(self) -> np.ndarray:
        """Interior node coordinates."""
        return np.arange(1, self.nx + 1) * self.dx

    def config(self):
        return {
            "nx": self.nx,
            "dt": self.dt,
            "t_end": self.t_end,
            "relax_dt_gate": self.relax_dt_gate,
        }

    @classmethod
    def from_config(cls, cfg):
        return cls(
            int(cfg["nx"]),
            float(cfg["dt"]),
            float(cfg["t_end"]),
            bool(cfg.get("relax_dt_gate", False)),
        )


def _words_to_normals(raw: np.ndarray) -> np.ndarray:
    """Fixed-consumption Box-Muller: one normal per uint64 word.

    raw must have even length along its last axis.
    """
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = _TWO_PI * u2
    out = np.empty_like(u)
    out[..., 0::2] = r * np.cos(theta)
    out[..., 1::2] = r * np.sin(theta)
    return out


class _NormalStream:
    """Sequential normal stream on a counter range disjoint from step blocks."""

    _CHUNK = 4096

    def __init__(self, seed: int):
        self._bg = np.random.Philox(key=seed, counter=1 << 191)
        self._buf = np.empty(0)
        self._pos = 0

    def draw(self, n: int) -> np.ndarray:
        out = np.empty(n)
        filled = 0
        while filled < n:
            if self._pos >= self._buf.size:
                self._buf = _words_to_normals(self._bg.random_raw(self._CHUNK))
                self._pos = 0
            take = min(n - filled, self._buf.size - self._pos)
            out[filled : filled + take] = self._buf[self._pos : self._pos + take]
            self._pos += take
            filled += take
        return out


class NoisePath:
    """One realization of the driving noise, addressed by (seed, step, node)."""

    def __init__(self, seed: int, grid: GridSpec, generator_tag: str = GENERATOR_TAG):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if generator_tag != GENERATOR_TAG:
            raise ValueError(f"unsupported generator tag {generator_tag!r}")
        self.seed = seed
        self.grid = grid
        self.generator_tag = generator_tag
        self._row_words = grid.nx + (grid.nx & 1)
        self._scale = math.sqrt(grid.dt * grid.dx)
        self._blocks: dict[int, np.ndarray] = {}
        self._bridge = _NormalStream(seed)

    def _block(self, b: int) -> np.ndarray:
        blk = self._blocks.get(b)
        if blk is None:
            bg = np.random.Philox(key=self.seed, counter=b << 128)
            raw = bg.random_raw(BLOCK_STEPS * self._row_words)
            blk = _words_to_normals(raw.reshape(BLOCK_STEPS, self._row_words))
            blk = np.ascontiguousarray(blk[:, : self.grid.nx])
            if len(self._blocks) >= 2:
                self._blocks.pop(next(iter(self._blocks)))
            self._blocks[b] = blk
        return blk

    def normals(self, m: int) -> np.ndarray:
        """Standard normals eta(m, :) for step m."""
        if not 0 <= m < self.grid.steps:
            raise ValueError(f"step index {m} outside [0, {self.grid.steps})")
        b, r = divmod(int(m), BLOCK_STEPS)
        return self._block(b)[r]

    def sample_increments(self, m: int) -> np.ndarray:
        """Cell increments W(m, :) = sqrt(dt*dx) * eta(m, :)."""
        return self._scale * self.normals(m)

    def bridge_normals(self, shape) -> np.ndarray:
        """Draws from the auxiliary stream used for conditional refinement.

        Consumption is stateful and strictly sequential; callers replaying a
        path must call reset_bridge() first.
        """
        n = int(np.prod(shape))
        return self._bridge.draw(n).reshape(shape)

    def reset_bridge(self):
        self._bridge = _NormalStream(self.seed)


def sample_increments(path, m: int) -> np.ndarray:
    return path.sample_increments(m)


def integrate_test_function(path, phi, t: float) -> float:
    """sum_{m*dt < t} sum_i phi(x_i) W(m, i), the Walsh integral of phi."""
    grid = path.grid
    if t > grid.t_end * (1.0 + 1e-12):
        raise ValueError("t exceeds the grid horizon")
    phi = np.asarray(phi, dtype=float)
    if phi.shape == (grid.nx + 2,):
        phi = phi[1:-1]
    elif phi.shape != (grid.nx,):
        raise ValueError("phi must be sampled on the interior or closed grid")
    m_end = min(int(math.floor(t / grid.dt + 1e-9)), grid.steps)
    total = 0.0
    for m in range(m_end):
        total += float(path.sample_increments(m) @ phi)
    return total


def refine(grid: GridSpec) -> GridSpec:
    """Halve dx and quarter dt; cells of the result nest inside the input's."""
    return GridSpec(2 * grid.nx + 1, grid.dt / 4.0, grid.t_end, grid.relax_dt_gate)


class AggregatedNoise:
    """Coarse-grid view of a fine NoisePath: increments are sums of children.

    Coarse cell (m, i) aggregates fine cells {4m..4m+3} x {2i-1, 2i}, whose
    total variance is 8 * (dt/4) * (dx/2) = dt * dx, matching a native coarse
    path in law while staying coupled to the fine realization.
    """

    def __init__(self, fine: NoisePath, coarse: GridSpec):
        fg = fine.grid
        if fg.nx != 2 * coarse.nx + 1:
            raise ValueError("fine grid must refine the coarse grid in space")
        if not math.isclose(fg.dt, coarse.dt / 4.0, rel_tol=1e-12):
            raise ValueError("fine grid must refine the coarse grid in time")
        if not math.isclose(fg.t_end, coarse.t_end, rel_tol=1e-12):
            raise ValueError("fine and coarse horizons differ")
        self.fine = fine
        self.grid = coarse
        self.seed = fine.seed
        self.generator_tag = fine.generator_tag + "+aggregated"

    def sample_increments(self, m: int) -> np.ndarray:
        if not 0 <= m < self.grid.steps:
            raise ValueError(f"step index {m} outside [0, {self.grid.steps})")
        nxc = self.grid.nx
        s = self.fine.sample_increments(4 * m)
        for q in (1, 2, 3):
            s = s + self.fine.sample_increments(4 * m + q)
        return s[: 2 * nxc].reshape(nxc, 2).sum(axis=1)

    def bridge_normals(self, shape) -> np.ndarray:
        return self.fine.bridge_normals(shape)

    def reset_bridge(self):
        self.fine.reset_bridge()


def make_coupled_pair(seed: int, coarse: GridSpec):
    """(coarse_noise, fine_noise) driven by the same underlying realization."""
    fine = NoisePath(seed, refine(coarse))
    coarse_view = AggregatedNoise(NoisePath(seed, refine(coarse)), coarse)
    return coarse_view, fine
