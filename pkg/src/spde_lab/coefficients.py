"""Drift and diffusion coefficient families.

The model is  du = (1/2)u'' dt + b(u) dt + sigma(u) dW  on [0,1]; this module
owns b and sigma.  Families are frozen dataclasses that act as plain callables
on scalars or numpy arrays.  Raw calls do no input checking and let non-finite
values flow through, because the time stepper detects explosion on the field
itself; ``eval_drift`` / ``eval_diffusion`` are the checked entry points.

``TruncatedCoefficient`` clamps its base family outside [-N, N], which is what
makes the localized dynamics globally Lipschitz.  ``lipschitz_envelope``
returns an affine growth pair (c, L) with |f(z)| <= c + L|z| for the truncated
family: a closed form where one exists, otherwise a difference-quotient sweep
with a 10 percent safety margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

E = math.e

# The sigma growth exponent sits strictly below the 1/4 smallness gate.
_SUB_QUARTER_EXPONENT = 0.125

__all__ = [
    "log_plus",
    "LogCritical",
    "SuperLog",
    "PowerDrift",
    "Cubic",
    "Custom",
    "Constant",
    "Bounded",
    "SubQuarterLog",
    "TruncatedCoefficient",
    "truncate",
    "Envelope",
    "EnvelopePair",
    "EnvelopeSweepError",
    "CoefficientSpec",
    "eval_drift",
    "eval_diffusion",
    "lipschitz_envelope",
    "moment_condition_ok",
    "drift_from_config",
    "diffusion_from_config",
    "family_from_config",
]


def log_plus(w):
    """log(max(w, e)), elementwise; equals 1 at and below w = e."""
    return np.log(np.maximum(w, E))


def _require_finite(**params):
    for name, value in params.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class LogCritical:
    """b(z) = theta1 + theta2 * |z| * log_plus(|z|).

    The borderline growth family: theta2 = 0 degenerates to a constant drift.
    """

    theta1: float = 0.0
    theta2: float = 1.0

    def __post_init__(self):
        _require_finite(theta1=self.theta1, theta2=self.theta2)
        if self.theta2 < 0.0:
            raise ValueError("theta2 must be nonnegative")

    def __call__(self, z):
        az = np.abs(z)
        return self.theta1 + self.theta2 * az * log_plus(az)

    def config(self):
        return {"family": "log_critical", "theta1": self.theta1, "theta2": self.theta2}


@dataclass(frozen=True)
class SuperLog:
    """b(z) = scale * (1+|z|) * log_plus(1+|z|)**(1+epsilon) + offset.

    Any epsilon > 0 puts the growth strictly beyond the critical z*log z rate.
    """

    epsilon: float
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        _require_finite(epsilon=self.epsilon, scale=self.scale, offset=self.offset)
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.scale < 0.0:
            raise ValueError("scale must be nonnegative")

    def __call__(self, z):
        w = 1.0 + np.abs(z)
        return self.scale * w * log_plus(w) ** (1.0 + self.epsilon) + self.offset

    def config(self):
        return {
            "family": "super_log",
            "epsilon": self.epsilon,
            "scale": self.scale,
            "offset": self.offset,
        }


@dataclass(frozen=True)
class PowerDrift:
    """b(z) = scale * (1+|z|)**power with power > 1."""

    power: float
    scale: float = 1.0

    def __post_init__(self):
        _require_finite(power=self.power, scale=self.scale)
        if self.power <= 1.0:
            raise ValueError("power must exceed 1")
        if self.scale < 0.0:
            raise ValueError("scale must be nonnegative")

    def __call__(self, z):
        return self.scale * (1.0 + np.abs(z)) ** self.power

    def config(self):
        return {"family": "power", "power": self.power, "scale": self.scale}


@dataclass(frozen=True)
class Cubic:
    """b(z) = sign * z**3, sign in {+1, -1}."""

    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def __call__(self, z):
        return self.sign * np.asarray(z, dtype=float) ** 3

    def config(self):
        return {"family": "cubic", "sign": self.sign}


@dataclass(frozen=True)
class Custom:
    """Tabulated coefficient: linear interpolation, constant extrapolation."""

    z_values: tuple
    f_values: tuple

    def __post_init__(self):
        zs = np.asarray(self.z_values, dtype=float)
        fs = np.asarray(self.f_values, dtype=float)
        if zs.ndim != 1 or zs.shape != fs.shape or zs.size < 2:
            raise ValueError("need two equal-length 1-d tables with >= 2 nodes")
        if not (np.all(np.isfinite(zs)) and np.all(np.isfinite(fs))):
            raise ValueError("table entries must be finite")
        if np.any(np.diff(zs) <= 0.0):
            raise ValueError("z_values must be strictly increasing")
        object.__setattr__(self, "z_values", tuple(float(z) for z in zs))
        object.__setattr__(self, "f_values", tuple(float(f) for f in fs))
        object.__setattr__(self, "_z", zs)
        object.__setattr__(self, "_f", fs)

    @classmethod
    def from_function(cls, fn, lo, hi, n=513):
        zs = np.linspace(lo, hi, n)
        return cls(tuple(zs), tuple(float(fn(z)) for z in zs))

    def __call__(self, z):
        return np.interp(z, self._z, self._f)

    def config(self):
        return {
            "family": "custom",
            "z_values": list(self.z_values),
            "f_values": list(self.f_values),
        }


@dataclass(frozen=True)
class Constant:
    """sigma(z) = sigma0."""

    sigma0: float = 1.0

    def __post_init__(self):
        _require_finite(sigma0=self.sigma0)

    def __call__(self, z):
        # 0*z keeps the output shaped like z and propagates non-finite input.
        return self.sigma0 + 0.0 * np.asarray(z, dtype=float)

    def config(self):
        return {"family": "constant", "sigma0": self.sigma0}


_BOUNDED_SHAPES = {
    "tanh": np.tanh,
    "cos": np.cos,
    "gauss": lambda z: np.exp(-np.square(z)),
}


@dataclass(frozen=True)
class Bounded:
    """sigma(z) = amplitude * shape(z) with |shape| <= 1."""

    shape: str = "cos"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.shape not in _BOUNDED_SHAPES:
            raise ValueError(f"unknown bounded shape {self.shape!r}")
        _require_finite(amplitude=self.amplitude)
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be nonnegative")

    def __call__(self, z):
        return self.amplitude * _BOUNDED_SHAPES[self.shape](np.asarray(z, dtype=float))

    def config(self):
        return {"family": "bounded", "shape": self.shape, "amplitude": self.amplitude}


@dataclass(frozen=True)
class SubQuarterLog:
    """sigma(z) = scale * (1+|z|) * log_plus(1+|z|)**(1/8).

    Unbounded, but the log exponent 1/8 keeps sigma(z) / (|z| (log|z|)^{1/4})
    decreasing, which is the smallness gate the global-existence regime needs.
    """

    scale: float = 1.0

    def __post_init__(self):
        _require_finite(scale=self.scale)
        if self.scale < 0.0:
            raise ValueError("scale must be nonnegative")

    def __call__(self, z):
        w = 1.0 + np.abs(z)
        return self.scale * w * log_plus(w) ** _SUB_QUARTER_EXPONENT

    def config(self):
        return {"family": "sub_quarter_log", "scale": self.scale}


@dataclass(frozen=True)
class TruncatedCoefficient:
    """base clamped to [-level, level]: equal inside, frozen at the edge beyond."""

    base: object
    level: float

    def __post_init__(self):
        level = float(self.level)
        if not math.isfinite(level) or level < 1.0:
            raise ValueError("truncation level must be finite and >= 1")
        object.__setattr__(self, "level", level)

    def __call__(self, z):
        return self.base(np.clip(z, -self.level, self.level))

    def config(self):
        return {"family": "truncated", "level": self.level, "base": self.base.config()}


def truncate(base, level):
    return TruncatedCoefficient(base, float(level))


class Envelope(NamedTuple):
    """Affine growth constants for a drift/diffusion pair."""

    c_b: float
    L_b: float
    c_sigma: float
    L_sigma: float


class EnvelopePair(NamedTuple):
    """(c, L) with |f(z)| <= c + L|z|; method records how it was certified."""

    c: float
    L: float
    method: str


class EnvelopeSweepError(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientSpec:
    """A drift/diffusion pair, optionally with certified growth constants."""

    drift: object
    diffusion: object
    envelope: Envelope | None = None

    def __post_init__(self):
        env = self.envelope
        if env is not None:
            if not (env.c_b >= 0.0 and env.c_sigma >= 0.0):
                raise ValueError("envelope offsets must be nonnegative")
            if not (env.L_b > 0.0 and env.L_sigma > 0.0):
                raise ValueError("envelope slopes must be positive")

    def config(self):
        return {
            "drift": self.drift.config(),
            "diffusion": self.diffusion.config(),
            "envelope": list(self.envelope) if self.envelope is not None else None,
        }


def moment_condition_ok(env: Envelope) -> bool:
    """Check L_b >= 4*L_sigma**4 with both slopes positive.

    L_sigma**4 can underflow to zero for degenerate (constant sigma)
    envelopes; the positivity check is separate so those still pass.
    """
    return env.L_sigma > 0.0 and env.L_b > 0.0 and env.L_b >= 4.0 * env.L_sigma**4


def _eval_checked(family, z):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficient evaluated at non-finite argument")
    out = family(arr)
    if np.ndim(z) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


def eval_drift(family, z):
    """Validated drift evaluation; rejects non-finite z."""
    return _eval_checked(family, z)


def eval_diffusion(family, z):
    """Validated diffusion evaluation; rejects non-finite z."""
    return _eval_checked(family, z)


_DEGENERATE_L = float(np.finfo(float).tiny)


def _sweep_envelope(trunc: TruncatedCoefficient) -> EnvelopePair:
    # Difference-quotient sweep over the clamped range; successive grid
    # doublings must agree to 2 percent before the result counts as certified.
    level = trunc.level
    prev = None
    for m in (1 << 14, 1 << 15, 1 << 16):
        zs = np.linspace(-1.05 * level, 1.05 * level, m + 1)
        fs = np.asarray(trunc(zs), dtype=float)
        quot = float(np.max(np.abs(np.diff(fs)) / np.diff(zs)))
        if prev is not None and abs(quot - prev) <= 0.02 * max(quot, 1e-300):
            c = abs(float(trunc(0.0)))
            if quot == 0.0:
                return EnvelopePair(c, _DEGENERATE_L, "degenerate")
            return EnvelopePair(c, 1.1 * quot, "sweep")
        prev = quot
    raise EnvelopeSweepError(
        "difference-quotient sweep did not stabilize; envelope inconclusive"
    )


def lipschitz_envelope(trunc: TruncatedCoefficient) -> EnvelopePair:
    """Certified growth envelope (c, L) for a truncated family.

    LogCritical with level >= 3 has the closed form (|theta1|, theta2*log N);
    a constant family is flagged degenerate with a machine-minimal slope;
    everything else goes through the numerical sweep.
    """
    if not isinstance(trunc, TruncatedCoefficient):
        raise TypeError("lipschitz_envelope expects a TruncatedCoefficient")
    base = trunc.base
    if isinstance(base, Constant):
        return EnvelopePair(abs(base.sigma0), _DEGENERATE_L, "degenerate")
    if isinstance(base, LogCritical) and trunc.level >= 3.0:
        if base.theta2 == 0.0:
            return EnvelopePair(abs(base.theta1), _DEGENERATE_L, "degenerate")
        return EnvelopePair(
            abs(base.theta1), base.theta2 * math.log(trunc.level), "closed_form"
        )
    return _sweep_envelope(trunc)


_DRIFT_TAGS = {"log_critical", "super_log", "power", "cubic", "custom"}
_DIFFUSION_TAGS = {"constant", "bounded", "sub_quarter_log"}


def family_from_config(cfg: dict):
    """Rebuild any coefficient family from its config() dict."""
    kind = cfg.get("family")
    if kind == "log_critical":
        return LogCritical(float(cfg.get("theta1", 0.0)), float(cfg.get("theta2", 1.0)))
    if kind == "super_log":
        return SuperLog(
            float(cfg["epsilon"]),
            float(cfg.get("scale", 1.0)),
            float(cfg.get("offset", 0.0)),
        )
    if kind == "power":
        return PowerDrift(float(cfg["power"]), float(cfg.get("scale", 1.0)))
    if kind == "cubic":
        return Cubic(int(cfg.get("sign", 1)))
    if kind == "custom":
        return Custom(tuple(cfg["z_values"]), tuple(cfg["f_values"]))
    if kind == "constant":
        return Constant(float(cfg.get("sigma0", 1.0)))
    if kind == "bounded":
        return Bounded(str(cfg.get("shape", "cos")), float(cfg.get("amplitude", 1.0)))
    if kind == "sub_quarter_log":
        return SubQuarterLog(float(cfg.get("scale", 1.0)))
    if kind == "truncated":
        return TruncatedCoefficient(family_from_config(cfg["base"]), float(cfg["level"]))
    raise ValueError(f"unknown coefficient family {kind!r}")


def _tag_of(cfg: dict) -> str:
    kind = cfg.get("family")
    if kind == "truncated":
        return _tag_of(cfg.get("base", {}))
    return kind


def drift_from_config(cfg: dict):
    if _tag_of(cfg) not in _DRIFT_TAGS:
        raise ValueError(f"{_tag_of(cfg)!r} is not a drift family")
    return family_from_config(cfg)


def diffusion_from_config(cfg: dict):
    if _tag_of(cfg) not in _DIFFUSION_TAGS:
        raise ValueError(f"{_tag_of(cfg)!r} is not a diffusion family")
    return family_from_config(cfg)
