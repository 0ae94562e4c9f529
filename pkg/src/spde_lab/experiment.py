"""Experiment orchestration: configs, path persistence, sweeps, aggregation.

An experiment is a batch of independent paths of the localized dynamics,
one per seed, written to disk as they finish.  Everything downstream
(summaries, sweeps, aggregation, the CLI estimate tables) consumes the
on-disk files rather than in-memory state, so a run that was interrupted
and resumed produces byte-identical outputs to one that ran straight
through: the summary is always rebuilt by reading the path files back.

File formats
------------
Each path is one JSONL file ``path_<seed>.jsonl``:

    {"kind": "header", "schema_version": 1, "config_hash": ..., "seed": ...,
     "generator_tag": ..., "series_columns": [...], "config": {...}}
    {"kind": "row", "values": [t, sup, l2, h1, first_mode, mid]}
    {"kind": "snapshot", "t": ..., "values": [...]}        (optional)
    {"kind": "field", "t": ..., "values": [...]}           (optional)
    {"kind": "record", "blew_up": ..., "tau_hat": ..., ...}

Strict JSON has no inf/nan, so non-finite numbers are encoded as null.
On read-back a null sup_norm, tau_hat or terminal_sup means +inf (those
only go non-finite by blowing up) and any other null means nan.  A file
whose last line is not a record is incomplete and gets rerun on resume.

Summaries are CSV: ``summary.csv`` has one row per path, ``ensemble.csv``
one row for the whole batch, ``sweep.csv`` one row per sweep point.
Binomial confidence intervals use the Wilson score construction, which
stays inside [0,1] and behaves sensibly at fractions of 0 or 1, where
the usual normal interval collapses to a point.

The only timestamped output is ``run_meta.json``; every other byte is a
deterministic function of the config and the seeds.
"""

from __future__ import annotations

import glob as _glob
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .coefficients import CoefficientSpec, drift_from_config, diffusion_from_config
from .noise_field import GENERATOR_TAG, GridSpec, NoisePath
from .solver import (
    DEFAULT_BLOWUP_THRESHOLD,
    SERIES_COLUMNS,
    BlowupRecord,
    simulate_localized,
)

SCHEMA_VERSION = 1

WILSON_Z = 1.959963984540054  # two-sided 95%

__all__ = [
    "SCHEMA_VERSION",
    "SineMode",
    "Bump",
    "Tabulated",
    "initial_data_from_config",
    "ExperimentConfig",
    "load_config",
    "run_path",
    "write_path_file",
    "read_path_file",
    "ReplayPath",
    "run",
    "sweep",
    "SweepPoint",
    "SweepResult",
    "aggregate",
    "AggregateResult",
    "wilson_interval",
]


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class SineMode:
    """amplitude * sin(mode * pi * x)."""

    amplitude: float
    mode: int = 1

    def __post_init__(self):
        if self.mode < 1:
            raise ValueError("mode must be a positive integer")

    def sample(self, grid: GridSpec) -> np.ndarray:
        return self.amplitude * np.sin(self.mode * np.pi * grid.xs)

    def config(self):
        return {"kind": "sine", "amplitude": float(self.amplitude), "mode": int(self.mode)}


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported bump, zero outside (center-width, center+width)."""

    center: float
    width: float
    height: float

    def __post_init__(self):
        if not (0.0 < self.center - self.width and self.center + self.width < 1.0):
            raise ValueError("bump support must stay inside the open interval")
        if self.width <= 0.0:
            raise ValueError("width must be positive")

    def sample(self, grid: GridSpec) -> np.ndarray:
        r = (grid.xs - self.center) / self.width
        out = np.zeros_like(grid.xs)
        inside = np.abs(r) < 1.0
        # the exponent blows down smoothly at the edge of the support
        out[inside] = self.height * np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out

    def config(self):
        return {
            "kind": "bump",
            "center": float(self.center),
            "width": float(self.width),
            "height": float(self.height),
        }


@dataclass(frozen=True)
class Tabulated:
    """Explicit interior values, one per grid node."""

    values: tuple

    def __init__(self, values):
        vals = tuple(float(v) for v in values)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("tabulated initial data must be finite")
        object.__setattr__(self, "values", vals)

    def sample(self, grid: GridSpec) -> np.ndarray:
        if len(self.values) != grid.nx:
            raise ValueError(
                f"tabulated data has {len(self.values)} values, grid has nx={grid.nx}"
            )
        return np.array(self.values, dtype=float)

    def config(self):
        return {"kind": "tabulated", "values": list(self.values)}


def initial_data_from_config(cfg: dict):
    kind = cfg.get("kind")
    if kind == "sine":
        return SineMode(float(cfg["amplitude"]), int(cfg.get("mode", 1)))
    if kind == "bump":
        return Bump(float(cfg["center"]), float(cfg["width"]), float(cfg["height"]))
    if kind == "tabulated":
        return Tabulated(cfg["values"])
    raise ValueError(f"unknown initial data kind {kind!r}")


# ---------------------------------------------------------------------------
# experiment config


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSpec
    drift: object
    diffusion: object
    initial_data: object
    n_paths: int
    seed_base: int
    ladder: tuple = ()
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    t_end: float | None = None
    out_stride: int = 1
    snapshot_times: tuple = ()
    store_fields: bool = False
    outputs: str = "runs/out"

    def __post_init__(self):
        if self.n_paths < 0:
            raise ValueError("n_paths must be nonnegative")
        if not (0 <= self.seed_base < 2**64):
            raise ValueError("seed_base must fit in 64 bits")
        if self.seed_base + max(self.n_paths, 1) > 2**64:
            raise ValueError("seed range exceeds 64 bits")
        object.__setattr__(self, "ladder", tuple(float(v) for v in self.ladder))
        object.__setattr__(
            self, "snapshot_times", tuple(float(v) for v in self.snapshot_times)
        )
        if self.t_end is None:
            object.__setattr__(self, "t_end", self.grid.t_end)
        # strict JSON cannot carry inf, so config numbers must stay finite;
        # run-until-overflow stays available at the solver level
        numbers = (self.blowup_threshold, self.t_end, *self.ladder, *self.snapshot_times)
        if not all(math.isfinite(v) for v in numbers):
            raise ValueError("config numbers must be finite")
        if self.blowup_threshold <= 0.0:
            raise ValueError("blowup_threshold must be positive")

    def to_config(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "grid": self.grid.config(),
            "drift": self.drift.config(),
            "diffusion": self.diffusion.config(),
            "initial_data": self.initial_data.config(),
            "ladder": list(self.ladder),
            "blowup_threshold": float(self.blowup_threshold),
            "t_end": float(self.t_end),
            "out_stride": int(self.out_stride),
            "snapshot_times": list(self.snapshot_times),
            "store_fields": bool(self.store_fields),
            "n_paths": int(self.n_paths),
            "seed_base": int(self.seed_base),
            "outputs": str(self.outputs),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "ExperimentConfig":
        version = cfg.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version!r}")
        return cls(
            grid=GridSpec.from_config(cfg["grid"]),
            drift=drift_from_config(cfg["drift"]),
            diffusion=diffusion_from_config(cfg["diffusion"]),
            initial_data=initial_data_from_config(cfg["initial_data"]),
            n_paths=int(cfg["n_paths"]),
            seed_base=int(cfg["seed_base"]),
            ladder=tuple(cfg.get("ladder", ())),
            blowup_threshold=float(cfg.get("blowup_threshold", DEFAULT_BLOWUP_THRESHOLD)),
            t_end=float(cfg["t_end"]) if cfg.get("t_end") is not None else None,
            out_stride=int(cfg.get("out_stride", 1)),
            snapshot_times=tuple(cfg.get("snapshot_times", ())),
            store_fields=bool(cfg.get("store_fields", False)),
            outputs=str(cfg.get("outputs", "runs/out")),
        )

    def config_hash(self) -> str:
        """Stable digest of the physics of the run.

        n_paths, seed_base and outputs are excluded on purpose: files from
        runs that differ only in how many paths they drew, which seed block
        they used, or where they were written describe the same ensemble
        and must aggregate together.
        """
        cfg = self.to_config()
        for key in ("n_paths", "seed_base", "outputs"):
            cfg.pop(key)
        blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    """Read an experiment config from a TOML file.

    Schema (all [run] keys except n_paths and seed_base are optional):

        schema_version = 1
        [grid]            nx, dt, t_end, relax_dt_gate
        [drift]           family = "log_critical" | "super_log" | "power" |
                          "cubic" | "custom", plus that family's parameters
        [diffusion]       family = "constant" | "bounded" | "sub_quarter_log"
        [initial_data]    kind = "sine" | "bump" | "tabulated"
        [run]             n_paths, seed_base, ladder, blowup_threshold,
                          t_end, out_stride, snapshot_times, store_fields,
                          outputs
    """
    try:
        import tomllib as toml_reader
    except ModuleNotFoundError:
        import tomli as toml_reader

    with open(path, "rb") as fh:
        raw = toml_reader.load(fh)
    for section in ("grid", "drift", "diffusion", "initial_data", "run"):
        if section not in raw:
            raise ValueError(f"config file {path} is missing [{section}]")
    run_sec = dict(raw["run"])
    cfg = {
        "schema_version": raw.get("schema_version", SCHEMA_VERSION),
        "grid": raw["grid"],
        "drift": raw["drift"],
        "diffusion": raw["diffusion"],
        "initial_data": raw["initial_data"],
        **run_sec,
    }
    return ExperimentConfig.from_config(cfg)


# ---------------------------------------------------------------------------
# single-path execution and persistence


def run_path(config: ExperimentConfig, seed: int):
    noise = NoisePath(seed, config.grid)
    u0 = config.initial_data.sample(config.grid)
    coeffs = CoefficientSpec(drift=config.drift, diffusion=config.diffusion)
    return simulate_localized(
        u0,
        coeffs,
        noise,
        config.ladder,
        blowup_threshold=config.blowup_threshold,
        t_end=config.t_end,
        out_stride=config.out_stride,
        store_fields=config.store_fields,
        snapshot_times=config.snapshot_times,
        config_hash=config.config_hash(),
    )


def _encode_value(v: float):
    v = float(v)
    return v if math.isfinite(v) else None


def _encode_vector(vals) -> list:
    return [_encode_value(v) for v in vals]


def _decode_value(v, non_finite: float) -> float:
    return non_finite if v is None else float(v)


def write_path_file(path, config: ExperimentConfig, result) -> None:
    """Serialize one PathResult as JSONL, atomically (tmp then rename)."""
    path = Path(path)
    lines = []
    header = {
        "kind": "header",
        "schema_version": SCHEMA_VERSION,
        "config_hash": result.config_hash,
        "seed": int(result.seed),
        "generator_tag": GENERATOR_TAG,
        "series_columns": list(SERIES_COLUMNS),
        "config": config.to_config(),
    }
    lines.append(json.dumps(header, sort_keys=True))
    for row in result.series:
        lines.append(json.dumps({"kind": "row", "values": _encode_vector(row)}))
    for t, vals in result.snapshots or ():
        lines.append(
            json.dumps({"kind": "snapshot", "t": float(t), "values": _encode_vector(vals)})
        )
    for t, vals in result.fields or ():
        lines.append(
            json.dumps({"kind": "field", "t": float(t), "values": _encode_vector(vals)})
        )
    rec = result.record
    lines.append(
        json.dumps(
            {
                "kind": "record",
                "blew_up": bool(rec.blew_up),
                "tau_hat": _encode_value(rec.tau_hat),
                "threshold_ladder": [[float(l), float(c)] for l, c in rec.threshold_ladder],
                "terminal_sup": _encode_value(rec.terminal_sup),
                "final_time": float(result.series[-1, 0]),
            }
        )
    )
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        tmp.write_text("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise RuntimeError(f"failed writing {path} (seed {result.seed}): {exc}") from exc


@dataclass
class ReplayPath:
    """A path read back from disk; quacks like a PathResult for diagnostics."""

    grid: GridSpec
    seed: int
    config_hash: str
    series: np.ndarray
    record: BlowupRecord
    out_stride: int
    config: dict
    final_time: float
    snapshots: list | None = None
    fields: list | None = None
    final_field: None = None


def read_path_file(path) -> ReplayPath:
    path = Path(path)
    with open(path) as fh:
        raw = [json.loads(line) for line in fh if line.strip()]
    if not raw or raw[0].get("kind") != "header":
        raise ValueError(f"{path}: missing header line")
    header = raw[0]
    if header.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"{path}: schema_version {header.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    if raw[-1].get("kind") != "record":
        raise ValueError(f"{path}: incomplete (no record line)")
    rows, snaps, fields = [], [], []
    for obj in raw[1:-1]:
        kind = obj.get("kind")
        if kind == "row":
            vals = obj["values"]
            # sup only goes non-finite by blowing up; the rest are nan then
            rows.append(
                [_decode_value(vals[0], math.nan), _decode_value(vals[1], math.inf)]
                + [_decode_value(v, math.nan) for v in vals[2:]]
            )
        elif kind == "snapshot":
            snaps.append((float(obj["t"]), np.array(obj["values"], dtype=float)))
        elif kind == "field":
            fields.append((float(obj["t"]), np.array(obj["values"], dtype=float)))
        else:
            raise ValueError(f"{path}: unexpected line kind {kind!r}")
    rec = raw[-1]
    record = BlowupRecord(
        blew_up=bool(rec["blew_up"]),
        tau_hat=_decode_value(rec["tau_hat"], math.inf),
        threshold_ladder=tuple((float(l), float(c)) for l, c in rec["threshold_ladder"]),
        terminal_sup=_decode_value(rec["terminal_sup"], math.inf),
    )
    return ReplayPath(
        grid=GridSpec.from_config(header["config"]["grid"]),
        seed=int(header["seed"]),
        config_hash=str(header["config_hash"]),
        series=np.array(rows, dtype=float),
        record=record,
        out_stride=int(header["config"].get("out_stride", 1)),
        config=header["config"],
        final_time=float(rec["final_time"]),
        snapshots=snaps or None,
        fields=fields or None,
    )


def _hash_if_complete(path):
    """Resume check: config_hash from the header if the file has a record.

    Returns None for a missing, truncated, or unparsable file; those get
    rerun.  Returning the hash lets the caller refuse to resume on top of
    a different experiment instead of silently overwriting it.
    """
    try:
        with open(path) as fh:
            first = ""
            last = ""
            for line in fh:
                if line.strip():
                    if not first:
                        first = line
                    last = line
        header = json.loads(first)
        if json.loads(last).get("kind") != "record":
            return None
        if header.get("kind") != "header":
            return None
        return str(header.get("config_hash"))
    except (OSError, ValueError):
        return None


# ---------------------------------------------------------------------------
# summaries


def wilson_interval(k: int, n: int, z: float = WILSON_Z):
    """Wilson score interval for a binomial fraction k/n."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # at the boundary fractions one endpoint is exactly the fraction itself
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, columns, rows) -> None:
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


SUMMARY_COLUMNS = (
    "schema_version",
    "config_hash",
    "seed",
    "blew_up",
    "tau_hat",
    "terminal_sup",
    "sup_max",
    "l2_max",
    "h1_max",
    "final_time",
)

ENSEMBLE_COLUMNS = (
    "schema_version",
    "config_hash",
    "n_paths",
    "n_blowup",
    "blowup_fraction",
    "ci_low",
    "ci_high",
    "tau_hat_mean",
    "tau_hat_q10",
    "tau_hat_q50",
    "tau_hat_q90",
    "sup_max",
)


def _summary_row(rp: ReplayPath) -> dict:
    sups = rp.series[:, 1]
    finite = np.isfinite(rp.series[:, 2:4])
    l2s = rp.series[:, 2][finite[:, 0]]
    h1s = rp.series[:, 3][finite[:, 1]]
    return {
        "schema_version": SCHEMA_VERSION,
        "config_hash": rp.config_hash,
        "seed": rp.seed,
        "blew_up": rp.record.blew_up,
        "tau_hat": rp.record.tau_hat,
        "terminal_sup": rp.record.terminal_sup,
        "sup_max": float(sups.max()),
        "l2_max": float(l2s.max()) if l2s.size else math.nan,
        "h1_max": float(h1s.max()) if h1s.size else math.nan,
        "final_time": rp.final_time,
    }


def _ensemble_row(rows, config_hash: str) -> dict:
    n = len(rows)
    taus = [r["tau_hat"] for r in rows if r["blew_up"]]
    k = len(taus)
    lo, hi = wilson_interval(k, n)
    qs = np.quantile(taus, [0.1, 0.5, 0.9]) if taus else (math.nan,) * 3
    return {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config_hash,
        "n_paths": n,
        "n_blowup": k,
        "blowup_fraction": k / n if n else math.nan,
        "ci_low": lo,
        "ci_high": hi,
        "tau_hat_mean": float(np.mean(taus)) if taus else math.nan,
        "tau_hat_q10": float(qs[0]),
        "tau_hat_q50": float(qs[1]),
        "tau_hat_q90": float(qs[2]),
        "sup_max": max((r["sup_max"] for r in rows), default=math.nan),
    }


@dataclass
class AggregateResult:
    config_hash: str
    rows: list
    ensemble: dict
    paths: list


def aggregate(files) -> AggregateResult:
    """Combine path files into one summary; refuses mixed ensembles.

    Accepts a glob pattern or an iterable of paths.  All files must carry
    the same config_hash (same physics) and distinct seeds.
    """
    if isinstance(files, (str, Path)):
        pattern = str(files)
        files = sorted(_glob.glob(pattern))
        if not files:
            raise ValueError(f"no files match {pattern!r}")
    files = [Path(f) for f in files]
    if not files:
        raise ValueError("no path files given")
    replays = [read_path_file(f) for f in files]
    hashes = {rp.config_hash for rp in replays}
    if len(hashes) > 1:
        offenders = "\n".join(
            f"  {f}: {rp.config_hash}" for f, rp in zip(files, replays)
        )
        raise ValueError(f"mixed config_hash values, refusing to aggregate:\n{offenders}")
    seen = {}
    for f, rp in zip(files, replays):
        if rp.seed in seen:
            raise ValueError(f"duplicate seed {rp.seed} in {seen[rp.seed]} and {f}")
        seen[rp.seed] = f
    order = np.argsort([rp.seed for rp in replays], kind="stable")
    replays = [replays[int(i)] for i in order]
    rows = [_summary_row(rp) for rp in replays]
    config_hash = replays[0].config_hash
    return AggregateResult(
        config_hash=config_hash,
        rows=rows,
        ensemble=_ensemble_row(rows, config_hash),
        paths=replays,
    )


def write_summary(out_dir, agg: AggregateResult) -> None:
    out_dir = Path(out_dir)
    _write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, agg.rows)
    _write_csv(out_dir / "ensemble.csv", ENSEMBLE_COLUMNS, [agg.ensemble])


# ---------------------------------------------------------------------------
# batch runner


def _resolve_jobs(jobs) -> int:
    if jobs is None:
        jobs = os.environ.get("SPDE_LAB_JOBS", "1")
    jobs = int(jobs)
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    return jobs


def _path_filename(seed: int) -> str:
    return f"path_{seed:08d}.jsonl"


def _worker(payload):
    cfg, seed, out_path = payload
    config = ExperimentConfig.from_config(cfg)
    result = run_path(config, seed)
    write_path_file(out_path, config, result)
    return out_path


def run(config: ExperimentConfig, jobs=None) -> AggregateResult:
    """Run all paths of an experiment, resuming any that already exist.

    Paths run concurrently up to ``jobs`` (default: SPDE_LAB_JOBS or 1);
    the summary is a seed-ordered reduction over the files on disk, so
    completion order never affects a byte of output.
    """
    jobs = _resolve_jobs(jobs)
    out_dir = Path(config.outputs)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = config.to_config()
    want = config.config_hash()

    seeds = [config.seed_base + i for i in range(config.n_paths)]
    targets = [out_dir / _path_filename(s) for s in seeds]
    pending = []
    for s, p in zip(seeds, targets):
        found = _hash_if_complete(p)
        if found is None:
            pending.append((cfg, s, str(p)))
        elif found != want:
            raise ValueError(
                f"{p} belongs to a different experiment "
                f"(config_hash {found}, expected {want}); not overwriting"
            )
    (out_dir / "config.json").write_text(json.dumps(cfg, sort_keys=True, indent=1) + "\n")
    if pending:
        if jobs == 1 or len(pending) == 1:
            for payload in pending:
                _worker(payload)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                list(pool.map(_worker, pending, chunksize=1))

    meta = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": want,
        "n_paths": config.n_paths,
        "generator_tag": GENERATOR_TAG,
        "finished_utc": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "run_meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")

    if not seeds:
        empty = AggregateResult(
            config_hash=config.config_hash(),
            rows=[],
            ensemble=_ensemble_row([], config.config_hash()),
            paths=[],
        )
        write_summary(out_dir, empty)
        return empty
    agg = aggregate([str(t) for t in targets])
    write_summary(out_dir, agg)
    return agg


# ---------------------------------------------------------------------------
# parameter sweeps


@dataclass(frozen=True)
class SweepPoint:
    value: float
    blowup_fraction: float
    mean_tau_hat: float
    ci_low: float
    ci_high: float
    n_paths: int


@dataclass(frozen=True)
class SweepResult:
    axis: str
    points: tuple


SWEEP_COLUMNS = (
    "schema_version",
    "axis",
    "value",
    "config_hash",
    "n_paths",
    "n_blowup",
    "blowup_fraction",
    "ci_low",
    "ci_high",
    "mean_tau_hat",
)


def _apply_axis(config: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    """Return a copy of config with one named parameter replaced.

    Bare names ("epsilon", "power") are resolved against the drift, the
    diffusion, and the initial data; a name owned by more than one of them
    must be qualified ("diffusion.amplitude").  "t_end" or "T" moves the
    horizon.
    """
    cfg = config.to_config()
    if axis in ("t_end", "T"):
        cfg["grid"] = dict(cfg["grid"], t_end=float(value))
        cfg["t_end"] = float(value)
        return ExperimentConfig.from_config(cfg)
    section, _, name = axis.rpartition(".")
    tags = {"drift": "family", "diffusion": "family", "initial_data": "kind"}
    if section:
        if section not in tags:
            raise ValueError(f"unknown axis section {section!r}")
        hits = [section] if name in cfg[section] and name != tags[section] else []
    else:
        hits = [s for s, tag in tags.items() if name in cfg[s] and name != tag]
    if not hits:
        raise ValueError(
            f"axis {axis!r} does not name a parameter of the drift, diffusion, "
            "initial data, or the horizon (t_end)"
        )
    if len(hits) > 1:
        raise ValueError(
            f"axis {name!r} is ambiguous between {hits}; qualify it, "
            f"e.g. {hits[0]}.{name}"
        )
    cfg[hits[0]] = dict(cfg[hits[0]], **{name: float(value)})
    return ExperimentConfig.from_config(cfg)


def sweep(base: ExperimentConfig, axis: str, values, jobs=None) -> SweepResult:
    """Run one experiment per value of the named parameter.

    Each distinct value gets a disjoint seed block keyed by the index of
    its first occurrence, so no seed is reused across the sweep and a
    duplicated value reproduces its own statistics exactly (the repeat
    resumes from the first occurrence's files).
    """
    values = [float(v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    out_root = Path(base.outputs)
    out_root.mkdir(parents=True, exist_ok=True)

    first_index = {}
    for i, v in enumerate(values):
        first_index.setdefault(v, i)

    results = []
    for v in values:
        block = first_index[v]
        point_cfg = _apply_axis(base, axis, v)
        point_cfg = ExperimentConfig.from_config(
            dict(
                point_cfg.to_config(),
                seed_base=base.seed_base + block * base.n_paths,
                outputs=str(out_root / f"{axis}={v!r}"),
            )
        )
        agg = run(point_cfg, jobs=jobs)
        results.append((v, agg))

    results.sort(key=lambda pair: pair[0])
    points = []
    rows = []
    for v, agg in results:
        ens = agg.ensemble
        points.append(
            SweepPoint(
                value=v,
                blowup_fraction=ens["blowup_fraction"],
                mean_tau_hat=ens["tau_hat_mean"],
                ci_low=ens["ci_low"],
                ci_high=ens["ci_high"],
                n_paths=ens["n_paths"],
            )
        )
        rows.append(
            {
                "schema_version": SCHEMA_VERSION,
                "axis": axis,
                "value": v,
                "config_hash": ens["config_hash"],
                "n_paths": ens["n_paths"],
                "n_blowup": ens["n_blowup"],
                "blowup_fraction": ens["blowup_fraction"],
                "ci_low": ens["ci_low"],
                "ci_high": ens["ci_high"],
                "mean_tau_hat": ens["tau_hat_mean"],
            }
        )
    _write_csv(out_root / "sweep.csv", SWEEP_COLUMNS, rows)
    return SweepResult(axis=axis, points=tuple(points))
