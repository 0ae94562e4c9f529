"""Render figures and an index page from simulation output files.

This package consumes the lab's files (sweep.csv, summary.csv, holder.csv,
moments.csv, path_*.jsonl) and never recomputes statistics.  Every reader
validates schema_version before anything is drawn; a mismatch is a hard
error naming the file and column.  Rendering is a pure function of the
input bytes, so rerunning over the same inputs reproduces every output
byte (the SVG id hash salt is pinned and no timestamps are emitted).
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from html import escape
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

SCHEMA_VERSION = 1
MAX_SAMPLE_PATHS = 6

log = logging.getLogger("spde_report")

plt.rcParams["svg.hashsalt"] = "spde-report"
# keep text as text: searchable, and independent of glyph path rasterizing
plt.rcParams["svg.fonttype"] = "none"


class SchemaMismatch(ValueError):
    pass


@dataclass
class ReportSpec:
    """Resolved input files for one report.

    Any input may be None or empty; the matching figure is skipped with a
    notice and the index page shows a placeholder in its place.
    """

    sweep_csv: Path | None
    holder_csv: Path | None
    moments_csv: Path | None
    summary_csvs: list = field(default_factory=list)
    sample_paths: list = field(default_factory=list)
    out_dir: Path = Path("report_out")
    fmt: str = "svg"
    dpi: int = 150

    @classmethod
    def from_directory(cls, in_dir, out_dir, fmt="svg", dpi=150):
        in_dir = Path(in_dir)
        if not in_dir.is_dir():
            raise ValueError(f"input directory {in_dir} does not exist")

        def opt(name):
            p = in_dir / name
            return p if p.is_file() else None

        summaries = sorted(in_dir.glob("summary.csv")) + sorted(
            in_dir.glob("*/summary.csv")
        )
        samples = sorted(in_dir.rglob("path_*.jsonl"))[:MAX_SAMPLE_PATHS]
        spec = cls(
            sweep_csv=opt("sweep.csv"),
            holder_csv=opt("holder.csv"),
            moments_csv=opt("moments.csv"),
            summary_csvs=summaries,
            sample_paths=samples,
            out_dir=Path(out_dir),
            fmt=fmt,
            dpi=dpi,
        )
        if not any(
            [spec.sweep_csv, spec.holder_csv, spec.moments_csv,
             spec.summary_csvs, spec.sample_paths]
        ):
            raise ValueError(f"no report inputs found under {in_dir}")
        return spec


def read_csv_checked(path, required):
    """DictReader over the whole file, schema-validated."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for col in ("schema_version", *required):
            if col not in cols:
                raise SchemaMismatch(f"{path.name}: missing column {col}")
        rows = list(reader)
    for row in rows:
        got = row["schema_version"]
        if got != str(SCHEMA_VERSION):
            raise SchemaMismatch(
                f"{path.name}: column schema_version has {got!r}, "
                f"supported {SCHEMA_VERSION}"
            )
    return rows


def read_path_series(path):
    """Header, (t, sup_norm) arrays, and the closing record of one path file."""
    path = Path(path)
    header = None
    ts = []
    sups = []
    record = None
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            kind = obj.get("kind")
            if kind == "header":
                header = obj
                got = obj.get("schema_version")
                if got != SCHEMA_VERSION:
                    raise SchemaMismatch(
                        f"{path.name}: field schema_version has {got!r}, "
                        f"supported {SCHEMA_VERSION}"
                    )
                cols = obj["series_columns"]
                if "sup_norm" not in cols:
                    raise SchemaMismatch(f"{path.name}: missing column sup_norm")
                i_sup = cols.index("sup_norm")
            elif kind == "row":
                if header is None:
                    raise SchemaMismatch(f"{path.name}: missing header line")
                vals = obj["values"]
                t = vals[0]
                s = vals[i_sup]
                ts.append(math.nan if t is None else float(t))
                # null sup means the value left float range, plot break
                sups.append(math.nan if s is None else float(s))
            elif kind == "record":
                record = obj
    if header is None:
        raise SchemaMismatch(f"{path.name}: missing header line")
    return header, ts, sups, record


def _float(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        return math.nan


def _save(fig, out_dir, name, fmt, dpi):
    out = Path(out_dir) / f"{name}.{fmt}"
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(out, dpi=dpi, metadata=meta)
    plt.close(fig)
    return out


def fig_blowup_fraction(spec):
    """Fraction vs sweep value with the aggregated Wilson intervals."""
    if spec.sweep_csv is None:
        return None, "sweep.csv not present"
    rows = read_csv_checked(
        spec.sweep_csv,
        ("axis", "value", "blowup_fraction", "ci_low", "ci_high"),
    )
    if not rows:
        return None, "sweep.csv has no data rows"
    axis = rows[0]["axis"]
    xs = [_float(r["value"]) for r in rows]
    fr = [_float(r["blowup_fraction"]) for r in rows]
    lo = [max(f - _float(r["ci_low"]), 0.0) for f, r in zip(fr, rows)]
    hi = [max(_float(r["ci_high"]) - f, 0.0) for f, r in zip(fr, rows)]
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.errorbar(xs, fr, yerr=[lo, hi], fmt="o-", capsize=4, color="tab:red")
    ax.set_xlabel(axis)
    ax.set_ylabel("blowup fraction")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("Blowup fraction with 95% Wilson intervals")
    ax.grid(True, alpha=0.3)
    return _save(fig, spec.out_dir, "blowup_fraction", spec.fmt, spec.dpi), None


def fig_tau_histograms(spec):
    """Histogram of finite blowup times per summary file."""
    if not spec.summary_csvs:
        return None, "no summary.csv files present"
    groups = []
    for p in spec.summary_csvs:
        rows = read_csv_checked(p, ("seed", "blew_up", "tau_hat"))
        taus = [
            _float(r["tau_hat"])
            for r in rows
            if r["blew_up"] == "1" and math.isfinite(_float(r["tau_hat"]))
        ]
        label = p.parent.name if p.parent.name else "run"
        groups.append((label, taus))
    total = sum(len(t) for _, t in groups)
    if total == 0:
        return None, "no blowups recorded in any summary"
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for label, taus in groups:
        if taus:
            ax.hist(taus, bins=20, histtype="step", label=f"{label} (n={len(taus)})")
    ax.set_xlabel("blowup time")
    ax.set_ylabel("paths")
    ax.set_title("Blowup time distribution")
    ax.legend(fontsize=8)
    return _save(fig, spec.out_dir, "tau_histograms", spec.fmt, spec.dpi), None


def fig_holder_loglog(spec):
    """Moment vs lag on log-log axes with fitted and theory slopes.

    The theory slope comes from the CSV's mu_theory/eta_theory columns so a
    rerun against different initial-data smoothness stays honest.
    """
    if spec.holder_csv is None:
        return None, "holder.csv not present"
    rows = read_csv_checked(
        spec.holder_csv,
        ("direction", "k", "lag", "moment", "exponent_hat",
         "mu_theory", "eta_theory"),
    )
    rows = [r for r in rows if math.isfinite(_float(r["moment"]))]
    if not rows:
        return None, "holder.csv has no data rows"
    directions = sorted({r["direction"] for r in rows})
    fig, axes = plt.subplots(
        1, len(directions), figsize=(5.0 * len(directions), 4.0), squeeze=False
    )
    for ax, direction in zip(axes[0], directions):
        sub = [r for r in rows if r["direction"] == direction]
        lags = [_float(r["lag"]) for r in sub]
        moms = [_float(r["moment"]) for r in sub]
        k = _float(sub[0]["k"])
        slope = k * _float(sub[0]["exponent_hat"])
        theory_exp = _float(
            sub[0]["mu_theory"] if direction == "space" else sub[0]["eta_theory"]
        )
        t_slope = k * theory_exp
        lx = [math.log(v) for v in lags]
        ly = [math.log(v) for v in moms]
        # intercepts by least squares at fixed slope, i.e. through the centroid
        cx = sum(lx) / len(lx)
        cy = sum(ly) / len(ly)
        ax.loglog(lags, moms, "o", color="tab:blue", label=f"moment, k={k:g}")
        ax.loglog(
            lags,
            [math.exp(cy + slope * (v - cx)) for v in lx],
            "-",
            color="tab:blue",
            label=f"fit slope {slope:.3f}",
        )
        ax.loglog(
            lags,
            [math.exp(cy + t_slope * (v - cx)) for v in lx],
            "--",
            color="tab:gray",
            label=f"theory slope {t_slope:.3f}",
        )
        ax.set_xlabel(f"{direction} lag")
        ax.set_ylabel("increment moment")
        ax.set_title(f"Holder regression, {direction}")
        ax.legend(fontsize=8)
    return _save(fig, spec.out_dir, "holder_loglog", spec.fmt, spec.dpi), None


def fig_trajectories(spec):
    """sup-norm trajectories; blown-up paths get a dotted marker at tau_hat."""
    if not spec.sample_paths:
        return None, "no path files present"
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    drew_marker = False
    for p in spec.sample_paths:
        header, ts, sups, record = read_path_series(p)
        (line,) = ax.semilogy(ts, sups, lw=1.0, label=f"seed {header['seed']}")
        tau = record.get("tau_hat") if record else None
        if record and record.get("blew_up") and tau is not None:
            ax.axvline(
                float(tau),
                color=line.get_color(),
                linestyle=":",
                lw=1.0,
                label=f"blowup at t={float(tau):.3g}",
            )
            drew_marker = True
    ax.set_xlabel("t")
    ax.set_ylabel("sup norm")
    title = "Sample trajectories"
    if drew_marker:
        title += " with blowup markers"
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, spec.out_dir, "trajectories", spec.fmt, spec.dpi), None


def fig_moment_growth(spec):
    """Damped moment norms vs order k against the best C*sqrt(k) envelope."""
    if spec.moments_csv is None:
        return None, "moments.csv not present"
    rows = read_csv_checked(spec.moments_csv, ("k", "value", "mc_stderr"))
    rows = [r for r in rows if math.isfinite(_float(r["value"]))]
    if not rows:
        return None, "moments.csv has no data rows"
    ks = [_float(r["k"]) for r in rows]
    vals = [_float(r["value"]) for r in rows]
    errs = [_float(r["mc_stderr"]) for r in rows]
    c = max(v / math.sqrt(k) for k, v in zip(ks, vals))
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.errorbar(ks, vals, yerr=errs, fmt="o", capsize=4, color="tab:blue",
                label="moment norm")
    kk = [min(ks) + i * (max(ks) - min(ks)) / 64 for i in range(65)]
    ax.plot(kk, [c * math.sqrt(k) for k in kk], "--", color="tab:gray",
            label=f"C sqrt(k), C={c:.3f} from data")
    ax.set_xlabel("moment order k")
    ax.set_ylabel("damped moment norm")
    ax.set_title("Moment growth in the order")
    ax.legend(fontsize=8)
    return _save(fig, spec.out_dir, "moment_growth", spec.fmt, spec.dpi), None


FIGURES = (
    ("Blowup fraction", fig_blowup_fraction),
    ("Blowup times", fig_tau_histograms),
    ("Holder regression", fig_holder_loglog),
    ("Sample trajectories", fig_trajectories),
    ("Moment growth", fig_moment_growth),
)


def _provenance(spec):
    """Embedded config of the first sample path, if any, for the index page."""
    if not spec.sample_paths:
        return None
    header, _, _, _ = read_path_series(spec.sample_paths[0])
    return {
        "config_hash": header.get("config_hash"),
        "generator_tag": header.get("generator_tag"),
        "config": header.get("config"),
    }


def write_index(spec, entries, provenance):
    parts = [
        "<!doctype html>",
        '<meta charset="utf-8">',
        "<title>simulation report</title>",
        "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto}"
        "figure{margin:1.5em 0}img{max-width:100%}"
        ".placeholder{color:#777;border:1px dashed #aaa;padding:1em;margin:1.5em 0}"
        "pre{background:#f4f4f4;padding:1em;overflow-x:auto}</style>",
        "<h1>Simulation report</h1>",
    ]
    for title, out, notice in entries:
        if out is not None:
            parts.append(
                f'<figure><a href="{out.name}"><img src="{out.name}" '
                f'alt="{escape(title)}"></a>'
                f"<figcaption>{escape(title)}</figcaption></figure>"
            )
        else:
            parts.append(
                f'<div class="placeholder">{escape(title)}: no data '
                f"({escape(notice)})</div>"
            )
    if provenance is not None:
        parts.append("<h2>Provenance</h2>")
        parts.append(
            "<pre>" + escape(json.dumps(provenance, sort_keys=True, indent=1))
            + "</pre>"
        )
    index = Path(spec.out_dir) / "index.html"
    index.write_text("\n".join(parts) + "\n")
    return index


def render_report(in_dir=None, out_dir=None, fmt="svg", dpi=150, spec=None):
    """Render every figure whose input is present; returns a process exit code.

    Missing optional inputs skip their figure with a logged notice and a
    placeholder on the index page.  Schema mismatches raise.
    """
    if spec is None:
        spec = ReportSpec.from_directory(in_dir, out_dir, fmt=fmt, dpi=dpi)
    if spec.fmt not in ("svg", "png"):
        raise ValueError(f"unsupported figure format {spec.fmt!r}")
    Path(spec.out_dir).mkdir(parents=True, exist_ok=True)
    entries = []
    for title, fn in FIGURES:
        out, notice = fn(spec)
        if out is None:
            log.info("skipping %s: %s", title, notice)
        entries.append((title, out, notice))
    write_index(spec, entries, _provenance(spec))
    return 0
