"""Command line front end.

Subcommands:

  simulate       run one path and write it as JSONL
  sweep          run a parameter sweep from a TOML config file
  aggregate      combine path files into summary and ensemble CSVs
  verify-kernel  run the Green function bound battery, write a CSV report
  holder         fit regularity exponents from path files, write a CSV table
  moments        estimate damped moment norms from path files, write a CSV

Coefficient and initial data specs on the command line are compact strings,
``family:key=value,key=value``, e.g. ``log_critical:theta1=0,theta2=1`` or
``bounded:shape=cos,amplitude=1``.  The env var SPDE_LAB_JOBS sets the
default worker count where --jobs applies.
"""

from __future__ import annotations

import argparse
import glob as _glob
import sys
from pathlib import Path

from .diagnostics import holder_fit, moment_norm_estimate
from .experiment import (
    SCHEMA_VERSION,
    ExperimentConfig,
    aggregate,
    initial_data_from_config,
    load_config,
    read_path_file,
    run_path,
    sweep,
    write_path_file,
    write_summary,
)
from .experiment import _write_csv
from .coefficients import drift_from_config, diffusion_from_config
from .heat_kernel import default_battery
from .noise_field import GridSpec


def _parse_kv_spec(text: str, tag_key: str) -> dict:
    """Parse 'name:key=val,key=val' into a config dict keyed on tag_key."""
    name, _, rest = text.partition(":")
    name = name.strip()
    if not name:
        raise ValueError(f"empty {tag_key} in spec {text!r}")
    cfg = {tag_key: name}
    if rest.strip():
        for part in rest.split(","):
            key, sep, val = part.partition("=")
            if not sep:
                raise ValueError(f"expected key=value, got {part!r} in {text!r}")
            key = key.strip()
            val = val.strip()
            try:
                cfg[key] = float(val)
            except ValueError:
                cfg[key] = val
    return cfg


def _parse_floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _glob_paths(pattern: str) -> list:
    files = sorted(_glob.glob(pattern))
    if not files:
        raise SystemExit(f"no files match {pattern!r}")
    return files


def _cmd_simulate(args) -> int:
    grid = GridSpec(args.nx, args.dt, args.t_end, args.relax_dt_gate)
    config = ExperimentConfig(
        grid=grid,
        drift=drift_from_config(_parse_kv_spec(args.drift, "family")),
        diffusion=diffusion_from_config(_parse_kv_spec(args.sigma, "family")),
        initial_data=initial_data_from_config(_parse_kv_spec(args.initial, "kind")),
        n_paths=1,
        seed_base=args.seed,
        ladder=_parse_floats(args.ladder) if args.ladder else (),
        blowup_threshold=args.blowup_threshold,
        out_stride=args.out_stride,
        snapshot_times=_parse_floats(args.snapshot_times) if args.snapshot_times else (),
        store_fields=args.store_fields,
        outputs=str(Path(args.out).parent),
    )
    result = run_path(config, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_path_file(out, config, result)
    rec = result.record
    print(
        f"wrote {out}  seed={args.seed}  blew_up={rec.blew_up}  "
        f"tau_hat={rec.tau_hat:.6g}  terminal_sup={rec.terminal_sup:.6g}"
    )
    return 0


def _cmd_sweep(args) -> int:
    base = load_config(args.config)
    if args.out:
        base = ExperimentConfig.from_config(dict(base.to_config(), outputs=args.out))
    result = sweep(base, args.axis, _parse_floats(args.values), jobs=args.jobs)
    print(f"sweep over {result.axis}: {len(result.points)} points")
    for p in result.points:
        print(
            f"  {result.axis}={p.value:g}  fraction={p.blowup_fraction:.4f}  "
            f"ci=[{p.ci_low:.4f},{p.ci_high:.4f}]  n={p.n_paths}"
        )
    print(f"wrote {Path(base.outputs) / 'sweep.csv'}")
    return 0


def _cmd_aggregate(args) -> int:
    agg = aggregate(args.pattern)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_summary(out_dir, agg)
    ens = agg.ensemble
    print(
        f"aggregated {ens['n_paths']} paths  config_hash={agg.config_hash}  "
        f"blowup_fraction={ens['blowup_fraction']:.4f}"
    )
    print(f"wrote {out_dir / 'summary.csv'} and {out_dir / 'ensemble.csv'}")
    return 0


def _cmd_verify_kernel(args) -> int:
    reports = default_battery()
    param_keys = sorted({k for r in reports for k in r.params})
    columns = (
        ["schema_version", "lemma_id"]
        + param_keys
        + ["lhs", "rhs_bound", "margin", "quadrature_error", "verdict"]
    )
    rows = []
    for r in reports:
        row = {
            "schema_version": SCHEMA_VERSION,
            "lemma_id": r.lemma_id,
            "lhs": r.lhs,
            "rhs_bound": r.rhs_bound,
            "margin": r.margin,
            "quadrature_error": r.quadrature_error,
            "verdict": r.verdict,
        }
        for k in param_keys:
            row[k] = r.params.get(k, "")
        rows.append(row)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, columns, rows)
    n_fail = sum(r.verdict == "fail" for r in reports)
    n_inc = sum(r.verdict == "inconclusive" for r in reports)
    print(f"{len(reports)} bounds: {len(reports) - n_fail - n_inc} pass, "
          f"{n_inc} inconclusive, {n_fail} fail")
    print(f"wrote {out}")
    return 1 if n_fail else 0


def _cmd_holder(args) -> int:
    replays = [read_path_file(f) for f in _glob_paths(args.paths)]
    lag_range = None
    if args.lag_lo is not None or args.lag_hi is not None:
        if args.lag_lo is None or args.lag_hi is None:
            raise SystemExit("--lag-lo and --lag-hi must be given together")
        lag_range = (args.lag_lo, args.lag_hi)
    fit = holder_fit(
        replays,
        args.direction,
        k=args.k,
        lag_range=lag_range,
        t_star=args.t_star,
        alpha=args.alpha,
        min_paths=args.min_paths,
    )
    columns = (
        "schema_version",
        "direction",
        "k",
        "lag",
        "moment",
        "exponent_hat",
        "r2",
        "stderr",
        "mu_theory",
        "eta_theory",
    )
    rows = [
        {
            "schema_version": SCHEMA_VERSION,
            "direction": fit.direction,
            "k": fit.k,
            "lag": lag,
            "moment": moment,
            "exponent_hat": fit.exponent_hat,
            "r2": fit.r2,
            "stderr": fit.stderr,
            "mu_theory": fit.mu_theory,
            "eta_theory": fit.eta_theory,
        }
        for lag, moment in zip(fit.lags, fit.moments)
    ]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, columns, rows)
    print(
        f"{fit.direction} exponent {fit.exponent_hat:.4f} +/- {fit.stderr:.4f} "
        f"(r2={fit.r2:.4f}, {fit.n_lags} lags, {len(replays)} paths)"
    )
    print(f"wrote {out}")
    return 0


def _cmd_moments(args) -> int:
    replays = [read_path_file(f) for f in _glob_paths(args.paths)]
    columns = (
        "schema_version",
        "beta",
        "k",
        "value",
        "mc_stderr",
        "n_paths",
        "qualitative",
    )
    rows = []
    for k in _parse_floats(args.ks):
        est = moment_norm_estimate(
            replays, args.beta, k, n_boot=args.n_boot, boot_seed=args.boot_seed
        )
        rows.append(
            {
                "schema_version": SCHEMA_VERSION,
                "beta": est.beta,
                "k": est.k,
                "value": est.value,
                "mc_stderr": est.mc_stderr,
                "n_paths": est.n_paths,
                "qualitative": est.qualitative,
            }
        )
        print(f"k={est.k:g}  estimate={est.value:.6g}  stderr={est.mc_stderr:.3g}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, columns, rows)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spde-lab",
        description="Numerical laboratory for blowup in 1D stochastic "
        "reaction-diffusion equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one path and write JSONL")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--drift", required=True, metavar="SPEC",
                   help="e.g. log_critical:theta1=0,theta2=1")
    p.add_argument("--sigma", required=True, metavar="SPEC",
                   help="e.g. constant:sigma0=1")
    p.add_argument("--initial", default="sine:amplitude=1,mode=1", metavar="SPEC",
                   help="sine:..., bump:..., default sine:amplitude=1,mode=1")
    p.add_argument("--ladder", default="", help="comma separated levels")
    p.add_argument("--blowup-threshold", type=float, default=1e6)
    p.add_argument("--out-stride", type=int, default=1)
    p.add_argument("--snapshot-times", default="", help="comma separated times")
    p.add_argument("--store-fields", action="store_true")
    p.add_argument("--relax-dt-gate", action="store_true",
                   help="allow dt up to dx instead of dx^2")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter sweep from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma separated values")
    p.add_argument("--out", default=None, help="override the outputs directory")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: SPDE_LAB_JOBS or 1)")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("aggregate", help="combine path files into summaries")
    p.add_argument("pattern", help="glob of path_*.jsonl files")
    p.add_argument("--out", default=".", help="directory for the CSVs")
    p.set_defaults(fn=_cmd_aggregate)

    p = sub.add_parser("verify-kernel", help="run the Green function bound battery")
    p.add_argument("--out", default="bound_battery.csv")
    p.set_defaults(fn=_cmd_verify_kernel)

    p = sub.add_parser("holder", help="fit regularity exponents from path files")
    p.add_argument("--paths", required=True, help="glob of path_*.jsonl files")
    p.add_argument("--direction", required=True, choices=("space", "time"))
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--t-star", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--lag-lo", type=float, default=None)
    p.add_argument("--lag-hi", type=float, default=None)
    p.add_argument("--min-paths", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_holder)

    p = sub.add_parser("moments", help="estimate damped moment norms")
    p.add_argument("--paths", required=True, help="glob of path_*.jsonl files")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--ks", default="2", help="comma separated moment orders")
    p.add_argument("--n-boot", type=int, default=200)
    p.add_argument("--boot-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_moments)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
