"""Rendering from hand-built input files; nothing here runs a simulation."""

import json
import subprocess
import sys

import pytest

spde_report = pytest.importorskip("spde_report")

from spde_report import (  # noqa: E402
    ReportSpec,
    SchemaMismatch,
    read_path_series,
    render_report,
)

SWEEP_HEADER = ("schema_version,axis,value,config_hash,n_paths,n_blowup,"
                "blowup_fraction,ci_low,ci_high,mean_tau_hat\n")
SUMMARY_HEADER = ("schema_version,config_hash,seed,blew_up,tau_hat,terminal_sup,"
                  "sup_max,l2_max,h1_max,final_time\n")
HOLDER_HEADER = ("schema_version,direction,k,lag,moment,exponent_hat,r2,stderr,"
                 "mu_theory,eta_theory\n")
MOMENTS_HEADER = "schema_version,beta,k,value,mc_stderr,n_paths,qualitative\n"


def write_path_file(path, seed, blew_up):
    header = {
        "kind": "header",
        "schema_version": 1,
        "config_hash": "0123456789abcdef",
        "seed": seed,
        "generator_tag": "philox-blocked256-boxmuller-v1",
        "series_columns": ["t", "sup_norm", "l2_norm", "h1_norm",
                           "first_mode", "mid_value"],
        "config": {"schema_version": 1, "n_paths": 2, "seed_base": seed},
    }
    lines = [json.dumps(header)]
    for m in range(9):
        t = 0.05 * m
        sup = 5.0 * (4.0**m) if blew_up else 5.0 / (1.0 + m)
        lines.append(json.dumps(
            {"kind": "row", "values": [t, sup, sup / 2, sup * 3, sup / 2, sup]}
        ))
    if blew_up:
        rec = {"kind": "record", "blew_up": True, "tau_hat": 0.4,
               "threshold_ladder": [[100.0, 0.15]], "terminal_sup": None,
               "final_time": 0.4}
    else:
        rec = {"kind": "record", "blew_up": False, "tau_hat": None,
               "threshold_ladder": [], "terminal_sup": 5.0, "final_time": 0.4}
    lines.append(json.dumps(rec))
    path.write_text("\n".join(lines) + "\n")


def summary_rows(n_blown, n_calm):
    rows = []
    for i in range(n_blown):
        rows.append(f"1,0123456789abcdef,{100 + i},1,{0.2 + 0.03 * i},inf,"
                    f"1000000.0,500.0,9000.0,{0.2 + 0.03 * i}\n")
    for i in range(n_calm):
        rows.append(f"1,0123456789abcdef,{200 + i},0,inf,4.1,5.2,2.5,40.0,2.0\n")
    return rows


@pytest.fixture
def inputs(tmp_path):
    root = tmp_path / "in"
    root.mkdir()
    (root / "sweep.csv").write_text(
        SWEEP_HEADER
        + "1,epsilon,0.25,aaa,30,5,0.1667,0.0729,0.3348,0.31\n"
        + "1,epsilon,0.5,bbb,30,26,0.8667,0.7001,0.9480,0.25\n"
        + "1,epsilon,1.0,ccc,30,30,1.0,0.8847,1.0,0.19\n"
    )
    for name, blown in (("epsilon=0.25", 5), ("epsilon=0.5", 26)):
        sub = root / name
        sub.mkdir()
        (sub / "summary.csv").write_text(
            SUMMARY_HEADER + "".join(summary_rows(blown, 30 - blown))
        )
    (root / "holder.csv").write_text(
        HOLDER_HEADER
        + "".join(
            f"1,time,2.0,{2.0**-m},{0.3 * (2.0**-m) ** 0.5},0.25,0.999,0.01,0.5,0.25\n"
            for m in range(2, 8)
        )
        + "".join(
            f"1,space,2.0,{2.0**-m},{0.4 * (2.0**-m) ** 1.0},0.5,0.998,0.01,0.5,0.25\n"
            for m in range(2, 8)
        )
    )
    (root / "moments.csv").write_text(
        MOMENTS_HEADER
        + "".join(f"1,0.0,{k},{0.33 * k**0.5},0.01,2000,subgaussian\n"
                  for k in (2, 4, 6, 8))
    )
    write_path_file(root / "epsilon=0.25" / "path_00000100.jsonl", 100, True)
    write_path_file(root / "epsilon=0.25" / "path_00000200.jsonl", 200, False)
    return root


def test_smoke_renders_all_figures_and_index(inputs, tmp_path):
    out = tmp_path / "out"
    assert render_report(in_dir=inputs, out_dir=out, fmt="svg") == 0
    svgs = sorted(p.name for p in out.glob("*.svg"))
    assert svgs == [
        "blowup_fraction.svg",
        "holder_loglog.svg",
        "moment_growth.svg",
        "tau_histograms.svg",
        "trajectories.svg",
    ]
    for p in out.glob("*.svg"):
        assert p.stat().st_size > 0
    html = (out / "index.html").read_text()
    for name in svgs:
        assert name in html
    assert "Provenance" in html
    assert "0123456789abcdef" in html


def test_rerender_is_byte_identical(inputs, tmp_path):
    out = tmp_path / "out"
    render_report(in_dir=inputs, out_dir=out, fmt="svg")
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    render_report(in_dir=inputs, out_dir=out, fmt="svg")
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert second == first


def test_schema_version_mismatch_names_the_column(inputs, tmp_path):
    bad = SWEEP_HEADER + "9,epsilon,0.25,aaa,30,5,0.1667,0.0729,0.3348,0.31\n"
    (inputs / "sweep.csv").write_text(bad)
    with pytest.raises(SchemaMismatch, match="sweep.csv.*schema_version.*'9'"):
        render_report(in_dir=inputs, out_dir=tmp_path / "out")


def test_missing_column_names_the_column(inputs, tmp_path):
    (inputs / "sweep.csv").write_text(
        "schema_version,axis,value\n1,epsilon,0.25\n"
    )
    with pytest.raises(SchemaMismatch, match="missing column blowup_fraction"):
        render_report(in_dir=inputs, out_dir=tmp_path / "out")


def test_empty_sweep_renders_placeholders(tmp_path):
    root = tmp_path / "in"
    root.mkdir()
    (root / "sweep.csv").write_text(SWEEP_HEADER)
    out = tmp_path / "out"
    assert render_report(in_dir=root, out_dir=out) == 0
    assert not list(out.glob("*.svg"))
    html = (out / "index.html").read_text()
    assert html.count('class="placeholder"') == 5
    assert "sweep.csv has no data rows" in html


def test_no_inputs_is_an_error(tmp_path):
    empty = tmp_path / "in"
    empty.mkdir()
    with pytest.raises(ValueError, match="no report inputs"):
        ReportSpec.from_directory(empty, tmp_path / "out")


def test_calm_path_draws_no_blowup_marker(tmp_path):
    root = tmp_path / "in"
    root.mkdir()
    write_path_file(root / "path_00000001.jsonl", 1, False)
    out = tmp_path / "out"
    assert render_report(in_dir=root, out_dir=out) == 0
    # svg text stays literal under svg.fonttype none, so labels are greppable
    svg = (out / "trajectories.svg").read_text()
    assert "blowup at" not in svg

    write_path_file(root / "path_00000002.jsonl", 2, True)
    assert render_report(in_dir=root, out_dir=out) == 0
    svg = (out / "trajectories.svg").read_text()
    assert "blowup at" in svg


def test_record_fields_decode(inputs):
    header, ts, sups, record = read_path_series(
        inputs / "epsilon=0.25" / "path_00000100.jsonl"
    )
    assert header["seed"] == 100
    assert len(ts) == len(sups) == 9
    assert record["blew_up"] is True and record["tau_hat"] == 0.4


def test_cli_renders_png_and_rejects_bad_schema(inputs, tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "spde_report.cli",
         "--in", str(inputs), "--out", str(out), "--format", "png"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    pngs = list(out.glob("*.png"))
    assert len(pngs) == 5
    for p in pngs:
        assert p.read_bytes()[:4] == b"\x89PNG"

    (inputs / "sweep.csv").write_text(
        SWEEP_HEADER + "9,epsilon,0.25,aaa,30,5,0.1667,0.0729,0.3348,0.31\n"
    )
    proc = subprocess.run(
        [sys.executable, "-m", "spde_report.cli",
         "--in", str(inputs), "--out", str(tmp_path / "out2")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "schema_version" in proc.stderr
