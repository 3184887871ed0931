from __future__ import annotations

import csv
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from pacal.cli import main
from pacal.gallery import make
from oracles import rot


def write_config(path, space, **extra):
    cfg = {"space": space, **extra}
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture
def flat_cfg(tmp_path):
    return write_config(tmp_path / "flat.json", {"kind": "flat", "dim": 2}, grid=[3, 2])


@pytest.fixture
def rot_cfg(tmp_path):
    return write_config(tmp_path / "rot.json", {"kind": "rotation2d", "dim": 2,
                                                 "params": {"omega": [1.0, 0.0]}},
                        grid=[2, 3], output={"format": "both", "path": str(tmp_path / "x")})


def test_curvature_flat_all_zero(flat_cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["curvature", "--config", flat_cfg, "--out", str(out)]) == 0
    header, rows = read_csv(out / "curvature.csv")
    assert header[:2] == ["x0", "x1"] and header[-1] == "status"
    assert "Gamma_1_0_1" in header and "R_1_0_1_0" in header and "C_0_1_1_1" in header
    assert len(header) == 2 + 8 + 8 + 16 + 16 + 1
    assert len(rows) == 6
    for row in rows:
        assert all(float(v) == 0.0 for v in row[2:-1]) and row[-1] == "ok"
    # cell centres in lexicographic order: x0 outer, x1 inner
    xs = [(float(r[0]), float(r[1])) for r in rows]
    assert xs == sorted(xs) and xs[0] == (-4 + 8 / 6, -2.0)


def test_curvature_rotation_matches_oracle(rot_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    start = time.perf_counter()
    assert main(["curvature", "--config", rot_cfg, "--out", str(out)]) == 0
    header, rows = read_csv(out / "curvature.csv")
    idx = {h: i for i, h in enumerate(header)}
    space = make("rotation2d", omega=[1.0, 0.0])
    e = np.eye(2)
    for row in rows:
        p = np.array([float(row[0]), float(row[1])])
        assert max(abs(float(row[idx[h]])) for h in header if h.startswith("R_")) <= 1e-8
        for i in range(2):
            for j in range(2):
                t = space.oracle.torsion(p, e[i], e[j])
                for k in range(2):
                    assert abs(float(row[idx[f"T_{k}_{i}_{j}"]]) - t[k]) <= 1e-8
    data = json.loads((out / "curvature.json").read_text())
    assert data["oracle_max_abs_deviation"]["R"] <= 1e-8
    assert "oracle max abs deviation" in capsys.readouterr().out
    assert time.perf_counter() - start < 5.0


def test_csv_floats_round_trip(rot_cfg, tmp_path):
    out = tmp_path / "out"
    main(["curvature", "--config", rot_cfg, "--out", str(out)])
    _, rows = read_csv(out / "curvature.csv")
    for text in rows[0][:-1]:
        assert repr(float(text)) == text


def test_curvature_parallel_is_byte_identical(rot_cfg, tmp_path, monkeypatch):
    blobs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("PACAL_THREADS", threads)
        out = tmp_path / f"t{threads}"
        main(["curvature", "--config", rot_cfg, "--out", str(out)])
        blobs.append(((out / "curvature.csv").read_bytes(), (out / "curvature.json").read_bytes()))
    assert blobs[0] == blobs[1]


def test_bad_thread_count(rot_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("PACAL_THREADS", "zero")
    assert main(["curvature", "--config", rot_cfg, "--out", str(tmp_path)]) == 2


def test_geodesic_flat_and_svg(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"kind": "flat", "dim": 2})
    out = tmp_path / "g"
    assert main(["geodesic", "--config", cfg, "--out", str(out), "--p0", "0,0", "--v", "1,2",
                 "--steps", "50", "--svg"]) == 0
    _, rows = read_csv(out / "geodesic.csv")
    assert [float(v) for v in rows[0]] == [0.0, 0.0, 0.0]
    assert np.allclose([float(v) for v in rows[-1]], [1.0, 1.0, 2.0], atol=1e-12)
    svg = (out / "geodesic.svg").read_text()
    assert 'viewBox="0 0 800 800"' in svg and "<polyline" in svg
    # origin maps to the centre of the view, (1, 2) to (500, 200)
    pts = svg.split('points="')[1].split('"')[0].split()
    assert pts[0] == "400.000,400.000" and pts[-1] == "500.000,200.000"


def test_geodesic_scaling_endpoint(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", {"kind": "scaling", "dim": 2})
    out = tmp_path / "g"
    assert main(["geodesic", "--config", cfg, "--out", str(out), "--p0", "0,0", "--v", "1,0",
                 "--t-end", "0.5", "--steps", "2000"]) == 0
    _, rows = read_csv(out / "geodesic.csv")
    assert abs(float(rows[-1][1]) - np.log(2)) <= 1e-8
    assert "residual" in capsys.readouterr().out


def test_geodesic_errors(tmp_path, capsys):
    cfg3 = write_config(tmp_path / "f3.json", {"kind": "flat", "dim": 3})
    assert main(["geodesic", "--config", cfg3, "--out", str(tmp_path), "--v", "1,0,0", "--svg"]) == 2
    cfg = write_config(tmp_path / "s.json", {"kind": "scaling", "dim": 2})
    assert main(["geodesic", "--config", cfg, "--out", str(tmp_path), "--v", "1,0",
                 "--t-end", "2"]) == 3
    assert "parameter=" in capsys.readouterr().err
    assert main(["geodesic", "--config", cfg, "--out", str(tmp_path), "--v", "1,0,4"]) == 2


def test_transport_loops(tmp_path, capsys):
    flat = write_config(tmp_path / "f.json", {"kind": "flat", "dim": 2})
    assert main(["transport", "--config", flat, "--out", str(tmp_path / "a"), "--v", "1,0",
                 "--path", "0,0;1,0;1,1;0,1;0,0"]) == 0
    assert json.loads((tmp_path / "a" / "transport.json").read_text())["loop_defect"] == 0.0
    rot_cfg = write_config(tmp_path / "r.json", {"kind": "rotation2d", "dim": 2})
    assert main(["transport", "--config", rot_cfg, "--out", str(tmp_path / "b"), "--v", "1,0",
                 "--steps", "1,0;0,1;-1,0;0,-1", "--start", "0,0"]) == 0
    report = json.loads((tmp_path / "b" / "transport.json").read_text())
    pts = [np.zeros(2)]
    v = np.array([1.0, 0.0])
    for u in ([1, 0], [0, 1], [-1, 0], [0, -1]):
        q = pts[-1] + rot(pts[-1][0]) @ np.array(u, dtype=float)
        v = rot(q[0] - pts[-1][0]) @ v
        pts.append(q)
    assert np.allclose(report["final"], v, atol=1e-13)
    assert report["closed"] is False and report["loop_defect"] is None
    assert "omitted" in capsys.readouterr().out
    # a chart-point square loop closes exactly
    assert main(["transport", "--config", rot_cfg, "--out", str(tmp_path / "c"), "--v", "1,0",
                 "--path", "0,0;1,0;1,1;0,1;0,0"]) == 0
    report = json.loads((tmp_path / "c" / "transport.json").read_text())
    assert report["closed"] is True and report["loop_defect"] == pytest.approx(0.0, abs=1e-12)


def test_transport_domain_exit(tmp_path, capsys):
    flat = write_config(tmp_path / "f.json", {"kind": "flat", "dim": 2})
    assert main(["transport", "--config", flat, "--out", str(tmp_path), "--v", "1,0",
                 "--steps", "3,0;3,0", "--start", "0,0"]) == 3
    assert "step=1" in capsys.readouterr().err


def test_flatness_reports(tmp_path):
    flat = write_config(tmp_path / "f.json", {"kind": "flat", "dim": 2})
    assert main(["flatness", "--config", flat, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "flatness.json").read_text())
    assert rep["flat"] is True and rep["max_residual"] == 0.0
    rot_cfg = write_config(tmp_path / "r.json", {"kind": "rotation2d", "dim": 2})
    main(["flatness", "--config", rot_cfg, "--out", str(tmp_path), "--samples", "20"])
    rep = json.loads((tmp_path / "flatness.json").read_text())
    assert rep["flat"] is False and rep["witness"] is not None


# identities whose flat-space value is a finite algebraic expression, not a limit
FLAT_EXACT_SUITES = {"discrete"}
LIMIT_FREE = {"gradient_solve_vs_normal_equations"}


def _flat_report(tmp_path):
    flat = write_config(tmp_path / "f.json", {"kind": "flat", "dim": 2})
    code = main(["verify", "--config", flat, "--out", str(tmp_path / "a")])
    return code, json.loads((tmp_path / "a" / "verify.json").read_text())


def test_verify_flat_all_pass(tmp_path):
    code, rep = _flat_report(tmp_path)
    assert code == 0
    for ident in rep["identities"]:
        assert ident["passed"], ident
        if ident["relation"] == "<=" and (ident["suite"] in FLAT_EXACT_SUITES
                                          or ident["name"] in LIMIT_FREE):
            assert ident["value"] <= 1e-12, ident


@pytest.mark.xfail(strict=True, reason="limit-based identities carry a Richardson roundoff "
                   "floor of a few 1e-12, and the transported-value check is an O(tau) "
                   "convergence quantity rather than a residual")
def test_verify_flat_every_residual_below_1e12(tmp_path):
    _, rep = _flat_report(tmp_path)
    assert all(i["value"] <= 1e-12 for i in rep["identities"] if i["relation"] == "<=")


def test_verify_exit_codes(tmp_path):
    rot_cfg = write_config(tmp_path / "r.json", {"kind": "rotation2d", "dim": 2})
    assert main(["verify", "--config", rot_cfg, "--out", str(tmp_path / "b"), "--suite", "discrete"]) == 0
    rep = json.loads((tmp_path / "b" / "verify.json").read_text())
    names = {i["name"]: i for i in rep["identities"]}
    assert names["torsion_displacement_bracket"]["value"] <= 1e-12
    assert names["riemann_displacement2_bracket"]["value"] <= 1e-12
    kink = write_config(tmp_path / "k.json", {"kind": "kinked", "dim": 2})
    assert main(["verify", "--config", kink, "--out", str(tmp_path / "c"), "--suite", "infinitesimal"]) == 4
    rep = json.loads((tmp_path / "c" / "verify.json").read_text())
    assert any(not i["passed"] for i in rep["identities"])


def test_limits_tables(tmp_path, capsys):
    flat = write_config(tmp_path / "f.json", {"kind": "flat", "dim": 2})
    assert main(["limits", "--config", flat, "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "limits.csv")
    assert all(float(v) == 0.0 for r in rows for v in r[3:5])
    capsys.readouterr()
    rot_cfg = write_config(tmp_path / "r.json", {"kind": "rotation2d", "dim": 2})
    assert main(["limits", "--config", rot_cfg, "--out", str(tmp_path), "--p", "0.3,0.1",
                 "--u", "1,0.5", "--v", "0,1"]) == 0
    text = capsys.readouterr().out
    order = float(text.split("raw quotient order (log-log slope): ")[1].split()[0])
    assert abs(order - 1.0) < 0.05
    _, rows = read_csv(tmp_path / "limits.csv")
    d_orders = [float(r[-1]) for r in rows if r[0] == "+" and r[-1] and int(r[1]) <= 3]
    assert max(d_orders) > 1.5
    kink = write_config(tmp_path / "k.json", {"kind": "kinked", "dim": 2})
    assert main(["limits", "--config", kink, "--out", str(tmp_path), "--p", "0,0",
                 "--u", "1,0", "--v", "0,1"]) == 0
    assert "NOT CONVERGED" in capsys.readouterr().out


def test_limits_named_field(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"kind": "rotation2d", "dim": 2},
                       fields={"w": ["x1", "1"], "h": "x0"})
    assert main(["limits", "--config", cfg, "--out", str(tmp_path), "--field", "w"]) == 0
    assert main(["limits", "--config", cfg, "--out", str(tmp_path), "--field", "nope"]) == 2
    assert main(["limits", "--config", cfg, "--out", str(tmp_path), "--field", "h"]) == 2


@pytest.mark.parametrize("cfg", [
    {"space": {"kind": "flat", "dim": 2}, "limt": {}},
    {"space": {"kind": "flat", "dim": 2, "colour": 1}},
    {"space": {"kind": "torus", "dim": 2}},
    {"space": {"kind": "flat", "dim": 2}, "grid": [0, 3]},
    {"space": {"kind": "flat", "dim": 2}, "grid": [3]},
    {"space": {"kind": "flat", "dim": 2}, "limit": {"levels": 40}},
    {"space": {"kind": "flat", "dim": 2}, "fields": {"f": "x7"}},
    {"space": {"kind": "flat", "dim": 2, "domain": {"min": [0], "max": [1]}}},
    {"space": {"kind": "scaling", "dim": 2, "params": {"mu": [1, 0]}}},
])
def test_config_errors_exit_2(tmp_path, cfg):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert main(["flatness", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_missing_and_malformed_config(tmp_path):
    assert main(["flatness", "--config", str(tmp_path / "none.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["flatness", "--config", str(bad)]) == 2


def test_console_script_runs(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"kind": "flat", "dim": 2}, grid=[1, 1])
    proc = subprocess.run([sys.executable, "-m", "pacal.cli", "curvature", "--config", cfg,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "curvature.csv").exists()
