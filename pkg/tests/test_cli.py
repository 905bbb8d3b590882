import csv
import hashlib
import json
import subprocess
import sys

import pytest

from stable_op_lab.cli import config_hash, run, thread_cap

FL1 = {"canonical": "fractional_laplacian", "n": 1, "s": 0.5}
AXIS2 = {"canonical": "axis_sum", "n": 2, "s": 0.75}
# raw atoms with unit weights: A(xi) = |xi_1|^1.5 + |xi_2|^1.5, multiplier c_s A(xi)
RAW2 = {"s": 0.75, "measure": {"kind": "atomic", "atoms": [{"theta": [1, 0], "w": 1}, {"theta": [0, 1], "w": 1}]}}


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(p)

    return write


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def check_manifest(out):
    m = manifest(out)
    on_disk = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file() and p.name != "manifest.json"}
    assert set(m["files"]) == on_disk
    for rel, digest in m["files"].items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
    assert m["config_hash"] == config_hash(m["config"])
    assert {"verdicts", "error_bounds", "passed", "wall_clock_seconds"} <= set(m)
    return m


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_symbol(files, tmp_path):
    out = tmp_path / "sym"
    assert run(["symbol", "--op", files("op.json", AXIS2), "--out", str(out), "--samples", "8"]) == 0
    rows = read_csv(out / "symbol.csv")
    assert rows[0] == ["xi1", "xi2", "A", "multiplier"]
    assert len(rows) == 9
    # the canonical multiplier at xi = (1, 0) is |xi_1|^1.5 + |xi_2|^1.5 = 1
    assert float(rows[1][3]) == pytest.approx(1.0)
    check_manifest(out)
    raw = tmp_path / "raw"
    assert run(["symbol", "--op", files("raw.json", RAW2), "--out", str(raw), "--samples", "8"]) == 0
    report = json.loads((raw / "report.json").read_text())
    first = read_csv(raw / "symbol.csv")[1]
    assert float(first[3]) == pytest.approx(report["c_s"] * float(first[2]))


def test_heat_kernel_1d(files, tmp_path):
    out = tmp_path / "hk"
    assert run(["heat-kernel", "--op", files("op.json", FL1), "--out", str(out), "--extent", "400", "--grid-points", "65536"]) == 0
    rows = read_csv(out / "p.csv")
    assert rows[0] == ["x", "value"]
    report = json.loads((out / "report.json").read_text())
    assert report["mass"] == pytest.approx(1.0, abs=1e-6)
    m = check_manifest(out)
    assert m["passed"] and m["verdicts"]["mass"]


def test_heat_checks(files, tmp_path):
    out = tmp_path / "hc"
    assert run(["heat-checks", "--op", files("op.json", FL1), "--out", str(out), "--extent", "400", "--grid-points", "65536"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert {"mass", "moment", "tail_bound", "lipschitz", "selfsimilarity"} <= set(report)


def test_apply(files, tmp_path):
    out = tmp_path / "ap"
    field = files("u.json", {"kind": "halfspace_power", "exponent": 0.75, "normal": [0, 1]})
    pts = files("pts.csv", "x1,x2\n0.3,0.7\n0.0,1.0\n")
    assert run(["apply", "--op", files("op.json", AXIS2), "--field", field, "--points", pts, "--tol", "1e-3", "--out", str(out)]) == 0
    rows = read_csv(out / "Lu.csv")
    assert rows[0] == ["x1", "x2", "Lu", "err_bound"]
    assert all(abs(float(r[2])) <= 1e-3 for r in rows[1:])


def test_apply_budget_failure_exits_two(files, tmp_path):
    out = tmp_path / "ap"
    field = files("u.json", {"kind": "halfspace_power", "exponent": 0.75, "normal": [0, 1]})
    pts = files("pts.csv", "x1,x2\n0.3,0.7\n")
    code = run(["apply", "--op", files("op.json", AXIS2), "--field", field, "--points", pts, "--tol", "1e-15", "--out", str(out)])
    assert code == 2
    assert manifest(out)["passed"] is False


def solve_problem(h=1 / 64, **extra):
    return {"operator": FL1, "domain": {"kind": "interval", "a": -1, "b": 1}, "f": -1.0, "h": h, "probes": [[0.0]], **extra}


def test_solve_and_measure(files, tmp_path):
    out = tmp_path / "solve"
    assert run(["solve", "--problem", files("p.json", solve_problem(1 / 128)), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["residual_check"] <= 0.02
    assert report["max_u"] == pytest.approx(1.0, abs=0.02)
    check_manifest(out)
    u = str(out / "u.csv")

    m1 = tmp_path / "m1"
    assert run(["measure", "--field", u, "--mode", "interior", "--center", "0.5", "--out", str(m1)]) == 0
    body = json.loads((m1 / "report.json").read_text())
    assert {"scales", "profile", "exponent"} <= set(body)

    m2 = tmp_path / "m2"
    dom = files("d.json", {"kind": "interval", "a": -1, "b": 1})
    assert run(["measure", "--field", u, "--mode", "boundary", "--s", "0.5", "--band", "0.05,0.5", "--domain", dom, "--out", str(m2)]) == 0
    assert (m2 / "ratio.csv").is_file()

    m3 = tmp_path / "m3"
    assert run(["measure", "--field", u, "--mode", "coefficient", "--s", "0.5", "--z", "-1", "--nu", "1", "--out", str(m3)]) == 0
    assert json.loads((m3 / "report.json").read_text())["q_limit"] > 0


def test_solve_random_probes_follow_seed(files, tmp_path):
    prob = files("p.json", solve_problem(probes=3))
    a, b, c = (tmp_path / k for k in "abc")
    for out, seed in ((a, "1"), (b, "1"), (c, "2")):
        assert run(["solve", "--problem", prob, "--seed", seed, "--out", str(out)]) == 0
    probes = [json.loads((d / "report.json").read_text())["probes"] for d in (a, b, c)]
    assert probes[0] == probes[1] != probes[2]


def test_determinism(files, tmp_path):
    prob = files("p.json", solve_problem())
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["solve", "--problem", prob, "--out", str(out)]) == 0
    for name in ("u.csv", "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = manifest(a), manifest(b)
    ma.pop("wall_clock_seconds"), mb.pop("wall_clock_seconds")
    assert ma == mb


def test_outputs_are_lf_and_sorted(files, tmp_path):
    out = tmp_path / "s"
    run(["symbol", "--op", files("op.json", FL1), "--out", str(out)])
    for p in out.iterdir():
        assert b"\r\n" not in p.read_bytes()
    text = (out / "report.json").read_text()
    keys = list(json.loads(text))
    assert keys == sorted(keys)


def test_malformed_json_exits_one(files, tmp_path, capsys):
    out = tmp_path / "bad"
    assert run(["symbol", "--op", files("op.json", "{not json"), "--out", str(out)]) == 1
    assert "ConfigError" in capsys.readouterr().err
    assert not (out / "manifest.json").exists()


def test_missing_field_named(files, tmp_path, capsys):
    bad = {"s": 0.5, "measure": {"kind": "atomic", "atoms": [{"w": 1.0}]}}
    assert run(["symbol", "--op", files("op.json", bad), "--out", str(tmp_path / "o")]) == 1
    assert "theta" in capsys.readouterr().err


def test_degenerate_measure_exits_one(files, tmp_path, capsys):
    op = {"s": 0.5, "measure": {"kind": "atomic", "atoms": [{"theta": [1, 0], "w": 1}, {"theta": [-1, 0], "w": 1}]}}
    prob = {"operator": op, "domain": {"kind": "ball", "center": [0, 0], "radius": 1}, "f": -1, "h": 0.25}
    assert run(["solve", "--problem", files("p.json", prob), "--out", str(tmp_path / "o")]) == 1
    assert "DegenerateMeasure" in capsys.readouterr().err


def test_missing_file_and_bad_tol(tmp_path):
    assert run(["symbol", "--op", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 1
    assert run(["symbol", "--op", str(tmp_path / "nope.json"), "--tol", "-1"]) == 1
    assert run(["frobnicate"]) == 1


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("STABLE_OP_LAB_THREADS", raising=False)
    assert thread_cap() == 1
    monkeypatch.setenv("STABLE_OP_LAB_THREADS", "4")
    assert thread_cap() == 4
    monkeypatch.setenv("STABLE_OP_LAB_THREADS", "zero")
    with pytest.raises(Exception, match="STABLE_OP_LAB_THREADS"):
        thread_cap()


def test_verify_halfspace(tmp_path):
    out = tmp_path / "v"
    assert run(["verify", "--suite", "halfspace", "--out", str(out)]) == 0
    m = check_manifest(out)
    assert len(m["verdicts"]) == 4
    for name in m["verdicts"]:
        assert (out / name / "verdict.json").is_file()


@pytest.mark.slow
def test_verify_all(tmp_path, monkeypatch):
    monkeypatch.setenv("STABLE_OP_LAB_THREADS", "4")
    out = tmp_path / "all"
    assert run(["verify", "--suite", "all", "--out", str(out)]) == 0
    m = check_manifest(out)
    assert len(m["verdicts"]) >= 5 and m["passed"]


def test_console_entry_point(tmp_path):
    out = tmp_path / "e"
    op = tmp_path / "op.json"
    op.write_text(json.dumps(FL1))
    proc = subprocess.run([sys.executable, "-m", "stable_op_lab.cli", "symbol", "--op", str(op), "--out", str(out)], capture_output=True)
    assert proc.returncode == 0
    assert (out / "manifest.json").is_file()
