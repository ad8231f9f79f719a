import csv
import io
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from coalpp import cli
from coalpp.cli import main, write_atomic


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=np.int64)


def test_simulate_shape(capsys):
    code, out, err = run(["simulate", "--n", "100", "--reps", "10", "--seed", "1",
                          "--rects", "0,1,0,1"], capsys)
    assert code == 0
    header, body = read_csv(out)
    assert header == ["replicate", "rect0_pi_s", "rect0_pi_k"]
    assert body.shape == (10, 3)
    assert body[:, 0].tolist() == list(range(10))
    assert np.all(body[:, 2] <= body[:, 1])
    assert json.loads(err)["command"] == "simulate"


def test_simulate_not_disjoint(capsys):
    code, _, err = run(["simulate", "--rects", "0,1,0,1;0.5,1.5,0,1"], capsys)
    assert code == 2
    assert "--rects" in err and "not-disjoint" in err


def test_simulate_argument_errors(capsys):
    assert run(["simulate", "--rects", "0,1,0"], capsys)[0] == 2
    code, _, err = run(["simulate", "--rects", "0,2,0,1", "--t1-max", "1"], capsys)
    assert code == 2 and "--t1-max" in err
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--n", "abc", "--rects", "0,1,0,1"])
    assert exc.value.code == 2


def test_simulate_scale_limit(capsys):
    code, _, err = run(["simulate", "--n", "100000", "--rects", "0,1,0,1.5"], capsys)
    assert code == 3 and "scale-limit" in err


def test_simulate_two_leaf_mean(capsys):
    code, out, _ = run(["simulate", "--n", "2", "--reps", "1000", "--seed", "7",
                        "--rects", "0,1,0,1"], capsys)
    assert code == 0
    s = read_csv(out)[1][:, 1]
    assert abs(s.mean() - 1 / math.log(2)) <= 3 * s.std(ddof=1) / math.sqrt(s.size)


def test_simulate_writes_file_and_manifest(tmp_path, capsys):
    path = tmp_path / "counts.csv"
    code, out, _ = run(["simulate", "--n", "100", "--reps", "5", "--rects", "0,1,0,1",
                        "--out", str(path)], capsys)
    assert code == 0 and out == ""
    assert len(path.read_text().splitlines()) == 6
    manifest = json.loads((tmp_path / "counts.csv.manifest.json").read_text())
    assert manifest["parameters"]["seed"] == 0x5EED
    assert {"command", "parameters", "seed", "version", "duration_s"} <= set(manifest)
    assert sorted(os.listdir(tmp_path)) == ["counts.csv", "counts.csv.manifest.json"]


def test_thread_count_does_not_change_csv(capsys):
    argv = ["simulate", "--n", "1000", "--reps", "200", "--rects", "0,1,0,1;1,2,0.5,1"]
    a = run(argv + ["--threads", "1"], capsys)[1]
    b = run(argv + ["--threads", "3"], capsys)[1]
    assert a == b


def test_verify_ewens_passes(capsys):
    code, out, err = run(["verify", "--suite", "ewens", "--reps", "100000", "--seed", "3"], capsys)
    assert code == 0
    body = json.loads(out)
    assert set(body) == {"manifest", "reports"}
    assert len(body["reports"]) == len(cli.EWENS_CASES)
    assert err.count("[PASS]") == len(cli.EWENS_CASES)


def test_verify_rejects_small_reps(capsys):
    code, _, err = run(["verify", "--suite", "void", "--n", "100000", "--reps", "50"], capsys)
    assert code == 2 and "--reps" in err


def test_verify_failure_exit_code(capsys):
    # at n = 100 the closed-form discrepancy criterion cannot hold
    code, out, _ = run(["verify", "--suite", "coupling", "--n", "100", "--reps", "200"], capsys)
    assert code == 1
    names = [r["name"] for r in json.loads(out)["reports"] if not r["passed"]]
    assert any("closed form" in name for name in names)


def test_verify_means_match_simulate_csv(capsys):
    args = ["--n", "1000", "--reps", "300", "--seed", "9"]
    code, out, _ = run(["verify", "--suite", "mean"] + args, capsys)
    assert code in (0, 1)
    reports = json.loads(out)["reports"]
    simple = [u for u in cli.MEAN_REGIONS if len(u) == 1]
    rects = ";".join(f"{r.s1:g},{r.u1:g},{r.s2:g},{r.u2:g}" for u in simple for r in u)
    code, out, _ = run(["simulate", "--rects", rects, "--t1-max", str(cli.T1_MAX),
                        "--t2-max", str(cli.T2_MAX)] + args, capsys)
    assert code == 0
    _, body = read_csv(out)
    # reports come in (S, K) pairs in region order
    for i, u in enumerate(simple):
        idx = cli.MEAN_REGIONS.index(u)
        rep_s, rep_k = reports[2 * idx], reports[2 * idx + 1]
        assert body[:, 1 + 2 * i].mean() == pytest.approx(rep_s["estimate"], rel=1e-12)
        assert body[:, 2 + 2 * i].mean() == pytest.approx(rep_k["estimate"], rel=1e-12)


def test_moments_json(capsys):
    code, out, _ = run(["moments", "--n", "100", "--t1", "1", "--t2", "1"], capsys)
    assert code == 0
    (row,) = json.loads(out)["reports"]
    assert row["mean_s"] == pytest.approx(5.17737751763962, rel=1e-12)


def test_moments_zero_rate(capsys):
    code, out, _ = run(["moments", "--n", "1000", "--t1", "0", "--t2", "0.5"], capsys)
    (row,) = json.loads(out)["reports"]
    for key in ("mean_s", "var_s", "var_s_minus_k", "mean_delta", "limit_mean"):
        assert row[key] == 0
    assert row["mean_k"] == 1


def test_moments_sweep_csv(capsys):
    code, out, _ = run(["moments", "--n", "100,10000", "--t1", "1", "--t2", "1",
                        "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["n"]) for r in rows] == [100, 10000]
    assert float(rows[0]["mean_delta"]) > float(rows[1]["mean_delta"])


def test_moments_bad_arguments(capsys):
    code, _, err = run(["moments", "--t1", "-1"], capsys)
    assert code == 2 and "--t1" in err
    with pytest.raises(SystemExit):
        main(["moments", "--n", "1,x"])


def test_write_atomic(tmp_path):
    path = tmp_path / "out.json"
    path.write_text("old")
    write_atomic(str(path), "new")
    assert path.read_text() == "new"
    assert os.listdir(tmp_path) == ["out.json"]


def test_json_is_strict(capsys):
    code, out, _ = run(["verify", "--suite", "gumbel", "--reps", "500"], capsys)
    json.loads(out, parse_constant=lambda c: pytest.fail(f"non-strict constant {c}"))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "coalpp", "moments", "--n", "10"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["reports"][0]["n"] == 10
