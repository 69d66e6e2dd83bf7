import csv
import json
import math

import numpy as np
import pytest

from dirac_edge import cli


def run_cli(args):
    return cli.main(args)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run_cli(["no-such-command"]) == 1
    assert run_cli(["dispersion", "--m", "1"]) == 1  # missing --zeta
    assert run_cli(["dispersion", "--m", "0", "--zeta", "1"]) == 1  # massless
    assert run_cli(["gapstate", "--m", "1", "--zeta", "abc", "--k2", "0"]) == 1
    capsys.readouterr()


def test_dispersion_csv(tmp_path):
    out = tmp_path / "d.csv"
    code = run_cli(
        ["dispersion", "--m", "1", "--zeta", "1", "--k-range", "-3:3", "--n", "13",
         "--out", str(out)]
    )
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == ["k2", "E_b_plus", "E_b_minus", "E_g", "branch_id"]
    body = rows[1:]
    assert len(body) == 13
    for r in body:
        k = float(r[0])
        assert float(r[1]) == pytest.approx(math.hypot(k, 1.0))
        assert float(r[3]) == pytest.approx(k, abs=1e-12)  # E_g = k2 at zeta = 1
    # LF line endings
    raw = out.read_bytes()
    assert b"\r" not in raw


def test_dispersion_zeta_inf_empty_column(tmp_path):
    out = tmp_path / "dinf.csv"
    assert run_cli(["dispersion", "--m", "1", "--zeta", "inf", "--n", "7", "--out", str(out)]) == 0
    for r in read_csv(out)[1:]:
        assert r[3] == "" and r[4] == ""


def test_dispersion_zeta_zero_flat_branch(tmp_path):
    out = tmp_path / "d0.csv"
    assert run_cli(["dispersion", "--m", "1", "--zeta", "0", "--n", "41", "--out", str(out)]) == 0
    for r in read_csv(out)[1:]:
        if r[3]:
            assert float(r[0]) < 0.0
            assert float(r[3]) == pytest.approx(1.0, abs=1e-12)


def test_dispersion_mirror_files(tmp_path):
    out = tmp_path / "d.csv"
    assert run_cli(
        ["dispersion", "--m", "1", "--zeta", "2", "--n", "21", "--out", str(out), "--mirror"]
    ) == 0
    mirror = tmp_path / "d_mirror.csv"
    assert mirror.exists()
    main_rows = {r[0]: r for r in read_csv(out)[1:] if r[3]}
    mirror_rows = {r[0]: r for r in read_csv(mirror)[1:] if r[3]}
    assert set(main_rows) == set(mirror_rows)
    for k in main_rows:
        assert float(mirror_rows[k][3]) == pytest.approx(-float(main_rows[k][3]), abs=1e-12)


def test_determinism_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["dispersion", "--m", "1", "--zeta", "0.5", "--n", "33"]
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()

    ja, jb = tmp_path / "a.json", tmp_path / "b.json"
    base = ["conductivity", "--m", "1", "--zeta", "1"]
    assert run_cli(base + ["--out", str(ja)]) == 0
    assert run_cli(base + ["--out", str(jb)]) == 0
    assert ja.read_bytes() == jb.read_bytes()


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"zeta": 2.0, "n": 9}), encoding="utf-8")
    out = tmp_path / "d.csv"
    assert run_cli(
        ["dispersion", "--m", "1", "--zeta", "1", "--n", "101", "--config", str(cfg),
         "--out", str(out)]
    ) == 0
    rows = read_csv(out)[1:]
    ks = sorted({float(r[0]) for r in rows})
    assert len(ks) == 9  # config n beat the flag
    with_state = [r for r in rows if r[3]]
    slopes = {round(float(r[3]) / float(r[0]), 6) for r in with_state if abs(float(r[0])) > 1e-9}
    assert slopes != {1.0}  # zeta = 2 branch, not the zeta = 1 line

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nope": 1}), encoding="utf-8")
    assert run_cli(["dispersion", "--m", "1", "--zeta", "1", "--config", str(bad)]) == 1


def test_gapstate_json(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert run_cli(["gapstate", "--m", "1", "--zeta", "1", "--k2", "0.3", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["energy"] == pytest.approx(0.3)
    assert data["kappa"] == pytest.approx(1.0)
    assert data["sigma2"] == pytest.approx(1.0)
    # stdout mode
    assert run_cli(["gapstate", "--m", "1", "--zeta", "-1", "--k2", "0.3"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["has_gap_state"] is False


def test_flow_command(tmp_path, capsys):
    out = tmp_path / "f.json"
    branches = tmp_path / "fb.csv"
    assert run_cli(
        ["flow", "--m", "-1", "--zeta", "-1", "--out", str(out), "--out-branches", str(branches)]
    ) == 0
    capsys.readouterr()
    data = json.loads(out.read_text())
    assert data["flow"] == -1
    rows = read_csv(branches)
    assert rows[0] == ["k2", "E", "branch_id", "in_gap"]
    assert any(r[3] == "1" for r in rows[1:])


def test_conductivity_command(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run_cli(["conductivity", "--m", "1", "--zeta", "1", "--out", str(out)]) == 0
    capsys.readouterr()
    data = json.loads(out.read_text())
    assert data["sigma_e"] == 1 and data["flow"] == 1 and data["sigma_bulk"] == 0.5
    assert data["agree"] is True
    assert {m["method"] for m in data["methods"]} == {"direct-integral", "switch-function"}

    out2 = tmp_path / "c2.json"
    assert run_cli(["conductivity", "--m", "-1", "--zeta", "-1", "--out", str(out2)]) == 0
    capsys.readouterr()
    assert json.loads(out2.read_text())["sigma_e"] == -1

    assert run_cli(
        ["conductivity", "--m", "1", "--zeta", "1", "--window", "-0.9:1.1", "--out", str(out)]
    ) == 1
    capsys.readouterr()


def test_perturb_scan_command(tmp_path, capsys):
    out = tmp_path / "p.json"
    code = run_cli(
        ["perturb-scan", "--m", "1", "--zeta", "1", "--n-perturbations", "2",
         "--max-norm", "0.4", "--n", "33", "--seed", "3", "--out", str(out)]
    )
    capsys.readouterr()
    assert code == 0
    data = json.loads(out.read_text())
    assert data["all_unchanged"] is True
    assert len(data["records"]) == 2
    assert all(r["flow"] == 1 for r in data["records"])


def test_bloch_command(tmp_path, capsys):
    out = tmp_path / "b.json"
    bands = tmp_path / "bb.csv"
    assert run_cli(
        ["bloch", "--m", "1", "--zeta", "1", "--n-theta", "9", "--n-x1", "128",
         "--h1", "0.12", "--out", str(out), "--out-bands", str(bands)]
    ) == 0
    capsys.readouterr()
    data = json.loads(out.read_text())
    assert data["flow"] == 1
    rows = read_csv(bands)
    assert rows[0] == ["theta", "E", "branch_id"]
    assert len(rows) > 5


def test_selftest_subset(capsys):
    assert run_cli(["selftest", "--only", "1,6,9"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 3
    assert "3/3 criteria passed" in out
    assert run_cli(["selftest", "--only", "77"]) == 1
    capsys.readouterr()
