import json
from fractions import Fraction as Fr

import pytest

from loopnest import cli
from loopnest import large_deviations as ld


def call(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_ldf_csv(capsys):
    code, out, _ = call(capsys, "ldf", "--n", "1", "--points", "3")
    lines = out.strip().split("\n")
    assert code == 0 and lines[0] == "p,J" and len(lines) == 4
    p, j = map(float, lines[1].split(","))
    assert j == pytest.approx(ld.J(p, 1.0))


def test_ldf_bivariate_json(capsys):
    code, out, _ = call(capsys, "ldf", "--n", "1", "--bivariate", "--law", "gaussian",
                        "--sigma2", "2", "--points", "2", "--format", "json")
    data = json.loads(out)
    assert code == 0
    for p, q, r, b in zip(data["p"], data["q"], data["rate"], data["bivariate_rate"]):
        assert b - r == pytest.approx(q * q / (4 * p), abs=1e-10)


def test_phase_and_exponents(capsys):
    code, out, _ = call(capsys, "phase", "--n", "1", "--rho", "1.5", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["Delta"][0] == pytest.approx(13.5)
    assert data["exponents"]["gamma_str"] == pytest.approx(-0.5)
    code, out, _ = call(capsys, "phase", "--n", "1", "--alpha", "0.5", "--sweep", "--points", "3")
    assert code == 0 and out.startswith("w_inf,")


def test_series_round_trip(capsys):
    from loopnest import series_core as sc
    code, out, _ = call(capsys, "series", "--n", "1", "--g", "1/50", "--h", "1/50",
                        "--alpha", "1", "--max-volume", "4", "--perimeter", "2", "--refined")
    assert code == 0
    spec = sc.LoopModelSpec(n=1, g=Fr(1, 50), h=Fr(1, 50), alpha=1)
    assert sc.load_series(out) == sc.refined_pointed_disk(spec, 4)[2]


def test_depth_output_file(capsys, tmp_path):
    target = tmp_path / "law.csv"
    code, out, _ = call(capsys, "depth", "--n", "1", "--g", "1/50", "--h", "1/50", "--alpha", "1",
                        "--volume", "3", "--perimeter", "1", "--output", str(target))
    assert code == 0 and out == ""
    rows = target.read_text().strip().split("\n")[1:]
    assert sum(Fr(r.split(",")[1]) for r in rows) == 1


def test_kpz_table(capsys):
    code, out, _ = call(capsys, "kpz", "--kappa", "6", "--points", "4")
    assert code == 0 and out.startswith("lambda_prime,")


def test_oracle_small(capsys):
    code, out, _ = call(capsys, "oracle", "--max-edges", "3", "--constraints", "disk,cylinder")
    assert code == 0
    assert all(line.endswith("yes") for line in out.strip().split("\n")[1:])


def test_check_passes(capsys):
    code, out, _ = call(capsys, "check")
    assert code == 0
    assert "FAIL" not in out


def test_config_merge(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "ldf", "n": 1, "points": 5}))
    code, out, _ = call(capsys, "--config", str(cfg), "--points", "2")
    assert code == 0 and len(out.strip().split("\n")) == 3
    code, _, err = call(capsys, "--config", str(cfg), "phase")
    assert code == 1 and json.loads(err)["error"] == "usage"


@pytest.mark.parametrize("argv", [
    [], ["ldf", "--law", "nope"], ["ldf", "--points", "3"], ["phase", "--n", "3", "--rho", "1"],
    ["depth", "--volume", "3", "--perimeter", "1"], ["oracle", "--max-edges", "99"],
    ["series", "--max-volume", "50"],
])
def test_usage_errors(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 1
    assert json.loads(err)["exit_code"] == 1


def test_budget_env(capsys, monkeypatch):
    monkeypatch.setenv("LOOPNEST_BUDGET", "2")
    code, _, _ = call(capsys, "series", "--max-volume", "3")
    assert code == 1
    code, _, _ = call(capsys, "oracle", "--max-edges", "3")
    assert code == 1


def test_invariant_exit(capsys, monkeypatch):
    real = ld.lambda_kappa
    monkeypatch.setattr(ld, "lambda_kappa", lambda l, k: real(l, k) + 1e-6)
    code, _, err = call(capsys, "kpz", "--kappa", "6", "--points", "4")
    assert code == 2 and json.loads(err)["error"] == "invariant"


def test_numeric_exit(capsys, monkeypatch):
    def boom(*a, **k):
        raise FloatingPointError("overflow")
    monkeypatch.setattr(ld, "J", boom)
    code, _, err = call(capsys, "ldf", "--n", "1", "--points", "3")
    assert code == 3 and json.loads(err)["error"] == "FloatingPointError"
