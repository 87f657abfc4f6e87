import json
import math

import pytest

import prewet


def canonical():
    return prewet.BridgeSpec(lam=0.3, length=6, start=0, end=1, truncation=6)


def test_two_step_partition():
    t = prewet.build_tables(prewet.BridgeSpec(lam=0.5, length=2, truncation=4))
    assert t.partition == pytest.approx(math.exp(-0.5) / 16 + 0.25, rel=1e-14)


def test_scale_closed_form():
    assert prewet.solve_H(prewet.Potential.linear(), 0.5, 1e-3) == pytest.approx(10.0, rel=1e-10)


def test_marginals_and_covariance():
    t = prewet.build_tables(canonical(), check_truncation=False)
    for k in range(7):
        assert sum(t.marginal(k)) == pytest.approx(1.0, abs=1e-12)
    assert t.marginal(6)[1] == pytest.approx(1.0)
    assert t.covariance(2, 4) > 0.0
    area = t.area_statistics(0.9)
    assert area.bucket == 1.0
    assert 0.0 < area.upper_probability < 1.0


def test_errors_carry_codes():
    with pytest.raises(prewet.PrewetError) as info:
        prewet.BridgeSpec(lam=-1.0, length=3)
    assert info.value.code == "InvalidParameter"
    assert "lambda" in str(info.value)
    t = prewet.build_tables(canonical(), check_truncation=False)
    with pytest.raises(prewet.PrewetError):
        t.covariance(4, 2)


def test_operator_and_samples_are_reproducible():
    op = prewet.build_operator(prewet.BridgeSpec(lam=0.5, length=1, end=None, truncation=6))
    assert op.converged
    assert sum(op.stationary()) == pytest.approx(1.0)
    assert 0.0 < op.spectral_gap() <= 1.0
    t = prewet.build_tables(canonical(), check_truncation=False)
    a = prewet.exact_samples(t, 50, seed=3)
    b = prewet.exact_samples(t, 50, seed=3)
    assert a == b
    assert all(p[0] == 0 and p[-1] == 1 and min(p) >= 0 for p in a)


def test_experiment_report_schema():
    report = prewet.run_experiment("scaling", {"lambdas": [0.1, 0.05, 0.02, 0.01]})
    assert report["experiment"] == "scaling"
    fit = report["fits"][0]
    assert fit["quantity"] == "height_exponent"
    assert fit["exponent"] < 0
    json.dumps(report)


def test_cli_entry(tmp_path):
    code, out, err = prewet.main(["--out", str(tmp_path), "--quiet", "exact"])
    assert code == 0, err
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["command"] == "exact"
    lines = (tmp_path / "marginals.csv").read_text().splitlines()
    assert lines[0].startswith("# prewet ")
    assert lines[1] == "k,x,p"
