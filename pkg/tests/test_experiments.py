import json

import numpy as np
import pytest

from trpgates.experiments import (
    CSV_HEADER,
    PUBLISHED,
    ScanSpec,
    reproduce_all,
    run_scan,
    sensitivity_summary,
    summary_lines,
    within_band,
    write_scan_csv,
)
from trpgates.gates import GateName
from trpgates.optimizer import objective
from trpgates.sweep import SweepParams

H = PUBLISHED[GateName.HADAMARD]


def test_scan_spec_validation():
    with pytest.raises(ValueError):
        ScanSpec("hadamard", H.sweep, "lambda", ())
    with pytest.raises(ValueError):
        ScanSpec("hadamard", H.sweep, "lambda", (1.0, 3.0, 2.0))
    with pytest.raises(ValueError):
        ScanSpec("hadamard", H.sweep, "tau0", (1.0,))


def test_single_value_scan_equals_objective():
    rows = run_scan(ScanSpec("hadamard", H.sweep, "lambda", (H.lam,)))
    assert len(rows) == 1
    assert rows[0].tr_p == objective(H.sweep, "hadamard")


def test_scan_threads_and_order_invariance():
    values = (5.8510, 5.8511, 5.8512)
    a = run_scan(ScanSpec("hadamard", H.sweep, "lambda", values))
    b = run_scan(ScanSpec("hadamard", H.sweep, "lambda", values[::-1]), threads=3)
    assert a == b[::-1]
    for r in a:
        assert r.d_star <= r.tr_p
        # exact only up to the integrator's unitarity error
        assert r.fidelity == pytest.approx(1 - r.tr_p / 4, abs=1e-10)


def test_hadamard_scan_pattern():
    rows = run_scan(ScanSpec("hadamard", H.sweep, "eta4", (2.9279e-4, 2.9280e-4, 2.9281e-4)))
    for row, expected in zip(rows, (7.03e-4, 8.82e-6, 6.14e-4)):
        assert within_band(row.tr_p, expected)


def test_sensitivity_summary():
    rep = sensitivity_summary("not", PUBLISHED[GateName.NOT].sweep)
    assert rep.dominant == "eta4"
    assert rep.eta_impact == pytest.approx(1.23e-3, rel=0.05)
    assert rep.lambda_impact == pytest.approx(1.22e-5, rel=0.05)
    assert rep.strict_local_minimum
    zero = sensitivity_summary("hadamard", H.sweep, d_lambda=0, d_eta=0)
    assert zero.lambda_impact == zero.eta_impact == zero.best_tr_p
    with pytest.raises(ValueError):
        sensitivity_summary("hadamard", H.sweep, d_lambda=-1)


def test_csv_format(tmp_path):
    rows = run_scan(ScanSpec("hadamard", H.sweep, "lambda", (5.8511,)))
    path = write_scan_csv(rows, tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert [float(x) for x in lines[1].split(",")] == list(rows[0].as_tuple())


def test_reproduce_all_bundle_is_deterministic(tmp_path):
    a = reproduce_all(tmp_path / "a", threads=2)
    reproduce_all(tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(
        ["report.json", "fidelities.json"]
        + [f"scan_{g.value}_{v}.csv" for g in PUBLISHED for v in ("lambda", "eta4")]
    )
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a["calibration_passed"] and a["property_passed"]
    fid = json.loads((tmp_path / "a" / "fidelities.json").read_text())
    assert set(fid) == {"hadamard", "v_p", "v_pi8", "not"}
    res = a["gates"]["v_pi8"]["resonances"]
    np.testing.assert_allclose(res["times"], [-35.0362, 0, 35.0362], atol=1e-4)
    assert all(res["inside_window"])
    assert any("PASS" in line for line in summary_lines(a))
