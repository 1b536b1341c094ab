import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trpgates.errors import DegenerateSimplexError, IntegrationError
from trpgates.optimizer import (
    LEDGER_ENV,
    SimplexConfig,
    append_ledger,
    default_ledger_path,
    minimize,
    objective,
)
from trpgates.sweep import SweepParams


def bowl(s):
    return (s.lam - 1) ** 2 + (s.eta_n - 2) ** 2


TIGHT = dict(f_tolerance=1e-20, x_tolerance=1e-10, max_iterations=200)


def test_objective_examples():
    assert objective(SweepParams(5.8511, 2.9280e-4), "hadamard") == pytest.approx(8.82e-6, rel=0.05)
    assert objective(SweepParams(5.9750, 3.8060e-4), "v_p") == pytest.approx(8.20e-5, rel=0.05)
    assert objective(SweepParams(5.0, 1e-4, tau0=0), "identity", convention="computational") == 0.0
    with pytest.raises(ValueError):
        objective(SweepParams(5.0, 1e-4), "phase")


vertex = st.tuples(st.floats(0.2, 4), st.floats(0.2, 4))


@given(st.tuples(vertex, vertex, vertex))
def test_bowl_converges_from_valid_simplex(verts):
    pts = np.array(verts)
    a, b = pts[1] - pts[0], pts[2] - pts[0]
    if abs(a[0] * b[1] - a[1] * b[0]) < 1e-3:
        return
    cfg = SimplexConfig(vertices=tuple(SweepParams(x, y) for x, y in verts), **TIGHT)
    r = minimize(cfg, fn=bowl)
    assert r.converged
    assert r.iterations <= 200
    assert abs(r.best_params.lam - 1) < 1e-8 and abs(r.best_params.eta_n - 2) < 1e-8
    assert all(x >= y for x, y in zip(r.trace, r.trace[1:]))


def test_scaled_and_unscaled_agree_on_bowl():
    verts = tuple(SweepParams(x, y) for x, y in ((0.5, 1.5), (0.7, 1.5), (0.5, 1.8)))
    a = minimize(SimplexConfig(vertices=verts, scaled=True, **TIGHT), fn=bowl).best_params
    b = minimize(SimplexConfig(vertices=verts, scaled=False, **TIGHT), fn=bowl).best_params
    assert abs(a.lam - b.lam) < 1e-8 and abs(a.eta_n - b.eta_n) < 1e-8


def test_infeasible_lambda_is_avoided():
    # reflections pass through lambda <= 0; those trial points are rejected, not evaluated
    seen = []

    def f(s):
        seen.append(s.lam)
        return (s.lam - 0.05) ** 2 + (s.eta_n - 1) ** 2

    cfg = SimplexConfig(vertices=(SweepParams(3, 1), SweepParams(3.5, 1), SweepParams(3, 1.5)), **TIGHT)
    r = minimize(cfg, fn=f)
    assert min(seen) > 0
    assert r.best_params.lam == pytest.approx(0.05, abs=1e-7)


def test_degenerate_initial_simplex():
    with pytest.raises(DegenerateSimplexError):
        SimplexConfig(vertices=(SweepParams(1, 1), SweepParams(2, 2), SweepParams(3, 3)))
    with pytest.raises(ValueError):
        SimplexConfig(vertices=(SweepParams(1, 1), SweepParams(1, 1), SweepParams(3, 3)))
    with pytest.raises(ValueError):
        SimplexConfig(vertices=(SweepParams(1, 1), SweepParams(2, 1, tau0=80), SweepParams(1, 2)))


def test_collapse_onto_line_detected():
    # the objective only depends on lam - eta, so the simplex flattens along that valley
    cfg = SimplexConfig(vertices=(SweepParams(1, 1), SweepParams(1.5, 1), SweepParams(1, 1.5)),
                        f_tolerance=-1.0, x_tolerance=-1.0, max_iterations=2000)
    with pytest.raises(DegenerateSimplexError):
        minimize(cfg, fn=lambda s: (s.lam - s.eta_n) ** 2)


def test_errors_propagate():
    def boom(s):
        if s.eta_n > 1.5:
            raise IntegrationError("step underflow")
        return bowl(s)

    cfg = SimplexConfig(vertices=(SweepParams(1, 1), SweepParams(1.1, 1), SweepParams(1, 1.1)))
    with pytest.raises(IntegrationError):
        minimize(cfg, fn=boom)


def test_max_iterations_zero_returns_best_vertex():
    verts = (SweepParams(2, 2), SweepParams(1.2, 2.1), SweepParams(3, 1))
    r = minimize(SimplexConfig(vertices=verts, max_iterations=0), fn=bowl)
    assert r.best_params == verts[1]
    assert r.evaluations == 3 and r.reason == "max_iterations" and not r.converged


def test_evaluation_budget():
    verts = (SweepParams(2, 2), SweepParams(2.5, 2), SweepParams(2, 2.5))
    r = minimize(SimplexConfig(vertices=verts, max_evaluations=10, **{**TIGHT, "max_iterations": 500}),
                 fn=bowl)
    assert r.evaluations == 10 and r.reason == "max_evaluations"


def test_restarts_reseed():
    verts = (SweepParams(2, 2), SweepParams(2.5, 2), SweepParams(2, 2.5))
    r = minimize(SimplexConfig(vertices=verts, restarts=2, **TIGHT), fn=bowl)
    assert r.restarts_used == 2 and r.converged


def test_hadamard_near_published_point_and_fresh_reevaluation():
    base = SweepParams(5.8511, 2.9280e-4)
    # simplex spanning +-0.001 in lambda and +-1e-6 in eta about the published point
    cfg = SimplexConfig.around(base.with_(lam=base.lam + 0.001, eta_n=base.eta_n + 1e-6), -0.002, -2e-6)
    r = minimize(cfg, "hadamard")
    assert r.best_tr_p <= 1e-4
    assert objective(r.best_params, "hadamard") == pytest.approx(r.best_tr_p, abs=1e-12)


def test_deterministic_with_threads():
    cfg = SimplexConfig.around(SweepParams(5.9750 + 0.005, 3.8060e-4 + 5e-6), -0.005, -5e-6,
                               max_evaluations=80)
    a = minimize(cfg, "v_p", threads=1)
    b = minimize(cfg, "v_p", threads=4)
    assert a.best_params == b.best_params
    assert a.trace == b.trace and a.evaluations == b.evaluations


def test_far_simplex_stops_at_honest_local_minimum():
    cfg = SimplexConfig.around(SweepParams(2.0, 0.0), 0.001, 1e-6, max_evaluations=500)
    r = minimize(cfg, "not")
    assert r.best_tr_p > 1e-2
    assert r.converged and r.reason in ("f_tolerance", "x_tolerance")


def test_config_json_round_trip_and_ledger(tmp_path, monkeypatch):
    cfg = SimplexConfig.around(SweepParams(1.0, 2.0), 0.1, 0.1, restarts=1, max_evaluations=50)
    path = tmp_path / "simplex.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert SimplexConfig.from_json(path) == cfg

    monkeypatch.setenv(LEDGER_ENV, str(tmp_path / "ledger.jsonl"))
    assert default_ledger_path() == tmp_path / "ledger.jsonl"
    r = minimize(cfg, fn=bowl)
    append_ledger(r, cfg, "hadamard")
    append_ledger(r, cfg, "hadamard")
    lines = (tmp_path / "ledger.jsonl").read_text().splitlines()
    assert len(lines) == 2
    rec = json.loads(lines[0])
    assert rec["config"] == cfg.to_dict()
    assert rec["integrator"]["rtol"] == cfg.rtol
    assert rec["result"]["best_tr_p"] == r.best_tr_p
