"""Downhill simplex (Nelder-Mead) search over (lambda, eta_4) minimising Tr P.

lambda ~ 6 and eta_4 ~ 3e-4 differ by four orders of magnitude, so by
default the simplex lives in coordinates normalised by the initial centroid
(lambda / lambda0, eta / eta0).  Objective failures propagate; they are never
turned into penalty values.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .errors import DegenerateSimplexError
from .gates import GateName, gate_name, target_unitary
from .metrics import trace_p
from .propagator import ATOL, RTOL, assemble_unitary
from .sweep import DEFAULT_N, DEFAULT_TAU0, SweepParams

LEDGER_ENV = "TRPGATES_LEDGER"
MIN_AREA = 1e-18
# a shrinking simplex is fine; one whose area vanishes relative to its size is flat
FLATNESS = 1e-12


def objective(sweep: SweepParams, target, convention: str = "eigenbasis",
              rtol: float = RTOL, atol: float = ATOL) -> float:
    """Tr P of the gate realised by ``sweep`` against ``target``."""
    target = gate_name(target)
    if target.composite:
        raise ValueError(f"{target.value} is a composite gate and is not targeted by a single sweep")
    u_a = assemble_unitary(sweep, convention=convention, rtol=rtol, atol=atol)
    return trace_p(u_a, target_unitary(target))


@dataclass(frozen=True)
class SimplexConfig:
    vertices: tuple[SweepParams, ...]
    max_iterations: int = 500
    f_tolerance: float = 1e-10
    x_tolerance: float = 1e-8
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    max_evaluations: int | None = None
    restarts: int = 0
    scaled: bool = True
    rtol: float = RTOL
    atol: float = ATOL
    convention: str = "eigenbasis"

    def __post_init__(self):
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) != 3:
            raise ValueError(f"a (lambda, eta) simplex needs 3 vertices, got {len(verts)}")
        if len({(v.n, v.tau0) for v in verts}) != 1:
            raise ValueError("all vertices must share n and tau0")
        if len({(v.lam, v.eta_n) for v in verts}) != 3:
            raise ValueError("simplex vertices must be distinct")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not (self.reflection > 0 and self.expansion > 1 and 0 < self.contraction < 1
                and 0 < self.shrink < 1):
            raise ValueError("Nelder-Mead coefficients out of range")
        pts, _ = _to_unit(self)
        if _area(pts) <= MIN_AREA:
            raise DegenerateSimplexError("initial simplex is degenerate (collinear vertices)")

    @classmethod
    def around(cls, center: SweepParams, d_lambda: float, d_eta: float, **kw) -> "SimplexConfig":
        """Right-triangle simplex with its corner at ``center``."""
        verts = (
            center,
            center.with_(lam=center.lam + d_lambda),
            center.with_(eta_n=center.eta_n + d_eta),
        )
        return cls(vertices=verts, **kw)

    def to_dict(self) -> dict:
        return {
            "vertices": [[v.lam, v.eta_n] for v in self.vertices],
            "n": self.vertices[0].n,
            "tau0": self.vertices[0].tau0,
            "max_iterations": self.max_iterations,
            "f_tolerance": self.f_tolerance,
            "x_tolerance": self.x_tolerance,
            "coefficients": [self.reflection, self.expansion, self.contraction, self.shrink],
            "max_evaluations": self.max_evaluations,
            "restarts": self.restarts,
            "scaled": self.scaled,
            "rtol": self.rtol,
            "atol": self.atol,
            "convention": self.convention,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimplexConfig":
        n = int(d.get("n", DEFAULT_N))
        tau0 = float(d.get("tau0", DEFAULT_TAU0))
        verts = []
        for v in d["vertices"]:
            if isinstance(v, dict):
                verts.append(SweepParams(lam=float(v["lambda"]), eta_n=float(v["eta_n"]),
                                         n=n, tau0=tau0))
            else:
                verts.append(SweepParams(lam=float(v[0]), eta_n=float(v[1]), n=n, tau0=tau0))
        kw = {}
        for key in ("max_iterations", "max_evaluations", "restarts"):
            if d.get(key) is not None:
                kw[key] = int(d[key])
        for key in ("f_tolerance", "x_tolerance", "rtol", "atol"):
            if key in d:
                kw[key] = float(d[key])
        if "scaled" in d:
            kw["scaled"] = bool(d["scaled"])
        if "convention" in d:
            kw["convention"] = str(d["convention"])
        if "coefficients" in d:
            r, e, c, s = (float(x) for x in d["coefficients"])
            kw.update(reflection=r, expansion=e, contraction=c, shrink=s)
        return cls(vertices=tuple(verts), **kw)

    @classmethod
    def from_json(cls, path) -> "SimplexConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class OptimizationResult:
    best_params: SweepParams
    best_tr_p: float
    evaluations: int
    iterations: int
    trace: list[float] = field(repr=False)
    converged: bool
    reason: str
    restarts_used: int = 0

    def to_dict(self) -> dict:
        return {
            "best_params": self.best_params.to_dict(),
            "best_tr_p": self.best_tr_p,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "trace": list(self.trace),
            "converged": self.converged,
            "reason": self.reason,
            "restarts_used": self.restarts_used,
        }


def _scales(config: SimplexConfig) -> np.ndarray:
    raw = np.array([[v.lam, v.eta_n] for v in config.vertices])
    if not config.scaled:
        return np.ones(2)
    centroid = raw.mean(axis=0)
    spread = raw.max(axis=0) - raw.min(axis=0)
    scales = np.abs(centroid)
    for i in range(2):
        if scales[i] == 0.0:
            scales[i] = spread[i] if spread[i] > 0 else 1.0
    return scales


def _to_unit(config: SimplexConfig):
    scales = _scales(config)
    pts = np.array([[v.lam, v.eta_n] for v in config.vertices]) / scales
    return pts, scales


def _area(pts: np.ndarray) -> float:
    a = pts[1] - pts[0]
    b = pts[2] - pts[0]
    return 0.5 * abs(a[0] * b[1] - a[1] * b[0])


def _flatness(pts: np.ndarray) -> float:
    """Area over squared longest edge: 0 for collinear vertices, ~0.43 at most."""
    edges = [np.sum((pts[i] - pts[j]) ** 2) for i, j in ((0, 1), (0, 2), (1, 2))]
    longest = max(edges)
    return _area(pts) / longest if longest > 0 else 0.0


class _BudgetExhausted(Exception):
    pass


def minimize(
    config: SimplexConfig,
    target=GateName.HADAMARD,
    fn: Callable[[SweepParams], float] | None = None,
    threads: int = 1,
) -> OptimizationResult:
    """Nelder-Mead minimisation of Tr P (or of ``fn`` when given).

    Stops when the objective spread across the simplex drops to
    ``f_tolerance``, when every vertex lies within ``x_tolerance`` (in
    scaled coordinates) of the best one, or when the iteration or evaluation
    budget runs out; ``reason`` records which.  With ``restarts`` > 0 the
    search is re-seeded around the incumbent with a simplex shrunk tenfold
    per restart.  Vertex evaluations may run on ``threads`` workers; the
    acceptance logic is sequential so results do not depend on it.
    """
    if fn is None:
        tgt = gate_name(target)

        def fn(sweep):
            return objective(sweep, tgt, convention=config.convention,
                             rtol=config.rtol, atol=config.atol)

    template = config.vertices[0]
    pts0, scales = _to_unit(config)
    state = {"evals": 0, "best_f": math.inf, "best_x": None}
    budget = config.max_evaluations

    def to_params(x) -> SweepParams:
        return template.with_(lam=float(x[0] * scales[0]), eta_n=float(x[1] * scales[1]))

    def record(x, f):
        state["evals"] += 1
        if f < state["best_f"]:
            state["best_f"] = f
            state["best_x"] = np.array(x)

    def feasible(x) -> bool:
        return x[0] * scales[0] > 0.0

    def evaluate(x) -> float:
        # lambda <= 0 is outside the model, not a failed evaluation: the
        # trial point is rejected without calling the objective
        if not feasible(x):
            return math.inf
        if budget is not None and state["evals"] >= budget:
            raise _BudgetExhausted
        f = float(fn(to_params(x)))
        record(x, f)
        return f

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def evaluate_many(xs: Sequence[np.ndarray]) -> list[float]:
        if budget is not None and state["evals"] + len(xs) > budget:
            return [evaluate(x) for x in xs]
        if pool is None or not all(feasible(x) for x in xs):
            return [evaluate(x) for x in xs]
        fs = list(pool.map(lambda x: float(fn(to_params(x))), xs))
        for x, f in zip(xs, fs):
            record(x, f)
        return fs

    trace: list[float] = []
    iterations = 0
    restarts_used = 0
    reason = "max_iterations"
    converged = False
    try:
        simplex = pts0.copy()
        offsets = pts0 - pts0.mean(axis=0)
        for attempt in range(config.restarts + 1):
            if attempt > 0:
                restarts_used += 1
                simplex = state["best_x"] + offsets * (0.1**attempt)
            fvals = np.array(evaluate_many(list(simplex)))
            reason, converged, it = _nelder_mead(simplex, fvals, config, evaluate,
                                                 evaluate_many, trace)
            iterations += it
            if reason in ("max_evaluations", "max_iterations"):
                break
    except _BudgetExhausted:
        reason, converged = "max_evaluations", False
    finally:
        if pool is not None:
            pool.shutdown()

    best_x = state["best_x"]
    return OptimizationResult(
        best_params=to_params(best_x),
        best_tr_p=state["best_f"],
        evaluations=state["evals"],
        iterations=iterations,
        trace=trace,
        converged=converged,
        reason=reason,
        restarts_used=restarts_used,
    )


def _nelder_mead(simplex, fvals, config, evaluate, evaluate_many, trace):
    rho, chi = config.reflection, config.expansion
    gamma, sigma = config.contraction, config.shrink
    it = 0
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex[:] = simplex[order]
        fvals[:] = fvals[order]
        if not trace or fvals[0] <= trace[-1]:
            trace.append(float(fvals[0]))
        else:
            trace.append(trace[-1])

        if fvals[-1] - fvals[0] <= config.f_tolerance:
            return "f_tolerance", True, it
        if np.max(np.abs(simplex[1:] - simplex[0])) <= config.x_tolerance:
            return "x_tolerance", True, it
        if it >= config.max_iterations:
            return "max_iterations", False, it
        if _area(simplex) <= MIN_AREA and _flatness(simplex) <= FLATNESS:
            raise DegenerateSimplexError(
                f"simplex collapsed onto a line (area {_area(simplex):.3e}) before convergence"
            )
        it += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + rho * (centroid - worst)
        fr = evaluate(xr)
        if fr < fvals[0]:
            xe = centroid + rho * chi * (centroid - worst)
            fe = evaluate(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + gamma * (xr - centroid)
            fc = evaluate(xc)
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xcc = centroid + gamma * (worst - centroid)
            fcc = evaluate(xcc)
            if fcc < fvals[-1]:
                simplex[-1], fvals[-1] = xcc, fcc
                continue
        simplex[1:] = simplex[0] + sigma * (simplex[1:] - simplex[0])
        fvals[1:] = evaluate_many(list(simplex[1:]))


def default_ledger_path() -> Path:
    return Path(os.environ.get(LEDGER_ENV, "trp_results.jsonl"))


def append_ledger(result: OptimizationResult, config: SimplexConfig, target, path=None) -> Path:
    """Append one JSON Lines record (result plus full config echo) to the results ledger."""
    path = Path(path) if path is not None else default_ledger_path()
    record = {
        "version": __version__,
        "target": gate_name(target).value,
        "config": config.to_dict(),
        "integrator": {"method": "DOP853", "rtol": config.rtol, "atol": config.atol},
        "result": result.to_dict(),
    }
    with path.open("a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")
    return path
