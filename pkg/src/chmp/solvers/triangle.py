"""Triangle Algorithm and its greedy variant."""

from __future__ import annotations

import time
from typing import Optional

import numpy as np

from ..geometry import (
    EpsilonSolution,
    Exhausted,
    Iterate,
    PointSet,
    QueryContext,
    Witness,
    apply_step,
    find_pivot,
    line_search_gamma,
    pivot_scores,
    pivot_threshold,
    sin_theta,
    witness_check,
)
from ._common import SolverConfig, SolveReport, TraceRecord
from ..rng import make_rng


def _record(cfg, it, new, v, q, delta, gamma, kind):
    return TraceRecord(
        delta=delta,
        delta_next=float(np.linalg.norm(new.point - q.p)),
        sin_theta=sin_theta(it.point, v, q),
        kind=kind,
        gamma=gamma,
        weights=new.weights.copy() if cfg.trace_weights else None,
    )


def _run(points: PointSet, q: QueryContext, cfg: SolverConfig, greedy: bool, name: str) -> SolveReport:
    rng = make_rng(cfg.seed)
    maxit = cfg.max_iterations(points.n)
    target = cfg.eps * q.R
    trace = [] if cfg.trace else None
    it = Iterate.vertex(points, q.nearest)
    k = 0
    t0 = time.perf_counter()
    while True:
        delta = float(np.linalg.norm(it.point - q.p))
        if delta <= target:
            outcome = EpsilonSolution(it, delta)
            break
        if k >= maxit:
            outcome = Exhausted(it, delta)
            break
        scores = pivot_scores(points, it.point, q)
        if greedy:
            j = int(np.argmin(scores))
            strict_ok = scores[j] <= float(q.p @ (it.point - q.p)) + cfg.pivot_tol
            simple_ok = scores[j] <= pivot_threshold(it.point, q) + cfg.pivot_tol
            if not strict_ok:
                # the strict test failing is not a proof; certify with the simple one
                cert = witness_check(points, it, q, cfg.relative_witness_tol, scores=scores)
                if cert is not None:
                    outcome = Witness(cert)
                    break
            if not simple_ok:
                outcome = Exhausted(it, delta)
                break
        else:
            cert = witness_check(points, it, q, cfg.relative_witness_tol, scores=scores)
            if cert is not None:
                outcome = Witness(cert)
                break
            pick = find_pivot(points, it, q, cfg.pivot_policy, rng, cfg.pivot_tol, scores=scores)
            if pick is None:
                # no pivot, yet the certificate did not verify: stalled on round-off
                outcome = Exhausted(it, delta)
                break
            j = pick[0]
        v = points.A[:, j]
        gamma = line_search_gamma(it.point, v, q)
        new = apply_step(points, it, j, gamma)
        if trace is not None:
            trace.append(_record(cfg, it, new, v, q, delta, gamma, "pivot"))
        it = new
        k += 1
    return SolveReport(outcome, k, time.perf_counter() - t0, name, trace)


def solve_ta(points: PointSet, q: QueryContext, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Triangle Algorithm; pivots chosen by ``cfg.pivot_policy``."""
    cfg = cfg or SolverConfig()
    if cfg.pivot_policy == "greedy":
        return _run(points, q, cfg, greedy=True, name="TA")
    return _run(points, q, cfg, greedy=False, name="TA")


def solve_gt(points: PointSet, q: QueryContext, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Greedy Triangle: always step towards ``argmin_i v_i^T (p_k - p)``.

    With ``p = 0`` this is von Neumann's algorithm.
    """
    return _run(points, q, cfg or SolverConfig(), greedy=True, name="GT")
