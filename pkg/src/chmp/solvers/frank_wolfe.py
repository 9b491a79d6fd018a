"""Frank-Wolfe and Away-Step Frank-Wolfe on ``min ||y - p||^2 / 2, y in conv(A)``.

Both run with exact line search and the membership-specific stopping rules:
an eps-solution test, a witness test at the linear minimiser, and the
relative-error duality gap test ``grad^T (y - s) <= ||y - p|| eps R / 2``.
"""

from __future__ import annotations

import time
from typing import Optional

import numpy as np

from ..geometry import (
    EpsilonSolution,
    Exhausted,
    GapCertificate,
    Iterate,
    PointSet,
    QueryContext,
    Witness,
    apply_step,
    line_search_gamma,
    sin_theta,
    witness_check,
)
from ._common import SolverConfig, SolveReport, TraceRecord

WEIGHT_FLOOR = 1e-15


def _stop_tests(points, q, cfg, it, grad_dots, delta, target):
    """Shared per-iteration checks; returns an outcome or None.

    ``grad_dots[i] = v_i^T (y - p)``.
    """
    s = int(np.argmin(grad_dots))
    y_dot = float(it.point @ (it.point - q.p))
    gap = y_dot - float(grad_dots[s])  # -grad^T (v_s - y) >= 0
    half_slack = 0.5 * delta * delta
    if gap < half_slack:
        # v_s is not a pivot, so nothing is
        cert = witness_check(points, it, q, cfg.relative_witness_tol, scores=grad_dots)
        if cert is not None:
            return s, gap, Witness(cert)
    if gap <= delta * target / 2.0:
        return s, gap, GapCertificate(it, gap, delta)
    return s, gap, None


def solve_fw(points: PointSet, q: QueryContext, cfg: Optional[SolverConfig] = None) -> SolveReport:
    cfg = cfg or SolverConfig()
    maxit = cfg.max_iterations(points.n)
    target = cfg.eps * q.R
    trace = [] if cfg.trace else None
    A = points.A
    it = Iterate.vertex(points, q.nearest)
    k = 0
    t0 = time.perf_counter()
    while True:
        r = it.point - q.p
        delta = float(np.linalg.norm(r))
        if delta <= target:
            outcome = EpsilonSolution(it, delta)
            break
        if k >= maxit:
            outcome = Exhausted(it, delta)
            break
        grad_dots = A.T @ r
        s, gap, outcome = _stop_tests(points, q, cfg, it, grad_dots, delta, target)
        if outcome is not None:
            break
        if gap <= 0.0:
            # the linear minimiser is no better than y; nothing left to gain
            outcome = Exhausted(it, delta)
            break
        # exact line search; same arithmetic as the greedy triangle step
        gamma = line_search_gamma(it.point, A[:, s], q)
        new = apply_step(points, it, s, gamma)
        if trace is not None:
            trace.append(TraceRecord(
                delta=delta,
                delta_next=float(np.linalg.norm(new.point - q.p)),
                sin_theta=sin_theta(it.point, A[:, s], q),
                kind="fw",
                gamma=gamma,
                weights=new.weights.copy() if cfg.trace_weights else None,
            ))
        it = new
        k += 1
    return SolveReport(outcome, k, time.perf_counter() - t0, "FW", trace)


def solve_asfw(points: PointSet, q: QueryContext, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Away-Step Frank-Wolfe with explicit active-set bookkeeping.

    Trace ``kind`` is ``"fw"``, ``"away"`` or ``"drop"`` (away step at its
    maximal length, which removes the atom from the support).
    """
    cfg = cfg or SolverConfig()
    maxit = cfg.max_iterations(points.n)
    target = cfg.eps * q.R
    trace = [] if cfg.trace else None
    A = points.A
    it = Iterate.vertex(points, q.nearest)
    k = 0
    t0 = time.perf_counter()
    while True:
        r = it.point - q.p
        delta = float(np.linalg.norm(r))
        if delta <= target:
            outcome = EpsilonSolution(it, delta)
            break
        if k >= maxit:
            outcome = Exhausted(it, delta)
            break
        grad_dots = A.T @ r
        s, gap_fw, outcome = _stop_tests(points, q, cfg, it, grad_dots, delta, target)
        if outcome is not None:
            break
        support = it.support
        w_idx = int(support[np.argmax(grad_dots[support])])
        y_dot = float(it.point @ r)
        deriv_fw = -gap_fw
        deriv_away = y_dot - float(grad_dots[w_idx])
        alpha = it.weights
        if deriv_fw <= deriv_away:
            d = A[:, s] - it.point
            gamma_max = 1.0
            kind = "fw"
        else:
            d = it.point - A[:, w_idx]
            a_w = float(alpha[w_idx])
            gamma_max = a_w / (1.0 - a_w)
            kind = "away"
        dd = float(d @ d)
        gamma = min(gamma_max, -float(r @ d) / dd)
        if not gamma > 0.0:
            outcome = Exhausted(it, delta)
            break
        if kind == "fw":
            w = alpha * (1.0 - gamma)
            w[s] += gamma
        else:
            w = alpha * (1.0 + gamma)
            w[w_idx] -= gamma
            if gamma == gamma_max:
                w[w_idx] = 0.0
                kind = "drop"
        w[w < WEIGHT_FLOOR] = 0.0
        w /= w.sum()
        new = Iterate(w, it.point + gamma * d)
        if kind == "away" and w[w_idx] == 0.0:
            kind = "drop"
        if trace is not None:
            trace.append(TraceRecord(
                delta=delta,
                delta_next=float(np.linalg.norm(new.point - q.p)),
                kind=kind,
                gamma=gamma,
                weights=w.copy() if cfg.trace_weights else None,
            ))
        it = new
        k += 1
    return SolveReport(outcome, k, time.perf_counter() - t0, "ASFW", trace)
