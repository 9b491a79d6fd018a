"""Spectral projected gradient on ``min ||A x - p||^2 / 2, x in the unit simplex``."""

from __future__ import annotations

import math
import time
from collections import deque
from typing import Optional

import numpy as np

from ..geometry import (
    EpsilonSolution,
    Exhausted,
    GapCertificate,
    Iterate,
    PointSet,
    Projection,
    QueryContext,
    Witness,
    pivot_threshold,
    witness_check,
)
from ..rng import make_rng
from ._common import SolverConfig, SolveReport, TraceRecord

DIAMETER_SIMPLEX = math.sqrt(2.0)


def simplex_project(y) -> np.ndarray:
    """Euclidean projection onto ``{x : x >= 0, sum(x) = 1}``.

    Sort-based threshold: find ``tau`` with ``sum(max(y - tau, 0)) = 1``.
    """
    y = np.asarray(y, dtype=np.float64)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, y.size + 1)
    rho = np.flatnonzero(u - css / ks > 0)[-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(y - tau, 0.0)


def spectral_norm2(A: np.ndarray, iters: int = 50, seed: int = 0) -> float:
    """Power-iteration estimate of ``||A||_2^2`` (largest eigenvalue of ``A A^T``)."""
    m = A.shape[0]
    v = make_rng(seed).random(m) + 0.5
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A @ (A.T @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        lam = float(v @ w)
        v = w / nw
    return max(lam, float(v @ (A @ (A.T @ v))))


def lipschitz_bound(points: PointSet) -> float:
    """Upper bound on the gradient Lipschitz constant, inflated by 1%."""
    return 1.01 * spectral_norm2(points.A)


def solve_spg(
    points: PointSet,
    q: QueryContext,
    cfg: Optional[SolverConfig] = None,
    mode: str = "duality",
) -> SolveReport:
    """SPG with nonmonotone (max over last ``M`` values) backtracking.

    ``mode="duality"`` uses the membership stopping rules (eps-solution,
    witness from the gradient components, certified relative gap);
    ``mode="proj"`` runs the classic ``||d_k|| < eps_proj`` test and returns
    the approximate projection of ``p`` onto conv(A).
    """
    cfg = cfg or SolverConfig()
    if mode not in ("duality", "proj"):
        raise ValueError(f"unknown SPG mode {mode!r}")
    prm = cfg.spg
    proj = mode == "proj"
    A = points.A
    p = q.p
    maxit = cfg.max_iterations(points.n)
    target = cfg.eps * q.R
    gap_scale = 0.0
    if not proj:
        gap_scale = target / (3.0 * lipschitz_bound(points) * DIAMETER_SIMPLEX)
    trace = [] if cfg.trace else None

    x = np.zeros(points.n)
    x[q.nearest] = 1.0
    Ax = A[:, q.nearest].copy()
    r = Ax - p
    g = A.T @ r
    f = 0.5 * float(r @ r)
    history = deque([f], maxlen=prm.M)
    lam = prm.lam0
    k = 0
    t0 = time.perf_counter()
    while True:
        delta = math.sqrt(2.0 * f)
        it = Iterate(x, Ax)
        if not proj:
            if delta <= target:
                outcome = EpsilonSolution(it, delta)
                break
            if float(g.min()) > pivot_threshold(Ax, q):
                cert = witness_check(points, it, q, cfg.relative_witness_tol, scores=g)
                if cert is not None:
                    outcome = Witness(cert)
                    break
        if k >= maxit:
            outcome = Exhausted(it, delta)
            break
        xbar = simplex_project(x - lam * g)
        d = xbar - x
        dnorm = float(np.linalg.norm(d))
        Axbar = A @ xbar
        if proj:
            if dnorm < prm.eps_proj:
                outcome = Projection(it, delta)
                break
        else:
            dbar = float(np.linalg.norm(Axbar - p))
            if dbar <= target:
                outcome = EpsilonSolution(Iterate(xbar, Axbar), dbar)
                break
            if dnorm <= dbar * gap_scale:
                outcome = GapCertificate(Iterate(xbar, Axbar), dnorm, dbar)
                break
        Ad = Axbar - Ax
        gd = float(g @ d)
        fmax = max(history)
        gamma = 1.0
        while True:
            rt = r + gamma * Ad
            ft = 0.5 * float(rt @ rt)
            if ft <= fmax + prm.eta * gamma * gd:
                break
            gamma *= 0.5
            if gamma < 1e-30:
                break
        x_new = x + gamma * d
        Ax_new = Ax + gamma * Ad
        r_new = Ax_new - p
        g_new = A.T @ r_new
        s = x_new - x
        u = g_new - g
        su = float(s @ u)
        if su <= 0.0:
            lam_new = prm.lam_max
        else:
            lam_new = max(prm.lam_min, min(float(s @ s) / su, prm.lam_max))
        f_new = 0.5 * float(r_new @ r_new)
        if trace is not None:
            trace.append(TraceRecord(
                delta=delta,
                delta_next=math.sqrt(2.0 * f_new),
                kind="spg",
                gamma=gamma,
                lam=lam,
                weights=x_new.copy() if cfg.trace_weights else None,
            ))
        x, Ax, r, g, f, lam = x_new, Ax_new, r_new, g_new, f_new, lam_new
        history.append(f)
        k += 1
    return SolveReport(outcome, k, time.perf_counter() - t0, "PROJ" if proj else "SPG", trace)


def solve_proj(points: PointSet, q: QueryContext, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Exact-projection baseline: SPG run to ``||d_k|| < eps_proj``."""
    return solve_spg(points, q, cfg, mode="proj")
