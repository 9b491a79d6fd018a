"""Bounded LP feasibility ``{A x = b, x >= 0, e^T x <= N}`` as a CHMP.

The embedding uses the block matrix

    [ A   0  -b ] [alpha]   [    0    ]
    [ e^T 1  -N ] [ beta] = [    0    ]
    [ 0^T 0   1 ] [gamma]   [1/(N + 1)]

whose columns form the point set and whose right-hand side is the query.
A weight vector on the n + 2 columns close to the query recovers
``x = alpha / gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .geometry import InputError, PointSet, QueryContext, WitnessCertificate, build_query
from .rng import box_muller, make_rng
from .solvers import SolveReport, SolverConfig, SPGParams, solve

DEFAULT_N = 1200.0
GAMMA_MIN = 1e-12

LP_SPG = SPGParams(M=60, lam_min=1e-10, lam_max=1e10)


class DegenerateRecovery(ArithmeticError):
    pass


@dataclass(frozen=True)
class LpInstance:
    A: np.ndarray
    b: np.ndarray
    N: float = DEFAULT_N

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise InputError(f"A is {A.shape}, b has length {b.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.isfinite(self.N)):
            raise InputError("LP data must be finite")
        if not self.N > 0:
            raise InputError("norm bound N must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class Feasible:
    x: np.ndarray
    residual: float
    bound: float
    report: SolveReport
    kind: str = "feasible"


@dataclass(frozen=True)
class Infeasible:
    certificate: WitnessCertificate
    report: SolveReport
    kind: str = "infeasible"


@dataclass(frozen=True)
class Inconclusive:
    report: SolveReport
    reason: str = ""
    kind: str = "inconclusive"


FeasibilityVerdict = Union[Feasible, Infeasible, Inconclusive]


def build_chmp(lp: LpInstance):
    """Point set in R^{m+2} with n + 2 columns, and the query point."""
    m, n = lp.m, lp.n
    top = np.hstack([lp.A, np.zeros((m, 1)), -lp.b[:, None]])
    mid = np.hstack([np.ones(n), [1.0], [-lp.N]])
    bot = np.hstack([np.zeros(n), [0.0], [1.0]])
    cols = np.vstack([top, mid, bot])
    p = np.zeros(m + 2)
    p[-1] = 1.0 / (lp.N + 1.0)
    return PointSet(cols), p


@dataclass(frozen=True)
class Recovery:
    x: np.ndarray
    residual: float
    bound: float
    budget_error: float
    gamma_error: float
    ok: bool


def recover_solution(lp: LpInstance, weights, eps: float, R: float) -> Recovery:
    """``x = alpha / gamma`` with the residual bounds it is guaranteed to meet.

    For an eps-solution the recovered point satisfies
    ``||A x - b|| <= eps R / gamma``, ``|e^T x + beta/gamma - N| <= eps R / gamma``
    and ``|gamma - 1/(N+1)| <= eps R``.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.shape[0] != lp.n + 2:
        raise InputError(f"expected {lp.n + 2} weights, got {w.shape[0]}")
    alpha, beta, gamma = w[:lp.n], float(w[lp.n]), float(w[lp.n + 1])
    if gamma <= GAMMA_MIN:
        raise DegenerateRecovery(f"last weight {gamma:.3e} too small to rescale")
    x = alpha / gamma
    bound = eps * R / gamma
    residual = float(np.linalg.norm(lp.A @ x - lp.b))
    budget_error = abs(float(x.sum()) + beta / gamma - lp.N)
    gamma_error = abs(gamma - 1.0 / (lp.N + 1.0))
    # the weights sum to one only up to rounding; allow a few ulps of slack
    slack = 1e-9 * (1.0 + bound)
    ok = residual <= bound + slack and budget_error <= bound + slack * lp.N and gamma_error <= eps * R + 1e-12
    return Recovery(x, residual, bound, budget_error, gamma_error, bool(ok and np.all(x >= 0)))


def default_lp_config(eps: float = 1e-6, **kw) -> SolverConfig:
    kw.setdefault("maxit", 1_000_000)
    kw.setdefault("spg", LP_SPG)
    return SolverConfig(eps=eps, **kw)


def solve_feasibility(
    lp: LpInstance,
    solver: str = "SPG",
    eps: float = 1e-6,
    cfg: Optional[SolverConfig] = None,
) -> FeasibilityVerdict:
    """Decide the bounded LP by solving its CHMP embedding."""
    cfg = cfg.with_(eps=eps) if cfg is not None else default_lp_config(eps)
    points, p = build_chmp(lp)
    q: QueryContext = build_query(points, p)
    report = solve(solver, points, q, cfg)
    out = report.outcome
    if out.kind == "epsilon":
        try:
            rec = recover_solution(lp, out.iterate.weights, cfg.eps, q.R)
        except DegenerateRecovery as exc:
            return Inconclusive(report, str(exc))
        if not rec.ok:
            return Inconclusive(report, f"recovered x violates its bounds (residual {rec.residual:.3e} > {rec.bound:.3e})")
        return Feasible(rec.x, rec.residual, rec.bound, report)
    if out.kind == "witness":
        return Infeasible(out.certificate, report)
    if out.kind == "gap":
        return Inconclusive(report, f"duality gap certificate (gap={out.gap:.3e}) without a witness")
    return Inconclusive(report, "iteration budget exhausted")


def _unit_sphere(m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    h = (m + 1) // 2
    U = rng.random((count, 2 * h))
    Z = box_muller(U[:, :h].T, U[:, h:].T).T[:, :m]
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def gen_lp_instance(m: int, n: int, feasible: bool = True, N: float = DEFAULT_N, rng=None, seed: int = 0) -> LpInstance:
    """Random LP with columns on the unit sphere centred at ``e``.

    Columns with a negative entry are redrawn. Feasible instances set
    ``b = A x`` for ``x ~ U(0, 1)^n``; infeasible ones then flip the sign
    of ``b_1`` (all of row 1 is nonnegative, so ``(A x)_1 >= 0``).
    """
    rng = rng if rng is not None else make_rng(seed)
    cols = np.empty((n, m))
    filled = 0
    while filled < n:
        cand = 1.0 + _unit_sphere(m, n - filled, rng)
        good = cand[np.all(cand >= 0.0, axis=1)]
        cols[filled:filled + len(good)] = good
        filled += len(good)
    A = cols.T
    x = rng.random(n)
    b = A @ x
    if not feasible:
        b[0] = -b[0]
    return LpInstance(A, b, N)


def geometry_bounds(lp: LpInstance):
    """``(D_lower, Omega_upper, asfw_factor)`` for the embedded hull.

    The diameter is at least ``N + 1`` and the facial distance at most 1, so
    ASFW's per-step contraction is no better than
    ``1 - (1/4) * (1 / ((N + 1)(m + 3)))**2``.
    """
    d_lower = lp.N + 1.0
    omega_upper = 1.0
    ratio = omega_upper / (d_lower * (lp.m + 3))
    return d_lower, omega_upper, 1.0 - 0.25 * ratio * ratio


# --------------------------------------------------------------------------
# LPF v1 text format

def format_lp(lp: LpInstance) -> str:
    fmt = lambda row: " ".join(f"{float(x):.17e}" for x in row)  # noqa: E731
    lines = [f"LPF v1 {lp.m} {lp.n} {lp.N:.17g}"]
    lines.extend(fmt(row) for row in lp.A)
    lines.append(fmt(lp.b))
    return "\n".join(lines) + "\n"


def parse_lp(text: str) -> LpInstance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split() if lines else []
    if len(head) != 5 or head[:2] != ["LPF", "v1"]:
        raise InputError("bad LPF header")
    m, n, N = int(head[2]), int(head[3]), float(head[4])
    if len(lines) != m + 2:
        raise InputError(f"expected {m} matrix rows and one row for b")
    A = np.array([[float(x) for x in ln.split()] for ln in lines[1:m + 1]])
    if A.shape != (m, n):
        raise InputError(f"matrix block has shape {A.shape}, header says ({m}, {n})")
    b = np.array([float(x) for x in lines[-1].split()])
    if b.shape != (m,):
        raise InputError("b row must have m values")
    return LpInstance(A, b, N)


def write_lp(path, lp: LpInstance) -> None:
    Path(path).write_text(format_lp(lp))


def read_lp(path) -> LpInstance:
    return parse_lp(Path(path).read_text())
