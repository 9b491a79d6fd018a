"""Domain types and geometric primitives shared by every CHMP solver.

The point set is stored column-wise as an ``(m, n)`` array, following the
convention ``A = [v_1 ... v_n]``. Pivot tests are expressed through the
inner products ``v_i^T (p_k - p)`` so that one matrix-vector product per
iteration answers every pivot/witness question.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

__all__ = [
    "PointSet",
    "QueryContext",
    "Iterate",
    "WitnessCertificate",
    "EpsilonSolution",
    "Witness",
    "GapCertificate",
    "Exhausted",
    "Projection",
    "SolveOutcome",
    "InputError",
    "DegenerateError",
    "ContractError",
    "build_query",
    "is_pivot",
    "is_strict_pivot",
    "pivot_scores",
    "pivot_threshold",
    "find_pivot",
    "line_search_gamma",
    "apply_step",
    "witness_check",
    "verify_witness",
    "separating_hyperplane",
    "sin_theta",
    "pivot_conditions",
    "strict_pivot_conditions",
    "GAMMA_FLOOR",
]

GAMMA_FLOOR = 1e-16


class InputError(ValueError):
    """Malformed point set or query (shape, finiteness)."""


class DegenerateError(ArithmeticError):
    """A geometric quantity needed by a step is zero (coincident points)."""


class ContractError(RuntimeError):
    """An object was used outside its documented contract."""


class PointSet:
    """Finite point set stored as the columns of an ``(m, n)`` matrix.

    Squared column norms are cached at construction; the array is made
    read-only so a single instance can be shared by concurrent solves.
    """

    __slots__ = ("A", "norms2")

    def __init__(self, columns) -> None:
        A = np.array(columns, dtype=np.float64, copy=True)
        if A.ndim == 1:
            A = A.reshape(-1, 1)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise InputError(f"point set must be a non-empty (m, n) array, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InputError("point set contains non-finite entries")
        A.setflags(write=False)
        self.A = A
        norms2 = np.einsum("ij,ij->j", A, A)
        norms2.setflags(write=False)
        self.norms2 = norms2

    @classmethod
    def from_points(cls, points) -> "PointSet":
        """Build from an ``(n, m)`` row-per-point array."""
        P = np.asarray(points, dtype=np.float64)
        if P.ndim != 2:
            raise InputError("expected a 2-D array of points")
        return cls(P.T)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.A[:, i]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"PointSet(m={self.m}, n={self.n})"


@dataclass(frozen=True)
class QueryContext:
    """Query point ``p`` with the per-column caches used by the pivot tests."""

    p: np.ndarray
    R: float
    dots: np.ndarray
    pnorm2: float
    dist: np.ndarray  # d(v_i, p) for every column

    @property
    def nearest(self) -> int:
        """Index of the column closest to ``p`` (lowest index on ties)."""
        return int(np.argmin(self.dist))


def build_query(points: PointSet, p) -> QueryContext:
    p = np.array(p, dtype=np.float64, copy=True).reshape(-1)
    if p.shape[0] != points.m:
        raise InputError(f"query has dimension {p.shape[0]}, point set has m={points.m}")
    if not np.all(np.isfinite(p)):
        raise InputError("query point contains non-finite entries")
    p.setflags(write=False)
    dots = points.A.T @ p
    dist = np.linalg.norm(points.A - p[:, None], axis=0)
    for arr in (dots, dist):
        arr.setflags(write=False)
    return QueryContext(p=p, R=float(dist.max()), dots=dots, pnorm2=float(p @ p), dist=dist)


@dataclass
class Iterate:
    """A point of conv(A) carried as explicit convex-combination weights."""

    weights: np.ndarray
    point: np.ndarray

    @classmethod
    def vertex(cls, points: PointSet, i: int) -> "Iterate":
        w = np.zeros(points.n)
        w[i] = 1.0
        return cls(w, points.A[:, i].copy())

    @classmethod
    def from_weights(cls, points: PointSet, weights) -> "Iterate":
        w = np.asarray(weights, dtype=np.float64).copy()
        return cls(w, points.A @ w)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def refresh(self, points: PointSet) -> "Iterate":
        """Recompute the point from the weights."""
        return Iterate(self.weights.copy(), points.A @ self.weights)

    def copy(self) -> "Iterate":
        return Iterate(self.weights.copy(), self.point.copy())


@dataclass(frozen=True)
class WitnessCertificate:
    """A point ``p'`` of conv(A) strictly closer than ``p`` to every column."""

    witness: Iterate
    normal: np.ndarray
    offset: float
    distance: float
    verified: bool = field(default=False)


@dataclass(frozen=True)
class EpsilonSolution:
    iterate: Iterate
    delta: float
    kind: str = field(default="epsilon", init=False)


@dataclass(frozen=True)
class Witness:
    certificate: WitnessCertificate
    kind: str = field(default="witness", init=False)

    @property
    def iterate(self) -> Iterate:
        return self.certificate.witness

    @property
    def delta(self) -> float:
        return self.certificate.distance


@dataclass(frozen=True)
class GapCertificate:
    """The relative-error test fired while the iterate is still farther than eps*R."""

    iterate: Iterate
    gap: float
    delta: float
    kind: str = field(default="gap", init=False)


@dataclass(frozen=True)
class Exhausted:
    iterate: Iterate
    delta: float
    kind: str = field(default="exhausted", init=False)


@dataclass(frozen=True)
class Projection:
    """Approximate projection of ``p`` onto conv(A) (exact-projection mode)."""

    iterate: Iterate
    delta: float
    kind: str = field(default="projection", init=False)


SolveOutcome = Union[EpsilonSolution, Witness, GapCertificate, Exhausted, Projection]


# --------------------------------------------------------------------------
# pivot tests

def pivot_scores(points: PointSet, point: np.ndarray, q: QueryContext) -> np.ndarray:
    """Return ``v_i^T (p_k - p)`` for every column."""
    return points.A.T @ (point - q.p)


def pivot_threshold(point: np.ndarray, q: QueryContext) -> float:
    """Right-hand side ``(||p_k||^2 - ||p||^2) / 2`` of the pivot test."""
    diff = point - q.p
    # p^T(p_k - p) + ||p_k - p||^2 / 2, free of the ||p_k||^2 - ||p||^2 cancellation
    return float(q.p @ diff + 0.5 * (diff @ diff))


def is_pivot(points: PointSet, i: int, it: Iterate, q: QueryContext, tol: float = 0.0) -> bool:
    """Simple pivot: ``d(v_i, p) <= d(v_i, p_k)``."""
    v = points.A[:, i]
    return bool(v @ (it.point - q.p) <= pivot_threshold(it.point, q) + tol)


def is_strict_pivot(points: PointSet, i: int, it: Iterate, q: QueryContext, tol: float = 0.0) -> bool:
    """Strict pivot: the angle at ``p`` between ``p_k`` and ``v_i`` is at least 90 degrees."""
    v = points.A[:, i]
    return bool((it.point - q.p) @ (v - q.p) <= tol)


def find_pivot(
    points: PointSet,
    it: Iterate,
    q: QueryContext,
    policy: str = "random",
    rng: Optional[np.random.Generator] = None,
    tol: float = 0.0,
    scores: Optional[np.ndarray] = None,
):
    """Select a pivot column.

    Returns ``(index, score)`` where ``score = v_index^T (p_k - p)``, or
    ``None`` when no column is a pivot. ``policy`` is one of ``"first"``,
    ``"random"`` (uniform among all pivots, needs ``rng``) or ``"greedy"``
    (global minimiser of the score; ``None`` if even it fails the test).
    """
    if scores is None:
        scores = pivot_scores(points, it.point, q)
    thr = pivot_threshold(it.point, q) + tol
    if policy == "greedy":
        j = int(np.argmin(scores))
        if scores[j] <= thr:
            return j, float(scores[j])
        return None
    idx = np.flatnonzero(scores <= thr)
    # a column sitting exactly on p_k gives no direction; never pick it
    idx = idx[np.any(points.A[:, idx] != it.point[:, None], axis=0)]
    if len(idx) == 0:
        return None
    if policy == "first":
        j = int(idx[0])
    elif policy == "random":
        if rng is None:
            raise ContractError("random pivot policy needs a generator")
        j = int(idx[rng.integers(len(idx))])
    else:
        raise ValueError(f"unknown pivot policy {policy!r}")
    return j, float(scores[j])


def line_search_gamma(point: np.ndarray, v: np.ndarray, q: QueryContext) -> float:
    """Exact minimiser of ``||(1-g) p_k + g v - p||`` over ``g``, clamped to ``[GAMMA_FLOOR, 1]``."""
    d = v - point
    dd = float(d @ d)
    if dd == 0.0:
        raise DegenerateError("pivot coincides with the current iterate")
    g = -float((point - q.p) @ d) / dd
    return min(1.0, max(GAMMA_FLOOR, g))


def apply_step(points: PointSet, it: Iterate, j: int, gamma: float) -> Iterate:
    """Move ``gamma`` of the way from the iterate towards column ``j``."""
    if not 0.0 < gamma <= 1.0:
        raise ContractError(f"step size {gamma} outside (0, 1]")
    if gamma == 1.0:
        return Iterate.vertex(points, j)
    w = (1.0 - gamma) * it.weights
    w[j] += gamma
    point = (1.0 - gamma) * it.point + gamma * points.A[:, j]
    return Iterate(w, point)


# --------------------------------------------------------------------------
# witnesses

def _witness_tol(point: np.ndarray, q: QueryContext, relative: bool) -> float:
    if not relative:
        return 0.0
    return 1e-12 * (float(point @ point) + q.pnorm2)


def verify_witness(points: PointSet, q: QueryContext, point: np.ndarray, tol: float = 0.0) -> bool:
    """Check ``d(v_i, p) > d(v_i, p')`` for every column, from the raw coordinates."""
    to_p = np.einsum("ij,ij->j", points.A - q.p[:, None], points.A - q.p[:, None])
    to_w = np.einsum("ij,ij->j", points.A - point[:, None], points.A - point[:, None])
    return bool(np.all(to_p - to_w > tol))


def _make_certificate(it: Iterate, q: QueryContext, verified: bool) -> WitnessCertificate:
    normal = q.p - it.point
    offset = float(normal @ (it.point + q.p)) / 2.0
    return WitnessCertificate(
        witness=it,
        normal=normal,
        offset=offset,
        distance=float(np.linalg.norm(normal)),
        verified=verified,
    )


def witness_check(
    points: PointSet,
    it: Iterate,
    q: QueryContext,
    relative_tol: bool = False,
    scores: Optional[np.ndarray] = None,
) -> Optional[WitnessCertificate]:
    """Return a verified certificate iff no column is a pivot at ``it``."""
    if scores is None:
        scores = pivot_scores(points, it.point, q)
    tol = _witness_tol(it.point, q, relative_tol)
    margin = float(scores.min()) - pivot_threshold(it.point, q)
    if not margin > tol:
        return None
    if not verify_witness(points, q, it.point, 2.0 * tol):
        return None
    return _make_certificate(it, q, verified=True)


def separating_hyperplane(cert: WitnessCertificate):
    """Bisecting hyperplane ``{y : normal^T y = offset}`` of the segment ``[p', p]``."""
    if not cert.verified:
        raise ContractError("certificate has not been verified")
    return cert.normal, cert.offset


def sin_theta(point: np.ndarray, v: np.ndarray, q: QueryContext) -> float:
    """Sine of the angle at ``p_k`` between the rays towards ``p`` and ``v``."""
    a = q.p - point
    b = v - point
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DegenerateError("angle undefined for coincident points")
    c = float(a @ b) / (na * nb)
    c = min(1.0, max(-1.0, c))
    return float(np.sqrt(max(0.0, 1.0 - c * c)))


# --------------------------------------------------------------------------
# the equivalent algebraic forms of the pivot tests, as (lhs - rhs) slacks

def pivot_conditions(pk, v, p) -> np.ndarray:
    """Slacks of the four equivalent simple-pivot conditions (pivot iff slack <= 0)."""
    pk, v, p = (np.asarray(x, dtype=np.float64) for x in (pk, v, p))
    g = pk - p
    return np.array([
        np.linalg.norm(v - p) - np.linalg.norm(v - pk),
        2.0 * v @ g - (pk @ pk - p @ p),
        g @ (v - pk) + 0.5 * (g @ g),
        g @ (v - p) - 0.5 * (g @ g),
    ])


def strict_pivot_conditions(pk, v, p) -> np.ndarray:
    """Slacks of the four equivalent strict-pivot conditions."""
    pk, v, p = (np.asarray(x, dtype=np.float64) for x in (pk, v, p))
    g = pk - p
    return np.array([
        (v - p) @ (v - p) - ((v - pk) @ (v - pk) - g @ g),
        2.0 * v @ g - 2.0 * p @ g,
        g @ (v - pk) + g @ g,
        g @ (v - p),
    ])
