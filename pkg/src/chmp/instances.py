"""Seeded CHMP instance generators and the ``CHMP v1`` text format.

Cases:

``a``  p = 0, the centre of the unit ball (relative interior, w.h.p.).
``b``  p = midpoint of the two columns maximising ``e^T v``, plus an
       extra column ``v_s`` closer to p than either of them.
``c``  as ``b`` but p dilated by 1.5 and no ``v_s`` (p outside).
``d``  as ``b`` but p dilated by 1.01, ``v_s`` added (p barely outside).
``unit-square-inside`` / ``unit-square-outside``: the five-point planar
       example with an off-centre interior point.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from .geometry import InputError, PointSet
from .rng import box_muller, make_rng

CASES = ("a", "b", "c", "d", "unit-square-inside", "unit-square-outside")

SQUARE_SHIFT = 0.1


@dataclass(frozen=True)
class InstanceSpec:
    case: str
    m: int = 100
    n: int = 1000
    seed: int = 0
    beta: float = 0.9
    dilation: float = 0.0  # 0 selects the case default

    def __post_init__(self) -> None:
        case = normalize_case(self.case)
        object.__setattr__(self, "case", case)
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.dilation and self.dilation <= 1.0:
            raise ValueError("dilation must exceed 1")


def normalize_case(name: str) -> str:
    key = name.strip().lower().replace("_", "-").replace(" ", "-")
    aliases = {
        "unitsquare-inside": "unit-square-inside",
        "unitsquare-outside": "unit-square-outside",
        "square-inside": "unit-square-inside",
        "square-outside": "unit-square-outside",
    }
    key = aliases.get(key, key)
    if key not in CASES:
        raise ValueError(f"unknown case {name!r}; choose from {', '.join(CASES)}")
    return key


def sample_unit_ball(m: int, n: int, rng: np.random.Generator) -> PointSet:
    """``n`` points uniform in the unit ball of R^m, as columns.

    Each column consumes ``2 * ceil(m / 2) + 1`` uniforms: Box-Muller radii,
    Box-Muller angles, then the radius draw ``u`` (the point is scaled by
    ``u ** (1 / m)``).
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    h = (m + 1) // 2
    U = rng.random((n, 2 * h + 1))
    Z = box_muller(U[:, :h].T, U[:, h:2 * h].T).T[:, :m]
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    radius = U[:, 2 * h:] ** (1.0 / m)
    return PointSet((radius * Z / norms).T)


def _top_two(points: PointSet) -> Tuple[int, int]:
    scores = points.A.sum(axis=0)
    order = np.argsort(-scores, kind="stable")
    return int(order[0]), int(order[1])


def _shrunk_point(p: np.ndarray, vl: np.ndarray, vq: np.ndarray, beta: float) -> np.ndarray:
    return p - (beta / 2.0) * (np.linalg.norm(vl - vq) / np.linalg.norm(p)) * p


def _midpoint_case(m, n, rng, dilation, add_shrunk, beta):
    while True:
        pts = sample_unit_ball(m, n, rng)
        l, q = _top_two(pts)
        mid = 0.5 * pts.A[:, l] + 0.5 * pts.A[:, q]
        if np.linalg.norm(mid) > 0.0:
            break
    p = dilation * mid
    if add_shrunk:
        vs = _shrunk_point(p, pts.A[:, l], pts.A[:, q], beta)
        pts = PointSet(np.column_stack([pts.A, vs]))
    return pts, p


def gen_case_a(m: int, n: int, rng: np.random.Generator):
    return sample_unit_ball(m, n, rng), np.zeros(m)


def gen_case_b(m: int, n: int, rng: np.random.Generator, beta: float = 0.9):
    return _midpoint_case(m, n, rng, 1.0, True, beta)


def gen_case_c(m: int, n: int, rng: np.random.Generator, dilation: float = 1.5):
    return _midpoint_case(m, n, rng, dilation, False, 0.9)


def gen_case_d(m: int, n: int, rng: np.random.Generator, beta: float = 0.9, dilation: float = 1.01):
    return _midpoint_case(m, n, rng, dilation, True, beta)


def unit_square_instance(variant: str = "inside"):
    """Unit-square vertices plus the centre shifted right by 0.1.

    ``inside``: p = (1, 0.5), midpoint of the right edge.
    ``outside``: p = (1.05, 0.5), at distance 0.05 from the square.
    """
    variant = variant.lower()
    cols = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5 + SQUARE_SHIFT, 0.5]]).T
    if variant == "inside":
        p = np.array([1.0, 0.5])
    elif variant == "outside":
        p = np.array([1.05, 0.5])
    else:
        raise ValueError(f"variant must be 'inside' or 'outside', got {variant!r}")
    return PointSet(cols), p


def generate(spec: InstanceSpec):
    """Instance ``(PointSet, p)`` for a spec; deterministic in ``spec.seed``."""
    if spec.case == "unit-square-inside":
        return unit_square_instance("inside")
    if spec.case == "unit-square-outside":
        return unit_square_instance("outside")
    rng = make_rng(spec.seed)
    if spec.case == "a":
        return gen_case_a(spec.m, spec.n, rng)
    if spec.case == "b":
        return gen_case_b(spec.m, spec.n, rng, spec.beta)
    if spec.case == "c":
        return gen_case_c(spec.m, spec.n, rng, spec.dilation or 1.5)
    return gen_case_d(spec.m, spec.n, rng, spec.beta, spec.dilation or 1.01)


# --------------------------------------------------------------------------
# text format

def _fmt(values) -> str:
    return " ".join(f"{float(x):.17e}" for x in values)


def format_instance(points: PointSet, p) -> str:
    lines = [f"CHMP v1 {points.m} {points.n}"]
    lines.extend(_fmt(points.A[:, i]) for i in range(points.n))
    lines.append("p " + _fmt(p))
    return "\n".join(lines) + "\n"


def write_instance(path, points: PointSet, p) -> None:
    Path(path).write_text(format_instance(points, p))


def parse_instance(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError("empty instance file")
    head = lines[0].split()
    if len(head) != 4 or head[:2] != ["CHMP", "v1"]:
        raise InputError(f"bad header {lines[0]!r}")
    m, n = int(head[2]), int(head[3])
    if len(lines) != n + 2:
        raise InputError(f"expected {n} point lines and a query line, found {len(lines) - 1} lines")
    rows = []
    for ln in lines[1:n + 1]:
        vals = [float(x) for x in ln.split()]
        if len(vals) != m:
            raise InputError(f"point line has {len(vals)} values, expected {m}")
        rows.append(vals)
    tail = lines[-1].split()
    if tail[0] != "p" or len(tail) != m + 1:
        raise InputError("query line must be 'p' followed by m values")
    p = np.array([float(x) for x in tail[1:]])
    return PointSet(np.array(rows).T), p


def read_instance(path):
    return parse_instance(Path(path).read_text())
