"""Nearest-hull image classification using witness distances.

Each class is a point set; a test image is assigned to the class whose
convex hull it is (estimated to be) closest to. Distance estimates come from
a CHMP solve: a witness ``p'`` gives ``||p' - p||``, which is within a factor
of two of the true distance; an eps-solution gives the bound ``eps R``; the
PROJ solver gives the distance itself.

Pixel values are kept raw (0..255). Reported distances are divided by 255.
"""

from __future__ import annotations

import csv
import gzip
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .geometry import InputError, PointSet, build_query
from .rng import box_muller, make_rng
from .solvers import SolverConfig, SPGParams, solve

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
PIXEL_MAX = 255.0

CLASSIFY_SPG = SPGParams(M=3)


class IdxFormatError(InputError):
    pass


@dataclass
class LabeledPointSet:
    """Per-label point sets sharing one ambient dimension."""

    classes: Dict[int, PointSet]

    def __post_init__(self) -> None:
        if not self.classes:
            raise InputError("no classes")
        dims = {ps.m for ps in self.classes.values()}
        if len(dims) != 1:
            raise InputError(f"classes disagree on dimension: {sorted(dims)}")
        self.classes = dict(sorted(self.classes.items()))

    @classmethod
    def from_arrays(cls, X, y) -> "LabeledPointSet":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y).astype(int)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise InputError(f"{X.shape[0]} samples but {y.shape[0]} labels")
        return cls({int(lab): PointSet.from_points(X[y == lab]) for lab in np.unique(y)})

    @property
    def m(self) -> int:
        return next(iter(self.classes.values())).m

    @property
    def labels(self) -> List[int]:
        return list(self.classes)

    def size(self) -> int:
        return sum(ps.n for ps in self.classes.values())

    def to_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Samples as rows, grouped by ascending label."""
        X = np.vstack([ps.A.T for ps in self.classes.values()])
        y = np.concatenate([np.full(ps.n, lab) for lab, ps in self.classes.items()])
        return X, y


# --------------------------------------------------------------------------
# IDX files

def _open(path):
    path = Path(path)
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def _read_idx(path, magic: int, ndim: int) -> np.ndarray:
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 4 + 4 * ndim:
        raise IdxFormatError(f"{path}: truncated header")
    got = struct.unpack(">I", raw[:4])[0]
    if got != magic:
        raise IdxFormatError(f"{path}: magic {got:#010x}, expected {magic:#010x}")
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    body = raw[4 + 4 * ndim:]
    need = int(np.prod(dims))
    if len(body) < need:
        raise IdxFormatError(f"{path}: {len(body)} data bytes, header promises {need}")
    return np.frombuffer(body, dtype=np.uint8, count=need).reshape(dims)


def load_idx_arrays(images_path, labels_path, limit: Optional[int] = None):
    """``(X, y)`` with one flattened image per row, optionally truncated."""
    if limit is not None and limit < 1:
        raise InputError("limit must be positive")
    images = _read_idx(images_path, IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    X = images.reshape(images.shape[0], -1).astype(np.float64)
    y = labels.astype(int)
    if limit is not None:
        X, y = X[:limit], y[:limit]
    return X, y


def load_idx(images_path, labels_path, limit: Optional[int] = None) -> LabeledPointSet:
    X, y = load_idx_arrays(images_path, labels_path, limit)
    return LabeledPointSet.from_arrays(X, y)


def write_idx(images_path, labels_path, images, labels) -> None:
    """Write ``(count, rows, cols)`` uint8 images and their labels as IDX."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    if images.ndim != 3 or images.shape[0] != labels.shape[0]:
        raise InputError("images must be (count, rows, cols) with one label each")
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">4I", IMAGES_MAGIC, *images.shape))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">2I", LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


# --------------------------------------------------------------------------
# distances and classification

@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    kind: str  # "witness" | "inside" | "exact" | "upper"
    iterations: int


def default_classify_config(eps: float = 1e-4, **kw) -> SolverConfig:
    kw.setdefault("spg", CLASSIFY_SPG)
    return SolverConfig(eps=eps, **kw)


def witness_distance(p, class_set: PointSet, solver: str = "TA", eps: float = 1e-4,
                     cfg: Optional[SolverConfig] = None) -> DistanceEstimate:
    """Estimated distance from ``p`` to the hull of ``class_set``.

    ``witness``: ``||p' - p||``, between the true distance and twice it.
    ``inside``: p is within ``eps R`` of the hull; the value is ``eps R``.
    ``exact``: PROJ solve, the distance itself.
    ``upper``: gap certificate or exhausted budget; the last ``delta``.
    """
    cfg = cfg.with_(eps=eps) if cfg is not None else default_classify_config(eps)
    q = build_query(class_set, p)
    rep = solve(solver, class_set, q, cfg)
    out = rep.outcome
    if out.kind == "projection":
        return DistanceEstimate(out.delta, "exact", rep.iterations)
    if out.kind == "witness":
        return DistanceEstimate(out.certificate.distance, "witness", rep.iterations)
    if out.kind == "epsilon":
        return DistanceEstimate(cfg.eps * q.R, "inside", rep.iterations)
    return DistanceEstimate(out.delta, "upper", rep.iterations)


def classify(p, labeled: LabeledPointSet, solver: str = "TA", eps: float = 1e-4,
             cfg: Optional[SolverConfig] = None):
    """``(label, {label: DistanceEstimate})``; ties go to the lowest label."""
    dists = {lab: witness_distance(p, ps, solver, eps, cfg) for lab, ps in labeled.classes.items()}
    best = min(sorted(dists), key=lambda lab: dists[lab].value)
    return best, dists


def _scaled(d: Optional[DistanceEstimate]) -> str:
    return "" if d is None else f"{d.value / PIXEL_MAX:.9g}"


@dataclass
class PredictionRow:
    test_id: int
    true_label: int
    predicted_label: int
    distances: Dict[int, DistanceEstimate]
    wall_time_ms: float


@dataclass
class AccuracyReport:
    labels: List[int]
    rows: List[PredictionRow]
    confusion: np.ndarray  # confusion[true, predicted], indexed by position in labels
    wall_time: float
    solver: str = ""
    kinds: Dict[str, int] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    def per_class(self) -> List[Tuple[int, int, int, float]]:
        out = []
        for i, lab in enumerate(self.labels):
            n = int(self.confusion[i].sum())
            hit = int(self.confusion[i, i])
            out.append((lab, n, hit, hit / n if n else 0.0))
        return out

    def write_predictions(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["test_id", "true_label", "predicted_label"]
                       + [f"dist_{lab}" for lab in self.labels] + ["wall_time_ms"])
            for r in self.rows:
                w.writerow([r.test_id, r.true_label, r.predicted_label]
                           + [_scaled(r.distances.get(lab)) for lab in self.labels]
                           + [f"{r.wall_time_ms:.3f}"])

    def summary_rows(self) -> List[List[str]]:
        """One row per class plus a total row."""
        rows = [["label", "count", "correct", "accuracy"]
                + [f"pred_{lab}" for lab in self.labels]]
        for (lab, n, hit, acc), counts in zip(self.per_class(), self.confusion):
            rows.append([str(lab), str(n), str(hit), f"{acc:.6f}"] + [str(int(c)) for c in counts])
        total = int(self.confusion.sum())
        rows.append(["total", str(total), str(int(np.trace(self.confusion))), f"{self.accuracy:.6f}"]
                    + [str(int(c)) for c in self.confusion.sum(axis=0)])
        return rows

    def write_summary(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(self.summary_rows())


def _classify_one(args):
    idx, p, true_label, labeled, solver, eps, cfg = args
    t0 = time.perf_counter()
    label, dists = classify(p, labeled, solver, eps, cfg)
    return PredictionRow(idx, true_label, label, dists, 1000.0 * (time.perf_counter() - t0))


def accuracy_report(train: LabeledPointSet, test, solver: str = "TA", eps: float = 1e-4,
                    cfg: Optional[SolverConfig] = None, jobs: int = 1) -> AccuracyReport:
    """Classify every test sample; ``test`` is a LabeledPointSet or ``(X, y)``."""
    X, y = test.to_arrays() if isinstance(test, LabeledPointSet) else (np.asarray(test[0], float), np.asarray(test[1]))
    if X.shape[1] != train.m:
        raise InputError(f"test dimension {X.shape[1]} != training dimension {train.m}")
    labels = sorted(set(train.labels) | {int(v) for v in y})
    pos = {lab: i for i, lab in enumerate(labels)}
    tasks = [(i, X[i], int(y[i]), train, solver, eps, cfg) for i in range(X.shape[0])]
    t0 = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_classify_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_classify_one(t) for t in tasks]
    wall = time.perf_counter() - t0
    conf = np.zeros((len(labels), len(labels)), dtype=np.int64)
    kinds: Dict[str, int] = {}
    for r in rows:
        conf[pos[r.true_label], pos[r.predicted_label]] += 1
        for d in r.distances.values():
            kinds[d.kind] = kinds.get(d.kind, 0) + 1
    return AccuracyReport(labels, rows, conf, wall, solver.upper(), kinds)


# --------------------------------------------------------------------------
# fixtures

def blob_dataset(n_per_class: int = 30, separation: float = 10.0, seed: int = 0):
    """Two Gaussian blobs in R^2 whose centres are ``separation`` apart."""
    rng = make_rng(seed)
    pts, labs = [], []
    for lab, cx in ((0, 0.0), (1, separation)):
        U = rng.random((2, n_per_class))
        Z = box_muller(U[0], U[1]).reshape(2, n_per_class).T
        pts.append(Z + np.array([cx, 0.0]))
        labs.append(np.full(n_per_class, lab))
    return np.vstack(pts), np.concatenate(labs)


def split_per_class(X, y, train_per_class: int, test_total: int, seed: int = 0):
    """Seeded split: up to ``train_per_class`` training samples of each label,
    and ``test_total`` test samples drawn from the remainder."""
    rng = make_rng(seed)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(int)
    order = rng.permutation(len(y))
    train_idx: List[int] = []
    rest: List[int] = []
    taken: Dict[int, int] = {}
    for i in order:
        lab = int(y[i])
        if taken.get(lab, 0) < train_per_class:
            taken[lab] = taken.get(lab, 0) + 1
            train_idx.append(int(i))
        else:
            rest.append(int(i))
    test_idx = np.array(sorted(rest[:test_total]), dtype=int)
    train_idx_a = np.array(sorted(train_idx), dtype=int)
    return (X[train_idx_a], y[train_idx_a]), (X[test_idx], y[test_idx])
