from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from ..geometry import SolveOutcome

DEFAULT_EPS = 1e-4


def default_eps() -> float:
    """Relative tolerance, overridable through ``CHMP_DEFAULT_EPS``."""
    raw = os.environ.get("CHMP_DEFAULT_EPS")
    return float(raw) if raw else DEFAULT_EPS


def default_maxit(n: int) -> int:
    return min(max(1000 * n, 10_000), 1_000_000)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SPGParams:
    M: int = 15
    eta: float = 1e-4
    lam_min: float = 1e-8
    lam_max: float = 1e8
    lam0: float = 1.0
    eps_proj: float = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and knobs shared by all solvers.

    ``maxit=None`` means ``min(max(1000 n, 10000), 10**6)``.
    """

    eps: float = field(default_factory=default_eps)
    maxit: Optional[int] = None
    pivot_policy: str = "random"
    seed: int = 0
    spg: SPGParams = SPGParams()
    trace: bool = False
    trace_weights: bool = False
    pivot_tol: float = 0.0
    relative_witness_tol: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.maxit is not None and self.maxit < 1:
            raise ConfigError("maxit must be >= 1")
        if self.pivot_policy not in ("first", "random", "greedy"):
            raise ConfigError(f"unknown pivot policy {self.pivot_policy!r}")
        s = self.spg
        if s.M < 1 or not 0.0 < s.eta < 1.0:
            raise ConfigError("SPG needs M >= 1 and eta in (0, 1)")
        if not 0.0 < s.lam_min <= s.lam_max:
            raise ConfigError("SPG needs 0 < lam_min <= lam_max")
        if not s.lam_min <= s.lam0 <= s.lam_max:
            raise ConfigError(f"lam0={s.lam0} outside [{s.lam_min}, {s.lam_max}]")

    def max_iterations(self, n: int) -> int:
        return self.maxit if self.maxit is not None else default_maxit(n)

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class TraceRecord:
    delta: float
    delta_next: float = math.nan
    sin_theta: float = math.nan
    kind: str = ""
    gamma: float = math.nan
    lam: float = math.nan
    weights: Optional[np.ndarray] = None


@dataclass
class SolveReport:
    outcome: SolveOutcome
    iterations: int
    wall_time: float
    solver: str = ""
    trace: Optional[List[TraceRecord]] = None

    @property
    def kind(self) -> str:
        return self.outcome.kind

    @property
    def delta(self) -> float:
        return self.outcome.delta

    @property
    def says_inside(self) -> Optional[bool]:
        """True for an eps-solution, False for witness/gap, None otherwise."""
        if self.kind == "epsilon":
            return True
        if self.kind in ("witness", "gap"):
            return False
        return None
