"""CHMP solvers: TA, GT, FW, ASFW, SPG and the exact-projection baseline."""

from ._common import (
    ConfigError,
    SolverConfig,
    SolveReport,
    SPGParams,
    TraceRecord,
    default_eps,
    default_maxit,
)
from .frank_wolfe import solve_asfw, solve_fw
from .spg import lipschitz_bound, simplex_project, solve_proj, solve_spg, spectral_norm2
from .triangle import solve_gt, solve_ta

SOLVERS = {
    "TA": solve_ta,
    "GT": solve_gt,
    "FW": solve_fw,
    "ASFW": solve_asfw,
    "SPG": solve_spg,
    "PROJ": solve_proj,
}


def solve(name: str, points, q, cfg=None) -> SolveReport:
    """Run the solver registered under ``name`` (case-insensitive)."""
    try:
        fn = SOLVERS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
    return fn(points, q, cfg)


__all__ = [
    "ConfigError",
    "SOLVERS",
    "SPGParams",
    "SolveReport",
    "SolverConfig",
    "TraceRecord",
    "default_eps",
    "default_maxit",
    "lipschitz_bound",
    "simplex_project",
    "solve",
    "solve_asfw",
    "solve_fw",
    "solve_gt",
    "solve_proj",
    "solve_spg",
    "solve_ta",
    "spectral_norm2",
]
