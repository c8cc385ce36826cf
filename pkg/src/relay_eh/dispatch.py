"""Name-based access to every solver, shared by the CLI, sweeps and validation."""

from __future__ import annotations

from typing import Callable, Dict, Optional

from .baselines import solve_reference, solve_rno, solve_sno
from .closed_form import solve_eq7, solve_regime
from .convex_core import SolverDiagnostics, Status
from .model import SystemParams, check_feasibility
from .oracle import GridSpec, grid_search
from .solution import SolveReport, make_report

__all__ = ["ALGORITHMS", "solve", "solve_oracle", "default_grid"]


def default_grid(phases: int) -> GridSpec:
    """Finest default grid that stays tractable for ``phases`` (6 variables at most)."""
    if phases <= 2:
        return GridSpec()
    if phases == 3:
        return GridSpec(resolution=11)
    raise ValueError("the grid oracle supports at most 3 phases")


def solve_oracle(params: SystemParams, spec: Optional[GridSpec] = None) -> SolveReport:
    spec = spec or default_grid(params.phases)
    res = grid_search(params, spec)
    viol = check_feasibility(params, res.schedule, tol=0.0).max_violation
    # the grid gap plays the role of the optimality residual
    diag = SolverDiagnostics(spec.rounds, res.throughput, viol, res.grid_gap, Status.CONVERGED)
    return make_report("oracle", params, res.schedule, diag)


ALGORITHMS: Dict[str, Callable[[SystemParams], SolveReport]] = {
    "opt": solve_regime,
    "eq1": solve_reference,
    "eq7": solve_eq7,
    "sno": solve_sno,
    "rno": solve_rno,
    "oracle": solve_oracle,
}


def solve(params: SystemParams, algorithm: str = "opt") -> SolveReport:
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}") from None
    return fn(params)
