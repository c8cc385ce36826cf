"""Solver output bundle shared by every algorithm."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from .convex_core import SolverDiagnostics, Status
from .model import (
    DecomposedSchedule,
    EquivalentSchedule,
    FeasibilityReport,
    PowerSchedule,
    Regime,
    SystemParams,
    check_feasibility,
    classify_regime,
    decompose,
    throughput,
)

__all__ = ["StructuralCheck", "SolveReport", "make_report"]


@dataclass(frozen=True)
class StructuralCheck:
    """Outcome of one structural property check.

    ``witness`` is the first 1-based phase index violating the property, or
    0 when the violation is not tied to a single phase.
    """

    prop: str
    holds: bool
    witness: Optional[int] = None
    tol: float = 1e-7
    detail: str = ""

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError("a failed check needs a witness")


@dataclass(frozen=True)
class SolveReport:
    algorithm: str
    params: SystemParams
    regime: Regime
    schedule: PowerSchedule
    throughput: float
    feasibility: FeasibilityReport
    diagnostics: SolverDiagnostics
    decomposition: DecomposedSchedule
    equivalent: Optional[EquivalentSchedule] = None
    variables: Dict[str, float] = field(default_factory=dict)
    checks: Tuple[StructuralCheck, ...] = ()

    @property
    def status(self) -> Status:
        return self.diagnostics.status


def make_report(
    algorithm: str,
    params: SystemParams,
    schedule: PowerSchedule,
    diagnostics: SolverDiagnostics,
    regime: Optional[Regime] = None,
    equivalent: Optional[EquivalentSchedule] = None,
    variables: Optional[Dict[str, float]] = None,
    checks: Tuple[StructuralCheck, ...] = (),
    variant: str = "full",
) -> SolveReport:
    """Bundle a schedule with its throughput, slacks and decomposition.

    Slacks are measured against the constraint set named by ``variant``
    (see :func:`check_feasibility`).
    """
    return SolveReport(
        algorithm=algorithm,
        params=params,
        regime=regime or classify_regime(params),
        schedule=schedule,
        throughput=throughput(params, schedule),
        feasibility=check_feasibility(params, schedule, variant=variant),
        diagnostics=diagnostics,
        decomposition=decompose(params, schedule),
        equivalent=equivalent,
        variables=dict(variables or {}),
        checks=tuple(checks),
    )
