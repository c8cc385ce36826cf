"""Throughput-optimal power allocation for a two-hop relay link in which
source and relay harvest energy from each other's transmissions."""

from .baselines import solve_reference, solve_rno, solve_sno
from .closed_form import (
    case1_closed_form,
    solve_beta_ge_gamma,
    solve_eq7,
    solve_high_product,
    solve_low_product,
    solve_regime,
    verify_structure,
)
from .convex_core import LinearProgramShell, SolverDiagnostics, Status, solve_concave
from .dispatch import ALGORITHMS, solve
from .model import (
    DecomposedSchedule,
    EquivalentSchedule,
    FeasibilityReport,
    PowerSchedule,
    Regime,
    RegimeLabel,
    SystemParams,
    aggregate_supplements,
    check_feasibility,
    classify_regime,
    decompose,
    throughput,
    to_equivalent,
    to_physical,
)
from .oracle import GridSpec, certify, grid_search
from .solution import SolveReport, StructuralCheck

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "DecomposedSchedule",
    "EquivalentSchedule",
    "FeasibilityReport",
    "GridSpec",
    "LinearProgramShell",
    "PowerSchedule",
    "Regime",
    "RegimeLabel",
    "SolveReport",
    "SolverDiagnostics",
    "Status",
    "StructuralCheck",
    "SystemParams",
    "aggregate_supplements",
    "case1_closed_form",
    "certify",
    "check_feasibility",
    "classify_regime",
    "decompose",
    "grid_search",
    "solve",
    "solve_beta_ge_gamma",
    "solve_concave",
    "solve_eq7",
    "solve_high_product",
    "solve_low_product",
    "solve_reference",
    "solve_regime",
    "solve_rno",
    "solve_sno",
    "throughput",
    "to_equivalent",
    "to_physical",
    "verify_structure",
]
