"""Reference policies where only one of the two nodes harvests.

``sno``: SN harvests from the relay's transmissions, RN lives on its own
initial storage.  ``rno``: SN is a conventional node holding both initial
storages, RN starts empty and forwards with what it harvests (including
energy harvested within the current phase).
"""

from __future__ import annotations

import numpy as np

from .convex_core import solve_concave
from .model import PowerSchedule, SystemParams
from .programs import build_eq1, build_rno, build_sno
from .solution import SolveReport, make_report

__all__ = ["solve_sno", "solve_rno", "solve_reference"]


def _solve_two_node(name, shell, params, variant="full") -> SolveReport:
    x, diag = solve_concave(shell)
    n = params.phases
    sched = PowerSchedule(np.vstack([x[:n], x[n:]]))
    variables = dict(zip(shell.names, map(float, x)))
    return make_report(name, params, sched, diag, variables=variables, variant=variant)


def solve_sno(params: SystemParams) -> SolveReport:
    return _solve_two_node("sno", build_sno(params), params, "sno")


def solve_rno(params: SystemParams) -> SolveReport:
    return _solve_two_node("rno", build_rno(params), params, "rno")


def solve_reference(params: SystemParams) -> SolveReport:
    """Direct solve of the full joint allocation program (no regime reduction)."""
    return _solve_two_node("eq1", build_eq1(params), params)
