"""Constraint matrices for the full allocation program and its reductions.

Row tags name the constraint each row encodes: ``EC_{i,j}`` for the
energy-causality row of node ``i`` in phase ``j`` (1-based), ``AC_{j}``
for the greedy-source feasibility rows, ``NC`` for non-negativity and
``BRANCH`` for the row fixing one supplement to zero.
"""

from __future__ import annotations

from .convex_core import LinearProgramShell, LogTerm, MinLogTerm
from .model import Regime, SystemParams, classify_regime

__all__ = [
    "build_eq1",
    "build_eq2",
    "build_eq5",
    "build_eq7",
    "build_sno",
    "build_rno",
]


def _ec(i: int, j: int) -> str:
    return f"EC_{{{i},{j}}}"


def _phase_shell(params: SystemParams) -> LinearProgramShell:
    n = params.phases
    names = [f"P1_{j}" for j in range(1, n + 1)] + [f"P2_{j}" for j in range(1, n + 1)]
    shell = LinearProgramShell(2 * n, names)
    w = 0.5 * params.bandwidth
    for j in range(n):
        pairs = ((params.snr1, j), (params.snr2, n + j))
        shell.terms.append(MinLogTerm(w, pairs, f"phase_{j + 1}"))
    return shell


def build_eq1(params: SystemParams) -> LinearProgramShell:
    """Joint allocation over all ``P[i, j]`` with both nodes harvesting."""
    return _two_node_program(params, sn_harvests=True, rn_harvests=True)


def build_sno(params: SystemParams) -> LinearProgramShell:
    """Only SN harvests; RN runs on its initial storage alone."""
    return _two_node_program(params, sn_harvests=True, rn_harvests=False)


def build_rno(params: SystemParams) -> LinearProgramShell:
    """Only RN harvests; SN holds both initial storages and RN starts empty."""
    return _two_node_program(
        params,
        sn_harvests=False,
        rn_harvests=True,
        budget1=params.initial1 + params.initial2,
        budget2=0.0,
    )


def _two_node_program(params, sn_harvests, rn_harvests, budget1=None, budget2=None):
    n, beta = params.phases, params.harvest
    budget1 = params.initial1 if budget1 is None else budget1
    budget2 = params.initial2 if budget2 is None else budget2
    shell = _phase_shell(params)
    for j in range(n):
        row = {k: 1.0 for k in range(j + 1)}
        if sn_harvests:
            for k in range(j):
                row[n + k] = -beta
        shell.add(row, budget1, _ec(1, j + 1))
        row = {n + k: 1.0 for k in range(j + 1)}
        if rn_harvests:
            for k in range(j + 1):
                row[k] = -beta
        shell.add(row, budget2, _ec(2, j + 1))
    shell.add_nonneg()
    return shell


def build_eq2(params: SystemParams) -> LinearProgramShell:
    """Fully cooperative relay: variables ``P1_j``; RN returns all it harvests.

    With ``P2_1 = beta P1_1 + P20`` and ``P2_j = beta P1_j`` substituted, SN's
    budget in phase ``j >= 2`` is ``P10 + beta P20 + beta^2 sum_{k<j} P1_k``.
    """
    n, beta = params.phases, params.harvest
    shell = LinearProgramShell(n, [f"P1_{j}" for j in range(1, n + 1)])
    w = 0.5 * params.bandwidth
    shell.terms.extend(LogTerm(w, params.snr1, j) for j in range(n))
    shell.add({0: 1.0}, params.initial1, _ec(1, 1))
    for j in range(1, n):
        row = {k: 1.0 - beta**2 for k in range(j)}
        row[j] = 1.0
        shell.add(row, params.initial1 + beta * params.initial2, _ec(1, j + 1))
    shell.add_nonneg()
    return shell


def build_eq5(params: SystemParams) -> LinearProgramShell:
    """Fully greedy source: variables ``p2_1..p2_N`` (relay data power) and ``alpha2``.

    ``alpha2`` is RN's aggregated first-phase supplement.  ``AC_{j}`` rows
    keep SN's harvest from the previous phase sufficient for its share of
    phase ``j``.
    """
    n, beta, gamma = params.phases, params.harvest, params.ratio
    a2 = n
    shell = LinearProgramShell(n + 1, [f"p2_{j}" for j in range(1, n + 1)] + ["alpha2"])
    w = 0.5 * params.bandwidth
    shell.terms.extend(LogTerm(w, params.snr2, j) for j in range(n))
    budget = params.initial2 + beta * params.initial1
    shell.add({0: 1.0}, params.initial1 * gamma, _ec(1, 1))
    shell.add({0: 1.0, a2: 1.0}, budget, _ec(2, 1))
    if n >= 2:
        shell.add({1: 1.0, 0: -beta * gamma, a2: -beta * gamma}, 0.0, "AC_{2}")
    for j in range(2, n):
        shell.add({j: 1.0, j - 1: -beta * gamma}, 0.0, f"AC_{{{j + 1}}}")
    for j in range(1, n):
        row = {k: 1.0 - beta**2 for k in range(j)}
        row[j] = 1.0
        row[a2] = 1.0 - beta**2
        shell.add(row, budget, _ec(2, j + 1))
    shell.add_nonneg()
    return shell


def build_eq7(
    params: SystemParams, fix_alpha1_zero: bool, regime: Regime | None = None
) -> LinearProgramShell:
    """Equivalent-system program with aggregated first-phase supplements.

    Variables ``p2_1..p2_N`` (equivalent relay data power), ``alpha1`` and
    ``alpha2``.  The complementarity ``alpha1 * alpha2 = 0`` is resolved by
    the caller choosing a branch: ``fix_alpha1_zero=True`` keeps only RN's
    supplement, ``False`` keeps only SN's.
    """
    regime = regime or classify_regime(params)
    if not regime.label.is_low_product:
        raise ValueError(f"equivalent-system program needs a low-product regime, got {regime.label}")
    n, beta, gamma = params.phases, params.harvest, params.ratio
    gp = regime.gamma_prime
    prod = beta * gamma
    a1, a2 = n, n + 1
    shell = LinearProgramShell(n + 2, [f"p2_{j}" for j in range(1, n + 1)] + ["alpha1", "alpha2"])
    w = 0.5 * params.bandwidth
    shell.terms.extend(LogTerm(w, regime.gamma2_prime, j) for j in range(n))
    row = {k: 1.0 for k in range(n)}
    row[a2] = 1.0
    row[a1] = -beta
    shell.add(row, params.initial2, _ec(2, n), sense="==")
    shell.add({0: 1.0, a1: gp}, params.initial1 * gp, _ec(1, 1))
    for j in range(1, n):
        row = {k: 1.0 - prod for k in range(j)}
        row[j] = 1.0
        row[a1] = gp
        row[a2] = -beta * gp
        shell.add(row, params.initial1 * gp, _ec(1, j + 1))
    shell.add({a1 if fix_alpha1_zero else a2: 1.0}, 0.0, "BRANCH", sense="==")
    shell.add_nonneg()
    return shell
