"""Cross-checks of the regime solvers against the direct solve and the grid oracle.

Random parameter sets are drawn per regime from a seeded generator, so a
given seed always yields the same report text.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .baselines import solve_reference
from .closed_form import solve_regime, verify_structure
from .dispatch import default_grid
from .model import PowerSchedule, RegimeLabel, SystemParams, classify_regime
from .oracle import CERTIFY_TOL, grid_search
from .solution import SolveReport, make_report

__all__ = [
    "INVARIANTS",
    "AGREE_TOL",
    "TIGHT_TOL",
    "draw_params",
    "terminal_slack",
    "agreement_gap",
    "ValidationReport",
    "run_validation",
]

AGREE_TOL = 1e-6
TIGHT_TOL = 1e-7
INVARIANTS = ("converged", "feasible", "agreement", "oracle_dominance", "oracle_gap", "structure", "tightness")

# sampling box for random instances
_SNR1 = (0.2, 5.0)
_SNR2 = (0.5, 2.0)
_HARVEST = (0.0, 1.5)
_INITIAL = (0.0, 2.0)


def draw_params(rng: np.random.Generator, label: RegimeLabel, n_max: int) -> SystemParams:
    """Rejection-sample an instance of the requested regime with ``1 <= N <= n_max``."""
    for _ in range(100_000):
        n = int(rng.integers(1, n_max + 1))
        g1 = float(rng.uniform(*_SNR1))
        g2 = float(rng.uniform(*_SNR2))
        beta = float(rng.uniform(*_HARVEST))
        p10, p20 = (float(v) for v in rng.uniform(*_INITIAL, size=2))
        params = SystemParams(1.0, n, g1, g2, beta, p10, p20)
        if classify_regime(params).label is label:
            return params
    raise RuntimeError(f"could not sample regime {label}")


def terminal_slack(report: SolveReport) -> float:
    """Slack of the final budget row that the regime's optimum spends exactly.

    SN's last row for the cooperative regime, RN's last row otherwise.
    """
    f = report.feasibility
    if report.regime.label is RegimeLabel.BETA_GE_GAMMA:
        return float(f.slack1[-1])
    return float(f.slack2[-1])


def agreement_gap(a: float, b: float) -> float:
    """``|a - b|`` relative to ``max(1, |b|)``."""
    return abs(a - b) / max(1.0, abs(b))


@dataclass
class _Tally:
    passed: int = 0
    failed: int = 0
    first: str = ""

    def add(self, ok: bool, detail: str) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if not self.first:
                self.first = detail


@dataclass
class ValidationReport:
    seed: int
    trials: int
    n_max: int
    tallies: Dict[Tuple[str, str], _Tally] = field(default_factory=dict)

    @property
    def failures(self) -> List[Tuple[str, str]]:
        return [k for k, t in self.tallies.items() if t.failed]

    @property
    def ok(self) -> bool:
        return not self.failures

    def render(self) -> str:
        lines = [f"validate seed={self.seed} trials={self.trials} n_max={self.n_max}"]
        lines.append(f"{'invariant':<18}{'regime':<17}{'pass':>6}{'fail':>6}  first failure")
        for (inv, label), t in self.tallies.items():
            lines.append(f"{inv:<18}{label:<17}{t.passed:>6}{t.failed:>6}  {t.first or '-'}")
        names = sorted({inv for inv, _ in self.failures}, key=INVARIANTS.index)
        if names:
            lines.append(f"result: FAIL ({', '.join(names)})")
        else:
            lines.append("result: PASS")
        return "\n".join(lines) + "\n"


def _halved(report: SolveReport) -> SolveReport:
    sched = PowerSchedule(report.schedule.powers * 0.5)
    return make_report("faulty", report.params, sched, report.diagnostics, report.regime)


def run_validation(seed: int, trials: int, n_max: int, inject_fault: bool = False) -> ValidationReport:
    """Run every invariant on ``trials`` draws per regime.

    ``inject_fault`` halves each regime-solver schedule before checking,
    which must trip the agreement and oracle checks (harness self-test).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 1 <= n_max <= 3:
        raise ValueError("n_max must be between 1 and 3 (grid oracle limit)")
    rng = np.random.default_rng(seed)
    rep = ValidationReport(seed, trials, n_max)
    for label in RegimeLabel:
        tally = {inv: rep.tallies.setdefault((inv, str(label)), _Tally()) for inv in INVARIANTS}
        for t in range(trials):
            params = draw_params(rng, label, n_max)
            tag = f"trial {t}"
            opt = solve_regime(params)
            if inject_fault:
                opt = _halved(opt)
            ref = solve_reference(params)
            grid = grid_search(params, default_grid(params.phases))
            c = opt.throughput
            tally["converged"].add(
                opt.diagnostics.converged and ref.diagnostics.converged,
                f"{tag}: opt {opt.status}, eq1 {ref.status}",
            )
            tally["feasible"].add(opt.feasibility.feasible, f"{tag}: violation {opt.feasibility.max_violation:.3g}")
            gap = agreement_gap(c, ref.throughput)
            tally["agreement"].add(gap <= AGREE_TOL, f"{tag}: |opt-eq1| {gap:.3g}")
            tally["oracle_dominance"].add(
                c >= grid.throughput - CERTIFY_TOL, f"{tag}: grid exceeds opt by {grid.throughput - c:.3g}"
            )
            tally["oracle_gap"].add(
                grid.throughput >= c - grid.grid_gap, f"{tag}: opt exceeds grid by {c - grid.throughput:.3g}"
            )
            bad = [s for s in verify_structure(params, opt) if not s.holds]
            tally["structure"].add(
                not bad, f"{tag}: {bad[0].prop} ({bad[0].detail}) at phase {bad[0].witness}" if bad else ""
            )
            slack = terminal_slack(opt)
            tally["tightness"].add(abs(slack) <= TIGHT_TOL, f"{tag}: terminal slack {slack:.3g}")
    return rep
