import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import EXAMPLE_D, system_params
from relay_eh import LinearProgramShell, SystemParams, Status, check_feasibility, classify_regime
from relay_eh.baselines import solve_reference
from relay_eh.closed_form import solve_beta_ge_gamma, solve_high_product
from relay_eh.convex_core import LogTerm, MinLogTerm, solve_concave
from relay_eh.programs import build_eq1, build_eq2, build_eq5, build_eq7


def _single(bound):
    shell = LinearProgramShell(1)
    shell.terms.append(LogTerm(1.0, 1.0, 0))
    shell.add({0: 1.0}, bound, "cap")
    shell.add_nonneg()
    return shell


class TestSolveConcave:
    def test_saturates_bound(self):
        x, diag = solve_concave(_single(1.0))
        assert diag.status is Status.CONVERGED
        assert x[0] == pytest.approx(1.0, abs=1e-9)
        assert diag.objective == pytest.approx(1.0, abs=1e-9)

    def test_min_log_epigraph(self):
        # max min(log2(1+x0), log2(1+2 x1)) with x0 + x1 <= 3: balance at x0 = 2 x1
        shell = LinearProgramShell(2)
        shell.terms.append(MinLogTerm(1.0, ((1.0, 0), (2.0, 1))))
        shell.add({0: 1.0, 1: 1.0}, 3.0, "budget")
        shell.add_nonneg()
        x, diag = solve_concave(shell)
        assert diag.converged
        assert x == pytest.approx([2.0, 1.0], abs=1e-8)
        assert diag.objective == pytest.approx(math.log2(3.0), abs=1e-9)

    def test_equality_rows(self):
        shell = LinearProgramShell(2)
        shell.terms += [LogTerm(1.0, 1.0, 0), LogTerm(1.0, 1.0, 1)]
        shell.add({0: 1.0, 1: 1.0}, 2.0, "sum", sense="==")
        shell.add_nonneg()
        x, diag = solve_concave(shell)
        assert x == pytest.approx([1.0, 1.0], abs=1e-8)
        assert diag.max_violation <= 1e-9

    def test_infeasible(self):
        shell = _single(1.0)
        shell.add({0: 0.0}, -1.0, "impossible")
        _, diag = solve_concave(shell)
        assert diag.status is Status.INFEASIBLE

    def test_iteration_limit_reported(self):
        _, diag = solve_concave(build_eq1(EXAMPLE_D), max_iter=2)
        assert diag.status is Status.ITERATION_LIMIT
        assert not diag.converged

    def test_validate_rejects_bad_reference(self):
        shell = LinearProgramShell(1)
        shell.terms.append(LogTerm(1.0, 1.0, 3))
        with pytest.raises(ValueError):
            solve_concave(shell)

    def test_deterministic(self):
        shell = build_eq1(EXAMPLE_D.with_(phases=4, harvest=0.7))
        x1, d1 = solve_concave(shell)
        x2, d2 = solve_concave(shell)
        assert x1.tobytes() == x2.tobytes()
        assert d1 == d2


class TestPrograms:
    def test_decoupled_budgets(self):
        params = SystemParams(phases=2, snr1=2.0, snr2=1.0)
        rep = solve_reference(params)
        assert rep.throughput == pytest.approx(math.log2(1.5), abs=1e-8)
        assert rep.schedule.relay == pytest.approx([0.5, 0.5], abs=1e-7)

    def test_eq2_single_phase(self):
        shell = build_eq2(SystemParams(snr1=1.0, snr2=2.0, harvest=0.6))
        ec = [r for r in shell.rows if r.tag != "NC"]
        assert len(ec) == 1
        assert ec[0].tag == "EC_{1,1}" and ec[0].coeffs.tolist() == [1.0] and ec[0].bound == 1.0

    def test_eq2_recursion(self):
        params = SystemParams(phases=3, snr1=1.0, snr2=2.0, harvest=0.6, initial1=1.0, initial2=0.5)
        row = build_eq2(params).rows_tagged("EC_{1,3}")[0]
        # SN gets back beta^2 of its own earlier spends plus beta P20 once
        assert row.coeffs == pytest.approx([1 - 0.36, 1 - 0.36, 1.0])
        assert row.bound == pytest.approx(1.0 + 0.6 * 0.5)

    def test_eq5_relay_ladder(self):
        params = SystemParams(phases=2, snr1=2.0, snr2=1.0, harvest=0.8)
        shell = build_eq5(params)
        assert shell.names == ["p2_1", "p2_2", "alpha2"]
        (ac,) = shell.rows_tagged("AC_{2}")
        # p2_2 <= (p2_1 + alpha2) beta gamma
        assert ac.coeffs == pytest.approx([-1.6, 1.0, -1.6]) and ac.bound == 0.0

    def test_eq7_rows(self):
        reg = classify_regime(EXAMPLE_D)
        shell = build_eq7(EXAMPLE_D, False, reg)
        assert shell.names == ["p2_1", "p2_2", "alpha1", "alpha2"]
        (ec2,) = shell.rows_tagged("EC_{2,2}")
        assert ec2.sense == "==" and ec2.bound == 1.0
        assert ec2.coeffs == pytest.approx([1.0, 1.0, -0.4, 1.0])
        (ec12,) = shell.rows_tagged("EC_{1,2}")
        # SN row scaled by gamma': p2_1 enters once spent and once harvested back (beta' gamma' = 0.8)
        assert ec12.coeffs[0] == pytest.approx(1.0 - reg.beta_prime * reg.gamma_prime)
        assert ec12.coeffs[1] == pytest.approx(1.0)
        assert shell.rows_tagged("BRANCH")[0].coeffs.tolist() == [0.0, 0.0, 0.0, 1.0]

    def test_eq7_needs_low_product(self):
        params = SystemParams(snr1=2.0, harvest=0.8)
        with pytest.raises(ValueError):
            build_eq7(params, False, classify_regime(params))

    def test_rows_tagged(self):
        shell = build_eq1(SystemParams(phases=3))
        tags = {r.tag for r in shell.rows}
        assert {"EC_{1,1}", "EC_{1,3}", "EC_{2,1}", "EC_{2,3}", "NC"} <= tags


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(system_params(n_max=4))
    def test_reference_feasible_and_tight_epigraph(self, params):
        rep = solve_reference(params)
        assert rep.diagnostics.converged
        assert check_feasibility(params, rep.schedule).feasible
        # at each phase one hop is the bottleneck, so the epigraph variable is pinned
        snr = np.minimum(params.snr1 * rep.schedule.source, params.snr2 * rep.schedule.relay)
        t = np.log2(1 + snr)
        assert 0.5 * params.bandwidth * t.sum() == pytest.approx(rep.throughput, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(system_params(n_max=4))
    def test_reduced_programs_tight(self, params):
        label = classify_regime(params).label.value
        if label == "BetaGeGamma":
            rep = solve_beta_ge_gamma(params)
            assert abs(rep.feasibility.slack1[-1]) <= 1e-7
        elif label == "HighProduct":
            rep = solve_high_product(params)
            assert abs(rep.feasibility.slack2[-1]) <= 1e-7
        else:
            return
        assert rep.feasibility.feasible
