import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import EXAMPLE_D, system_params
from relay_eh import SystemParams, check_feasibility, grid_search, solve_reference, solve_rno, solve_sno


def test_sno_single_phase():
    assert solve_sno(SystemParams()).throughput == pytest.approx(0.5, abs=1e-9)


def test_sno_equals_opt_without_harvest():
    params = SystemParams(phases=3, snr1=2.0, snr2=0.7, harvest=0.0, initial1=0.4, initial2=1.3)
    assert solve_sno(params).throughput == pytest.approx(solve_reference(params).throughput, abs=1e-8)


def test_sno_example_d():
    assert solve_sno(EXAMPLE_D).throughput <= solve_reference(EXAMPLE_D).throughput + 1e-9
    assert solve_sno(EXAMPLE_D).throughput == pytest.approx(math.log2(1.5), abs=1e-8)


def test_rno_single_phase():
    params = SystemParams(harvest=0.5)
    rep = solve_rno(params)
    assert rep.throughput == pytest.approx(0.5, abs=1e-9)
    assert rep.throughput == pytest.approx(grid_search(params, variant="rno").throughput, abs=1e-9)
    assert rep.feasibility.feasible


def test_rno_no_harvest():
    assert solve_rno(SystemParams(phases=3)).throughput == pytest.approx(0.0, abs=1e-12)


def test_rno_against_grid():
    params = SystemParams(phases=2, snr1=1.5, snr2=1.0, harvest=0.6, initial1=0.5, initial2=0.8)
    grid = grid_search(params, variant="rno")
    rep = solve_rno(params)
    assert rep.throughput >= grid.throughput - 1e-9
    assert grid.throughput >= rep.throughput - grid.grid_gap


def test_sno_against_grid():
    params = SystemParams(phases=2, snr1=1.5, snr2=1.0, harvest=0.6, initial1=0.5, initial2=0.8)
    grid = grid_search(params, variant="sno")
    rep = solve_sno(params)
    assert rep.throughput >= grid.throughput - 1e-9
    assert grid.throughput >= rep.throughput - grid.grid_gap


@settings(max_examples=40, deadline=None)
@given(system_params(n_max=4))
def test_sno_restricts_opt(params):
    sno = solve_sno(params)
    assert check_feasibility(params, sno.schedule).feasible
    assert solve_reference(params).throughput >= sno.throughput - 1e-9


@settings(max_examples=15, deadline=None)
@given(system_params(n_max=3))
def test_monotone_in_harvest(params):
    prev_s = prev_r = -np.inf
    for beta in np.linspace(0.0, 1.5, 7):
        p = params.with_(harvest=float(beta))
        s, r = solve_sno(p).throughput, solve_rno(p).throughput
        assert s >= prev_s - 1e-7 and r >= prev_r - 1e-7
        prev_s, prev_r = s, r
