import numpy as np
import pytest
from hypothesis import strategies as st

from relay_eh import PowerSchedule, SystemParams

EXAMPLE_D = SystemParams(bandwidth=1.0, phases=2, snr1=2.0, snr2=1.0, harvest=0.4, initial1=1.0, initial2=1.0)


def feasible_schedule(params, fractions):
    """Schedule spending the given fraction of what each node holds, phase by phase.

    Written independently of the package so tests do not lean on its own
    feasibility arithmetic.  Spends are shaved by a relative 1e-12 so that
    rounding never tips a node over its budget.
    """
    n = params.phases
    beta = params.harvest
    p = np.zeros((2, n))
    for j in range(n):
        held1 = params.initial1 + beta * p[1, :j].sum() - p[0, :j].sum()
        p[0, j] = max(fractions[j] * held1 * (1 - 1e-12), 0.0)
        held2 = params.initial2 + beta * p[0, : j + 1].sum() - p[1, :j].sum()
        p[1, j] = max(fractions[n + j] * held2 * (1 - 1e-12), 0.0)
    return PowerSchedule(p)


@st.composite
def system_params(draw, n_max=4, harvest_max=1.5):
    return SystemParams(
        bandwidth=draw(st.floats(0.5, 2.0)),
        phases=draw(st.integers(1, n_max)),
        snr1=draw(st.floats(0.2, 5.0)),
        snr2=draw(st.floats(0.2, 5.0)),
        harvest=draw(st.floats(0.0, harvest_max)),
        initial1=draw(st.floats(0.0, 2.0)),
        initial2=draw(st.floats(0.0, 2.0)),
    )


@st.composite
def params_and_schedules(draw, count=1, n_max=4, harvest_max=1.5):
    params = draw(system_params(n_max=n_max, harvest_max=harvest_max))
    scheds = []
    for _ in range(count):
        fr = draw(st.lists(st.floats(0.0, 1.0), min_size=2 * params.phases, max_size=2 * params.phases))
        scheds.append(feasible_schedule(params, fr))
    return (params, *scheds)


@pytest.fixture
def example_d():
    return EXAMPLE_D


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
