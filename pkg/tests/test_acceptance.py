"""Acceptance criteria 1-8, each at its stated tolerance.

Every test records one PASS/FAIL line (see the "acceptance criteria"
section at the end of the pytest report) and then asserts.
"""

import os
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest

from conftest import EXAMPLE_D, record_criterion
from relay_eh import RegimeLabel, SystemParams, grid_search, solve_reference, solve_regime, verify_structure
from relay_eh.cli import parse_values
from relay_eh.sweep import SweepConfig, monotone_violations, run_sweep
from relay_eh.validation import agreement_gap, draw_params

SEED = 42
DRAWS = 200
N_MAX = 4
AGREE = 1e-6
CERT = 1e-9
TIGHT = 1e-7
MONO = 1e-7
BETAS = tuple(parse_values("0:0.05:0.9"))
PHASES = (1, 2, 4, 8)
SNR1 = (1.0, 2.0, 4.0)


def _cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "relay_eh.cli", *args], capture_output=True, text=True, env=env, check=False
    )


def _summary(failures):
    if not failures:
        return "no failures"
    by = Counter(label for label, _ in failures)
    first = failures[0][1]
    return "failures " + ", ".join(f"{k} {v}" for k, v in by.items()) + f"; first: {first}"


@pytest.fixture(scope="module")
def draws():
    """Seeded draws per regime with the regime solver and the reference solve."""
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    out = {}
    for label in RegimeLabel:
        rows = []
        for _ in range(DRAWS):
            params = draw_params(rng, label, N_MAX)
            rows.append((params, solve_regime(params), solve_reference(params)))
        out[label] = rows
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def beta_sweeps():
    rows = {}
    for n in PHASES:
        for g1 in SNR1:
            base = SystemParams(bandwidth=1.0, phases=n, snr1=g1, snr2=1.0, initial1=1.0, initial2=1.0)
            rows[n, g1] = run_sweep(SweepConfig("beta", BETAS, base, ("opt", "sno", "rno")))
    return rows


def test_criterion_1_agreement(draws):
    data, seconds = draws
    failures = []
    for label, rows in data.items():
        for k, (params, opt, ref) in enumerate(rows):
            gap = agreement_gap(opt.throughput, ref.throughput)
            if gap > AGREE:
                failures.append((str(label), f"{label} draw {k} N={params.phases}: rel gap {gap:.3g}"))
    ok = not failures and seconds < 60
    record_criterion(1, ok, f"{DRAWS} draws/regime in {seconds:.1f}s; {_summary(failures)}")
    assert seconds < 60
    assert not failures, _summary(failures)


def test_criterion_2_oracle(draws):
    data, _ = draws
    t0 = time.perf_counter()
    failures = []
    count = 0
    for label, rows in data.items():
        for k, (params, opt, _) in enumerate(rows):
            if params.phases > 2:
                continue
            count += 1
            grid = grid_search(params)
            if opt.throughput < grid.throughput - CERT:
                failures.append((str(label), f"{label} draw {k}: grid above closed form by {grid.throughput - opt.throughput:.3g}"))
            if grid.throughput < opt.throughput - grid.grid_gap:
                failures.append((str(label), f"{label} draw {k}: grid below closed form beyond gap {grid.grid_gap:.3g}"))
    seconds = time.perf_counter() - t0
    ok = not failures and seconds < 300
    record_criterion(2, ok, f"{count} draws with N<=2 in {seconds:.0f}s; {_summary(failures)}")
    assert seconds < 300
    assert not failures, _summary(failures)


def test_criterion_3_worked_instance():
    rep = solve_regime(EXAMPLE_D)
    ref = solve_reference(EXAMPLE_D)
    grid = grid_search(EXAMPLE_D)
    alpha1 = (1 - 0.375) / 1.15
    p2 = (1 + 0.4 * alpha1) / 2
    checks = {
        "regime LowProductCase1": rep.regime.label is RegimeLabel.LOW_PRODUCT_CASE1,
        "alpha1 formula": abs(rep.equivalent.alpha1 - alpha1) <= 1e-12,
        "p2 formula": bool(np.all(np.abs(rep.equivalent.data - p2) <= 1e-12)),
        "C ~ 0.81631": abs(rep.throughput - 0.81631) <= 5e-6,
        "matches solver": agreement_gap(rep.throughput, ref.throughput) <= AGREE,
        "dominates grid": rep.throughput >= grid.throughput - CERT,
        "grid within gap": grid.throughput >= rep.throughput - grid.grid_gap,
    }
    bad = [k for k, v in checks.items() if not v]
    detail = (
        f"closed form {rep.throughput:.7f}, solver {ref.throughput:.7f}, grid {grid.throughput:.7f} "
        f"(gap {grid.grid_gap:.2g}); " + ("all checks hold" if not bad else "failed: " + ", ".join(bad))
    )
    record_criterion(3, not bad, detail)
    assert not bad, detail


def test_criterion_4_tightness(draws):
    data, _ = draws
    failures = []
    for label, rows in data.items():
        for k, (params, opt, _) in enumerate(rows):
            f = opt.feasibility
            slack = f.slack1[-1] if label is RegimeLabel.BETA_GE_GAMMA else f.slack2[-1]
            if abs(slack) > TIGHT:
                failures.append((str(label), f"{label} draw {k}: terminal slack {slack:.3g}"))
    record_criterion(4, not failures, _summary(failures))
    assert not failures, _summary(failures)


def test_criterion_5_structure(draws):
    data, _ = draws
    failures = []
    props = {
        RegimeLabel.BETA_GE_GAMMA: {"P1"},
        RegimeLabel.HIGH_PRODUCT: {"P1", "P2", "R1"},
        RegimeLabel.LOW_PRODUCT_CASE1: {"P1", "P3", "P4", "R1", "R2", "T1"},
        RegimeLabel.LOW_PRODUCT_CASE2: {"P1", "P3", "P4", "R1", "R2", "T1"},
    }
    for label, rows in data.items():
        for k, (params, opt, _) in enumerate(rows):
            for c in verify_structure(params, opt):
                assert c.prop in props[label]
                if not c.holds:
                    failures.append((f"{label}/{c.prop}", f"{label} draw {k} N={params.phases}: {c.prop} ({c.detail}) at phase {c.witness}"))
                    break
    record_criterion(5, not failures, _summary(failures))
    assert not failures, _summary(failures)


def test_criterion_6_trends(beta_sweeps):
    failures = []
    for (n, g1), rows in beta_sweeps.items():
        for a, b, drop in monotone_violations(rows, "opt", MONO):
            failures.append(("beta", f"N={n} gamma1={g1}: drop {drop:.3g} from beta={a} to {b}"))
    for g1 in SNR1:
        for beta in BETAS:
            series = [next(r for r in beta_sweeps[n, g1] if r.algorithm == "opt" and r.axis == beta) for n in PHASES]
            for n_prev, n_next, a, b in zip(PHASES, PHASES[1:], series, series[1:]):
                if b.throughput < a.throughput - MONO:
                    failures.append(("N", f"gamma1={g1} beta={beta}: drop from N={n_prev} to N={n_next}"))
    record_criterion(6, not failures, f"{len(beta_sweeps)} beta ladders and N ladders; {_summary(failures)}")
    assert not failures, _summary(failures)


def test_criterion_7_baselines(beta_sweeps, tmp_path):
    failures = []
    for (n, g1), rows in beta_sweeps.items():
        by = {(r.axis, r.algorithm): r for r in rows}
        for beta in BETAS:
            opt, sno, rno = (by[beta, a].throughput for a in ("opt", "sno", "rno"))
            if opt < sno - CERT:
                failures.append(("order", f"N={n} gamma1={g1} beta={beta}: OPT below SNo by {sno - opt:.3g}"))
            if beta == 0.0 and abs(rno) > CERT:
                failures.append(("rno", f"N={n} gamma1={g1}: RNo {rno:.3g} at beta=0"))
    outputs = []
    for axis, values, extra in (("beta", "0:0.05:0.9", ["--n", "4", "--gamma1", "2"]), ("n_phases", "1,2,4,8", ["--beta", "0.5"])):
        csv_path, svg_path = tmp_path / f"{axis}.csv", tmp_path / f"{axis}.svg"
        proc = _cli("sweep", "--axis", axis, "--values", values, *extra, "--alg", "opt,sno,rno", "--csv", str(csv_path), "--svg", str(svg_path))
        lines = csv_path.read_text().splitlines() if csv_path.exists() else []
        emitted = proc.returncode == 0 and svg_path.exists() and {l.split(",")[1] for l in lines[1:]} == {"opt", "sno", "rno"}
        if not emitted:
            failures.append(("emit", f"{axis} sweep exit {proc.returncode}: {proc.stderr.strip()}"))
        else:
            for line in lines[1:]:
                axis_v, alg, c = line.split(",")[:3]
                outputs.append((axis, float(axis_v), alg, float(c)))
    by = {(a, v, alg): c for a, v, alg, c in outputs}
    for (a, v, alg), c in by.items():
        if alg == "opt" and c < by[a, v, "sno"] - CERT:
            failures.append(("order", f"CLI {a}={v}: OPT below SNo"))
    record_criterion(7, not failures, f"{len(BETAS) * len(beta_sweeps)} sweep points plus CLI CSV/SVG; {_summary(failures)}")
    assert not failures, _summary(failures)


def test_criterion_8_determinism(tmp_path):
    # the two validate runs go in parallel; each is a full default run
    procs = [
        subprocess.Popen(
            [sys.executable, "-m", "relay_eh.cli", "validate", "--seed", "42"], stdout=subprocess.PIPE, stderr=subprocess.PIPE
        )
        for _ in range(2)
    ]
    outs = [p.communicate() for p in procs]
    same_report = outs[0][0] == outs[1][0] and len(outs[0][0]) > 0
    codes = [p.returncode for p in procs]
    csvs = []
    for threads in ("0", "1", "4"):
        env = {**os.environ, "RELAY_EH_THREADS": threads}
        proc = _cli("sweep", "--axis", "beta", "--values", "0:0.05:0.9", "--n", "4", "--gamma1", "2", "--alg", "opt,sno,rno", env=env)
        csvs.append(proc.stdout.encode())
    same_csv = all(c == csvs[0] for c in csvs) and len(csvs[0]) > 0
    ok = same_report and same_csv
    record_criterion(
        8,
        ok,
        f"validate --seed 42 reports identical: {same_report} (exit codes {codes}); "
        f"sweep CSV identical for RELAY_EH_THREADS 0/1/4: {same_csv}",
    )
    assert same_report
    assert same_csv
