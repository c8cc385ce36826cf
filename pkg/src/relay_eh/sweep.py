"""Parameter sweeps with CSV and SVG output.

Points are independent, so they may be solved on a thread pool; rows are
collected and written in axis order, which keeps the output bytes the same
for any thread count.  Wall time is only recorded when asked for, for the
same reason.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .dispatch import default_grid, solve
from .model import SystemParams, classify_regime

__all__ = [
    "AXES",
    "SWEEP_ALGORITHMS",
    "SweepConfig",
    "SweepRow",
    "run_sweep",
    "format_csv",
    "render_svg",
    "monotone_violations",
    "thread_count",
    "MONOTONE_TOL",
]

# axis name -> SystemParams field
AXES = {
    "beta": "harvest",
    "n_phases": "phases",
    "gamma1": "snr1",
    "initial1": "initial1",
    "initial2": "initial2",
}
SWEEP_ALGORITHMS = ("opt", "sno", "rno", "oracle")
CSV_HEADER = ("axis", "algorithm", "throughput", "regime", "status", "ms")
MONOTONE_TOL = 1e-7


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: Tuple[float, ...]
    base: SystemParams = field(default_factory=SystemParams)
    algorithms: Tuple[str, ...] = ("opt",)
    csv_path: Optional[str] = None
    svg_path: Optional[str] = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}; choose from {', '.join(AXES)}")
        if not self.values:
            raise ValueError("sweep axis has no values")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("axis values must be strictly increasing")
        if not self.algorithms:
            raise ValueError("select at least one algorithm")
        bad = [a for a in self.algorithms if a not in SWEEP_ALGORITHMS]
        if bad:
            raise ValueError(f"unknown sweep algorithm(s): {', '.join(bad)}")
        if self.axis == "n_phases" and any(v != int(v) or v < 1 for v in self.values):
            raise ValueError("n_phases values must be positive integers")
        if "oracle" in self.algorithms:
            for v in self.values:
                default_grid(self.params_at(v).phases)
        # building every point validates the values against the params invariants
        for v in self.values:
            self.params_at(v)

    def params_at(self, value: float) -> SystemParams:
        name = AXES[self.axis]
        return self.base.with_(**{name: int(value) if name == "phases" else float(value)})


@dataclass(frozen=True)
class SweepRow:
    axis: float
    algorithm: str
    throughput: float
    regime: str
    status: str
    ms: Optional[float] = None


def thread_count(env=None) -> int:
    """Worker threads for sweeps; ``RELAY_EH_THREADS=0`` (or unset) means sequential."""
    env = os.environ if env is None else env
    raw = env.get("RELAY_EH_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("RELAY_EH_THREADS must be non-negative")
    return n


def _point(config: SweepConfig, value: float, algorithm: str, timing: bool) -> SweepRow:
    params = config.params_at(value)
    t0 = time.perf_counter()
    report = solve(params, algorithm)
    ms = (time.perf_counter() - t0) * 1e3 if timing else None
    return SweepRow(value, algorithm, report.throughput, str(classify_regime(params).label), str(report.status), ms)


def run_sweep(config: SweepConfig, threads: int = 0, timing: bool = False) -> List[SweepRow]:
    jobs = [(v, a) for v in config.values for a in config.algorithms]
    if threads <= 0:
        return [_point(config, v, a, timing) for v, a in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_point, config, v, a, timing) for v, a in jobs]
        return [f.result() for f in futures]


def _num(x: float) -> str:
    return format(x, ".12g")


def format_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        ms = "" if r.ms is None else _num(r.ms)
        w.writerow([_num(r.axis), r.algorithm, _num(r.throughput), r.regime, r.status, ms])
    return buf.getvalue()


def monotone_violations(rows: Sequence[SweepRow], algorithm: str = "opt", tol: float = MONOTONE_TOL):
    """``(axis_prev, axis_next, drop)`` wherever the series falls by more than ``tol``."""
    series = [r for r in rows if r.algorithm == algorithm]
    return [
        (a.axis, b.axis, a.throughput - b.throughput)
        for a, b in zip(series, series[1:])
        if b.throughput < a.throughput - tol
    ]


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def render_svg(rows: Sequence[SweepRow], axis_label: str, width: int = 640, height: int = 400) -> str:
    """Line chart, one polyline per algorithm, with ticks and a legend."""
    left, right, top, bottom = 60, 130, 20, 45
    pw, ph = width - left - right, height - top - bottom
    algs = list(dict.fromkeys(r.algorithm for r in rows))
    xs = [r.axis for r in rows]
    ys = [r.throughput for r in rows]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        out.append(f'<line x1="{sx(xv):.2f}" y1="{top + ph}" x2="{sx(xv):.2f}" y2="{top + ph + 4}" stroke="#000"/>')
        out.append(f'<text x="{sx(xv):.2f}" y="{top + ph + 16}" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<line x1="{left - 4}" y1="{sy(yv):.2f}" x2="{left}" y2="{sy(yv):.2f}" stroke="#000"/>')
        out.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.2f}" text-anchor="end">{yv:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 8}" text-anchor="middle">{axis_label}</text>')
    out.append(
        f'<text x="14" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:.2f})">throughput (bits)</text>'
    )
    for i, alg in enumerate(algs):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(r.axis):.2f},{sy(r.throughput):.2f}" for r in rows if r.algorithm == alg)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 16 * i
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{alg}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
