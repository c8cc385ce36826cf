"""Brute-force grid search over schedules, used as ground truth.

The grid lives in spending coordinates rather than raw powers.  In phase
``j`` SN spends a fraction ``u1_j`` in ``[0, 1]`` of the energy it holds.
RN's coordinate ``t2_j`` runs over ``[0, 2]``: up to 1 it scales the
matched power ``min(P1_j * snr1 / snr2, held)``, beyond 1 it adds a
supplement up to everything RN holds.  Every node is then a feasible
schedule, and both "spend everything" and "match the source's rate" are
exact grid values.  A grid over raw powers keeps only a few nodes inside
the thin feasible slivers and along the rate-matching ridges where optima
of this problem sit.  Each schedule is still re-checked against the
energy-causality rows with zero tolerance, using the arithmetic of
:func:`relay_eh.model.check_feasibility`.

Refinement zooms into a box around the incumbent.  The objective is nearly
flat along some feasible directions (surplus source power only matters
through what the relay harvests from it), so at each zoom level the box is
re-centred and scanned again while the best point sits on its edge.  The
incumbent is carried over, so throughput never drops.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import PowerSchedule, SystemParams, throughput
from .solution import SolveReport

__all__ = ["GridSpec", "GridResult", "energy_caps", "grid_search", "certify", "CERTIFY_TOL"]

CERTIFY_TOL = 1e-9

# at most this many points are materialized at once
_BLOCK_POINTS = 1 << 18
# energy held back from a spend whose exact value fails the check by rounding
_RESERVE = 1e-13


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution, refinement schedule and a hard cap on the search size.

    Each refinement round zooms the box to ``zoom`` cells of the previous
    spacing on either side of the incumbent and may move it up to
    ``max_moves`` times.  ``max_points`` bounds ``resolution ** (2N)``.
    """

    resolution: int = 41
    rounds: int = 3
    zoom: float = 4.0
    max_moves: int = 25
    max_points: int = 50_000_000

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        if self.rounds < 0:
            raise ValueError("refinement rounds must be non-negative")
        if not self.zoom > 0 or self.max_moves < 0:
            raise ValueError("zoom must be positive and max_moves non-negative")


@dataclass(frozen=True)
class GridResult:
    schedule: PowerSchedule
    throughput: float
    grid_gap: float
    history: Tuple[float, ...]

    def __iter__(self):
        # unpacks as (schedule, throughput, grid_gap)
        return iter((self.schedule, self.throughput, self.grid_gap))


def _budgets(params: SystemParams, variant: str):
    beta = params.harvest
    if variant == "full":
        return params.initial1, params.initial2, beta, beta
    if variant == "sno":
        return params.initial1, params.initial2, beta, 0.0
    if variant == "rno":
        return params.initial1 + params.initial2, 0.0, 0.0, beta
    raise ValueError(f"unknown feasibility variant {variant!r}")


def energy_caps(params: SystemParams, variant: str = "full") -> np.ndarray:
    """Per-variable upper bounds, shape ``(2, N)``, enclosing the feasible set.

    A node can never spend more in phase ``j`` than its initial storage plus
    the most it could have harvested by then, and the peer's transmissions
    are bounded the same way one step earlier.
    """
    b1, b2, g1, g2 = _budgets(params, variant)
    n = params.phases
    caps = np.zeros((2, n))
    for j in range(n):
        caps[0, j] = b1 + g1 * caps[1, :j].sum()
        caps[1, j] = b2 + g2 * caps[0, : j + 1].sum()
    return caps


def _upper(n: int) -> np.ndarray:
    """Upper end of each grid coordinate (SN fractions, then RN coordinates)."""
    return np.concatenate([np.ones(n), np.full(n, 2.0)])


def _gap_weights(params: SystemParams, caps: np.ndarray, budgets) -> np.ndarray:
    """Throughput sensitivity bound per grid coordinate, ordered like the grid.

    Moving a coordinate by ``du`` moves its own power by at most ``cap * du``
    (each piece of RN's coordinate spans at most what RN holds); each
    later spend then shifts by at most ``c`` times everything that moved
    before it (``c`` the largest row coefficient), so the total power
    change is at most ``cap * du * (1 + c) ** later``.
    """
    _, _, g1, g2 = budgets
    n = params.phases
    c = max(1.0, g1, g2)
    lip = 0.5 * params.bandwidth * max(params.snr1, params.snr2) / math.log(2.0)
    w = np.empty(2 * n)
    for i in range(2):
        for j in range(n):
            later = 2 * n - 1 - (2 * j + i)
            w[i * n + j] = lip * caps[i, j] * (1.0 + c) ** later
    return w


def _axes(lo, hi, resolution):
    axes = []
    for a, b in zip(lo, hi):
        if b <= a:
            axes.append(np.array([a]))
            continue
        ax = np.linspace(a, b, resolution)
        if a < 1.0 < b:
            # keep the kink of RN's coordinate (and SN's full spend) exact
            ax[np.argmin(np.abs(ax - 1.0))] = 1.0
        axes.append(ax)
    return axes


def _powers(u, n, ratio, budgets, reserve):
    """Schedules (rows ``[P1_1..P1_N, P2_1..P2_N]``) for grid coordinates ``u``."""
    b1, b2, g1, g2 = budgets
    p = np.empty_like(u)
    cum1 = np.zeros(len(u))
    cum2 = np.zeros(len(u))
    for j in range(n):
        avail = np.maximum((b1 + g1 * cum2) - cum1 - reserve, 0.0)
        p[:, j] = u[:, j] * avail
        cum1 = cum1 + p[:, j]
        avail = np.maximum((b2 + g2 * cum1) - cum2 - reserve, 0.0)
        matched = np.minimum(ratio * p[:, j], avail)
        t = u[:, n + j]
        p[:, n + j] = np.where(t <= 1.0, t * matched, matched + (t - 1.0) * (avail - matched))
        cum2 = cum2 + p[:, n + j]
    return p


def _feasible(p, n, budgets):
    # column by column, but with the same additions in the same order as
    # check_feasibility's cumulative sums, so both agree bit for bit
    b1, b2, g1, g2 = budgets
    ok = np.all(p >= 0.0, axis=1)
    cum1 = p[:, 0].copy()
    cum2 = np.zeros(len(p))
    for j in range(n):
        if j:
            cum1 = cum1 + p[:, j]
        ok &= (b1 + g1 * cum2) - cum1 >= 0.0
        cum2 = cum2 + p[:, n + j] if j else p[:, n].copy()
        ok &= (b2 + g2 * cum1) - cum2 >= 0.0
    return ok


def _lex_less(a, b) -> bool:
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


def _scan(params, axes, budgets, reserve):
    """Best grid schedule; ties go to the lexicographically smallest schedule."""
    n = params.phases
    d = 2 * n
    # vectorize over the trailing axes, loop over the leading ones
    split = d
    size = 1
    while split > 0 and size * len(axes[split - 1]) <= _BLOCK_POINTS:
        split -= 1
        size *= len(axes[split])
    tail = np.meshgrid(*axes[split:], indexing="ij")
    tail = np.stack([t.ravel() for t in tail], axis=1) if tail else np.zeros((1, 0))
    half = 0.5 * params.bandwidth
    best_val, best_p, best_u = -math.inf, None, None
    for head in itertools.product(*axes[:split]):
        u = np.empty((tail.shape[0], d))
        u[:, :split] = head
        u[:, split:] = tail
        p = _powers(u, n, params.ratio, budgets, 0.0)
        ok = _feasible(p, n, budgets)
        if not ok.all():
            # rounding overdrew a node; retry those nodes holding a reserve back
            bad = np.flatnonzero(~ok)
            p[bad] = _powers(u[bad], n, params.ratio, budgets, reserve)
            ok[bad] = _feasible(p[bad], n, budgets)
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            continue
        q = p[idx]
        val = np.zeros(len(idx))
        for j in range(n):
            val += np.log2(1.0 + np.minimum(params.snr1 * q[:, j], params.snr2 * q[:, n + j]))
        val *= half
        top = float(np.max(val))
        if top < best_val:
            continue
        tied = idx[val == top]
        # lexsort keys run last-to-first, so feed columns reversed
        k = tied[np.lexsort(p[tied].T[::-1])[0]]
        if top > best_val or _lex_less(p[k], best_p):
            best_val, best_p, best_u = top, p[k].copy(), u[k].copy()
    return best_val, best_p, best_u


def _on_edge(x, lo, hi, top, spacing):
    """True if ``x`` touches a box face that is not also a face of the full range."""
    eps = 1e-3 * spacing
    low = (x <= lo + eps) & (lo > 0.0)
    high = (x >= hi - eps) & (hi < top)
    return bool(np.any((low | high) & (spacing > 0)))


def grid_search(
    params: SystemParams, spec: Optional[GridSpec] = None, variant: str = "full"
) -> GridResult:
    """Exhaustive search with iterative box refinement.

    ``grid_gap`` bounds how far the final grid can sit below a point of the
    final box: the throughput changes by at most ``(B/2) max(snr) / ln 2``
    per unit of power moved, and each grid coordinate is within half a cell
    of a grid node (see :func:`_gap_weights` for the power moved).
    """
    spec = spec or GridSpec()
    n = params.phases
    d = 2 * n
    budgets = _budgets(params, variant)
    caps = energy_caps(params, variant)
    if not np.all(np.isfinite(caps)):
        raise ValueError("energy caps are not finite")
    if float(spec.resolution) ** d > spec.max_points:
        raise ValueError(
            f"grid of {spec.resolution}^{d} points exceeds max_points={spec.max_points}; "
            "use a coarser resolution"
        )
    reserve = _RESERVE * (1.0 + float(caps.sum()))
    weights = _gap_weights(params, caps, budgets)
    top = _upper(n)
    best_val, best_p, best_u = _scan(params, _axes(np.zeros(d), top, spec.resolution), budgets, reserve)
    if best_p is None:
        # cannot happen: all-zero coordinates give the feasible zero schedule
        raise RuntimeError("grid scan found no feasible schedule")
    spacing = top / (spec.resolution - 1)
    history = [best_val]
    for _ in range(spec.rounds):
        half_width = spec.zoom * spacing
        for _move in range(spec.max_moves + 1):
            lo = np.maximum(best_u - half_width, 0.0)
            hi = np.minimum(best_u + half_width, top)
            axes = _axes(lo, hi, spec.resolution)
            val, p, u = _scan(params, axes, budgets, reserve)
            moved = p is not None and val > best_val
            if moved:
                best_val, best_p, best_u = val, p, u
            level = np.array([a[1] - a[0] if len(a) > 1 else 0.0 for a in axes])
            if not (moved and _on_edge(best_u, lo, hi, top, level)):
                break
        spacing = 2.0 * half_width / (spec.resolution - 1)
        history.append(best_val)
    gap = float(weights @ spacing) / 2.0
    sched = PowerSchedule(best_p.reshape(2, n))
    return GridResult(sched, throughput(params, sched), gap, tuple(history))


def certify(
    params: SystemParams,
    candidate: SolveReport,
    spec: Optional[GridSpec] = None,
    grid: Optional[GridResult] = None,
    tol: float = CERTIFY_TOL,
) -> bool:
    """True iff the candidate is at least as good as every grid point."""
    if not candidate.feasibility.feasible:
        return False
    grid = grid or grid_search(params, spec)
    return candidate.throughput >= grid.throughput - tol
