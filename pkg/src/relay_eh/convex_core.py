"""Concave maximization of log-rate objectives under linear constraints.

Every program in this package has the form

    maximize    sum_t  w_t * log2(1 + g_t * x[k_t])
              + sum_j  w_j * min_i log2(1 + g_ji * x[k_ji])
    subject to  A x <= b,  E x = e

The per-phase minimum is handled with an epigraph variable ``r_j`` bounded
by each ``g_ji * x[k_ji]``; because ``log2(1 + .)`` is increasing this is
the same as bounding the log terms themselves, and it keeps every
constraint linear.  The result is solved by an infeasible-start
primal-dual interior-point method (Mehrotra predictor-corrector) on the
dense KKT system, which is fine for the few dozen variables used here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple, Union

import numpy as np

__all__ = [
    "Constraint",
    "LogTerm",
    "MinLogTerm",
    "LinearProgramShell",
    "Status",
    "SolverDiagnostics",
    "solve_concave",
    "FEAS_TOL",
    "STAT_TOL",
    "MAX_ITER",
]

FEAS_TOL = 1e-9
STAT_TOL = 1e-8
MAX_ITER = 100_000

_LN2 = math.log(2.0)
_POLISH = 1e-3

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Constraint:
    """One row ``coeffs . x (<= | ==) bound`` with a diagnostic tag."""

    coeffs: np.ndarray
    bound: float
    sense: str
    tag: str

    def __post_init__(self):
        if self.sense not in ("<=", "=="):
            raise ValueError(f"unknown sense {self.sense!r}")

    def value(self, x: np.ndarray) -> float:
        return float(self.coeffs @ x)

    def slack(self, x: np.ndarray) -> float:
        """``bound - coeffs . x``; non-negative when satisfied (zero for equalities)."""
        return self.bound - self.value(x)


@dataclass(frozen=True)
class LogTerm:
    """``weight * log2(1 + gain * x[var])``."""

    weight: float
    gain: float
    var: int


@dataclass(frozen=True)
class MinLogTerm:
    """``weight * min_i log2(1 + gain_i * x[var_i])`` over ``pairs = ((gain, var), ...)``."""

    weight: float
    pairs: Tuple[Tuple[float, int], ...]
    tag: str = ""


Term = Union[LogTerm, MinLogTerm]


@dataclass
class LinearProgramShell:
    n_vars: int
    names: List[str] = field(default_factory=list)
    rows: List[Constraint] = field(default_factory=list)
    terms: List[Term] = field(default_factory=list)

    def __post_init__(self):
        if not self.names:
            self.names = [f"x{k}" for k in range(self.n_vars)]
        if len(self.names) != self.n_vars:
            raise ValueError("names must match n_vars")

    def index(self, name: str) -> int:
        return self.names.index(name)

    def add(self, coeffs: Dict[int, float], bound: float, tag: str, sense: str = "<=") -> Constraint:
        vec = np.zeros(self.n_vars)
        for k, c in coeffs.items():
            vec[k] += c
        row = Constraint(vec, float(bound), sense, tag)
        self.rows.append(row)
        return row

    def add_nonneg(self) -> None:
        for k in range(self.n_vars):
            self.add({k: -1.0}, 0.0, "NC")

    def rows_tagged(self, tag: str) -> List[Constraint]:
        return [r for r in self.rows if r.tag == tag]

    def objective(self, x: np.ndarray) -> float:
        total = 0.0
        for t in self.terms:
            if isinstance(t, LogTerm):
                total += t.weight * math.log2(1.0 + t.gain * x[t.var])
            else:
                snr = min(g * x[k] for g, k in t.pairs)
                total += t.weight * math.log2(1.0 + snr)
        return total

    def max_violation(self, x: np.ndarray) -> float:
        worst = 0.0
        for r in self.rows:
            s = r.slack(x)
            worst = max(worst, -s if r.sense == "<=" else abs(s))
        return worst

    def validate(self) -> None:
        for r in self.rows:
            if r.coeffs.shape != (self.n_vars,):
                raise ValueError(f"row {r.tag} has wrong length")
            if not (np.all(np.isfinite(r.coeffs)) and math.isfinite(r.bound)):
                raise ValueError(f"row {r.tag} has non-finite data")
        for t in self.terms:
            pairs = [(t.gain, t.var)] if isinstance(t, LogTerm) else list(t.pairs)
            if not pairs:
                raise ValueError("objective term without variables")
            for g, k in pairs:
                if not 0 <= k < self.n_vars:
                    raise ValueError(f"objective references missing variable {k}")
                if not (math.isfinite(g) and g >= 0):
                    raise ValueError("objective gains must be finite and non-negative")


class Status(str, Enum):
    CONVERGED = "Converged"
    ITERATION_LIMIT = "IterationLimit"
    INFEASIBLE = "Infeasible"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolverDiagnostics:
    iterations: int
    objective: float
    max_violation: float
    stationarity: float
    status: Status

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def _nonneg_vars(shell: LinearProgramShell) -> np.ndarray:
    mask = np.zeros(shell.n_vars, dtype=bool)
    for r in shell.rows:
        if r.sense == "<=" and r.bound == 0.0:
            nz = np.flatnonzero(r.coeffs)
            if nz.size == 1 and r.coeffs[nz[0]] < 0:
                mask[nz[0]] = True
    return mask


def _presolve(shell: LinearProgramShell, nonneg: np.ndarray) -> np.ndarray:
    """Variables forced to zero by rows with non-negative coefficients and zero bound.

    Such rows leave the feasible set without interior, which interior-point
    iterations handle badly, so their variables are removed up front.
    """
    fixed = np.zeros(shell.n_vars, dtype=bool)
    changed = True
    while changed:
        changed = False
        for r in shell.rows:
            active = (r.coeffs != 0) & ~fixed
            if not active.any() or r.bound > 0.0:
                continue
            if np.all(nonneg[active]) and np.all(r.coeffs[active] > 0):
                fixed |= active
                changed = True
    return fixed


def _expand(shell: LinearProgramShell):
    """Flatten terms to single-variable logs, adding epigraph variables for min terms."""
    n_epi = sum(isinstance(t, MinLogTerm) for t in shell.terms)
    n = shell.n_vars + n_epi
    rows = []
    for r in shell.rows:
        rows.append((np.concatenate([r.coeffs, np.zeros(n_epi)]), r.bound, r.sense))
    weights, gains, idx = [], [], []
    e = shell.n_vars
    for t in shell.terms:
        if isinstance(t, LogTerm):
            weights.append(t.weight)
            gains.append(t.gain)
            idx.append(t.var)
        else:
            for g, k in t.pairs:
                vec = np.zeros(n)
                vec[e] = 1.0
                vec[k] -= g
                rows.append((vec, 0.0, "<="))
            weights.append(t.weight)
            gains.append(1.0)
            idx.append(e)
            e += 1
    return n, rows, np.array(weights, float), np.array(gains, float), np.array(idx, dtype=int)


class _Objective:
    """Negated objective (to minimize) with diagonal Hessian."""

    def __init__(self, n, weights, gains, idx):
        self.n = n
        self.w = weights / _LN2
        self.g = gains
        self.idx = idx

    def arg(self, x):
        return 1.0 + self.g * x[self.idx]

    def value(self, x):
        return -float(np.sum(self.w * np.log(self.arg(x))))

    def grad(self, x):
        out = np.zeros(self.n)
        np.add.at(out, self.idx, -self.w * self.g / self.arg(x))
        return out

    def hess_diag(self, x):
        out = np.zeros(self.n)
        np.add.at(out, self.idx, self.w * self.g**2 / self.arg(x) ** 2)
        return out

    def max_step(self, x, dx, frac):
        """Largest step in (0, 1] keeping every log argument positive."""
        a = self.arg(x)
        d = self.g * dx[self.idx]
        neg = d < 0
        if not neg.any():
            return 1.0
        return min(1.0, frac * float(np.min(-a[neg] / d[neg])))


def _max_step(v, dv, frac):
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, frac * float(np.min(-v[neg] / dv[neg])))


def _newton(H, A, E, s, z, r_d, r_p, r_e, r_c):
    """Newton step from the augmented system, eliminating only the slack step.

    Inactive rows get a large ``s/z`` diagonal and active rows a small one;
    LU with partial pivoting copes with both, unlike the normal equations.
    """
    n, m, p = H.shape[0], A.shape[0], E.shape[0]
    K = np.zeros((n + m + p, n + m + p))
    K[:n, :n] = np.diag(H)
    K[:n, n:n + m] = A.T
    K[n:n + m, :n] = A
    K[n:n + m, n:n + m] = -np.diag(s / z)
    K[:n, n + m:] = E.T
    K[n + m:, :n] = E
    rhs = np.concatenate([-r_d, -r_p + r_c / z, -r_e])
    try:
        sol = np.linalg.solve(K, rhs)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    dx = sol[:n]
    dz = sol[n:n + m]
    dy = sol[n + m:]
    ds = -r_p - A @ dx
    return dx, ds, dz, dy


def _ipm(obj, A, b, E, e, feas_tol, stat_tol, max_iter):
    n = obj.n
    m = A.shape[0]
    x = np.zeros(n)
    s = np.maximum(b - A @ x, 1.0)
    z = np.ones(m)
    y = np.zeros(E.shape[0])
    frac = 0.995
    it = 0
    best = None
    since_best = 0
    while True:
        r_d = obj.grad(x) + A.T @ z + E.T @ y
        r_p = A @ x + s - b
        r_e = E @ x - e
        gap = float(s @ z)
        pres = max(float(np.max(np.abs(r_p), initial=0.0)), float(np.max(np.abs(r_e), initial=0.0)))
        dres = float(np.max(np.abs(r_d), initial=0.0))
        merit = max(pres / feas_tol, max(dres, gap) / stat_tol)
        if not math.isfinite(merit):
            break
        if best is None or merit < 0.999 * best[0]:
            best = (merit, x, max(dres, gap), pres)
            since_best = 0
        else:
            if merit <= best[0]:
                best = (merit, x, max(dres, gap), pres)
            since_best += 1
            if merit > 1e6 * best[0]:
                break
        # iterate past stat_tol while it is cheap: callers compare optima
        # at tolerances close to stat_tol
        done = pres <= 0.1 * feas_tol and dres <= stat_tol and gap <= stat_tol
        if done and (max(dres, gap) <= _POLISH * stat_tol or since_best >= 3):
            break
        if it >= max_iter:
            break
        it += 1
        log.debug("ipm %d pres=%.3e dres=%.3e gap=%.3e", it, pres, dres, gap)

        H = obj.hess_diag(x)
        mu = gap / m if m else 0.0
        dx, ds, dz, dy = _newton(H, A, E, s, z, r_d, r_p, r_e, s * z)
        a_aff = min(_max_step(s, ds, 1.0), _max_step(z, dz, 1.0))
        mu_aff = float((s + a_aff * ds) @ (z + a_aff * dz)) / m if m else 0.0
        sigma = min(max((mu_aff / mu) ** 3, 0.0), 1.0) if mu > 0 else 0.0
        # pure Mehrotra steps can cycle on curved objectives; once progress
        # stalls, keep some centering and shorten the step
        cautious = since_best >= 5
        if cautious:
            sigma = max(sigma, 0.3)
        dx, ds, dz, dy = _newton(H, A, E, s, z, r_d, r_p, r_e, s * z + ds * dz - sigma * mu)

        alpha = min(_max_step(s, ds, frac), _max_step(z, dz, frac), obj.max_step(x, dx, frac))
        if cautious:
            alpha *= 0.5
        if alpha <= 0.0:
            break
        x = x + alpha * dx
        s = s + alpha * ds
        z = z + alpha * dz
        y = y + alpha * dy
    _, x, stationarity, _ = best
    return x, it, stationarity


def solve_concave(
    shell: LinearProgramShell,
    feas_tol: float = FEAS_TOL,
    stat_tol: float = STAT_TOL,
    max_iter: int = MAX_ITER,
) -> Tuple[np.ndarray, SolverDiagnostics]:
    """Maximize the shell's objective; returns the point and its diagnostics.

    ``stationarity`` is the larger of the dual (Lagrangian gradient)
    residual and the total complementarity ``s . z``, which bounds the
    optimality gap.  Variables with a non-negativity row are clipped at
    zero on exit, so tiny interior-point undershoot never leaks out.
    The iteration is deterministic.
    """
    shell.validate()
    nonneg = _nonneg_vars(shell)
    fixed = _presolve(shell, nonneg)
    for r in shell.rows:
        if not np.any(r.coeffs[~fixed]):
            ok = r.bound >= -feas_tol if r.sense == "<=" else abs(r.bound) <= feas_tol
            if not ok:
                x = np.zeros(shell.n_vars)
                diag = SolverDiagnostics(0, shell.objective(x), shell.max_violation(x), math.inf, Status.INFEASIBLE)
                return x, diag

    n_all, rows, w, g, idx = _expand(shell)
    keep = np.concatenate([~fixed, np.ones(n_all - shell.n_vars, dtype=bool)])
    col = -np.ones(n_all, dtype=int)
    col[keep] = np.arange(int(keep.sum()))
    ineq, eq = [], []
    for vec, bound, sense in rows:
        red = vec[keep]
        if not np.any(red):
            continue
        (ineq if sense == "<=" else eq).append((red, bound))
    n = int(keep.sum())
    A = np.array([r for r, _ in ineq]).reshape(len(ineq), n)
    b = np.array([c for _, c in ineq], float)
    E = np.array([r for r, _ in eq]).reshape(len(eq), n)
    e = np.array([c for _, c in eq], float)
    live = col[idx] >= 0
    obj = _Objective(n, w[live], g[live], col[idx][live])

    if n == 0:
        xr, it, stationarity = np.zeros(0), 0, 0.0
    else:
        xr, it, stationarity = _ipm(obj, A, b, E, e, feas_tol, stat_tol, max_iter)

    x_all = np.zeros(n_all)
    x_all[keep] = xr
    x = x_all[: shell.n_vars]
    x = np.where(nonneg, np.maximum(x, 0.0), x)
    violation = shell.max_violation(x)
    if violation <= feas_tol and stationarity <= stat_tol:
        status = Status.CONVERGED
    elif violation > 1e3 * feas_tol and it > 0:
        status = Status.INFEASIBLE
    else:
        status = Status.ITERATION_LIMIT
    return x, SolverDiagnostics(it, shell.objective(x), violation, stationarity, status)
