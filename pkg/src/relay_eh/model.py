"""Domain types and bookkeeping for the two-hop energy-sharing relay link.

Powers and energies share units: every time slot has unit duration, so the
energy a node spends in a slot equals its transmit power in that slot.

Index convention: schedules are ``(2, N)`` arrays where row 0 is the
source node (SN) and row 1 the relay node (RN); column ``j`` is phase
``j + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

__all__ = [
    "SystemParams",
    "PowerSchedule",
    "DecomposedSchedule",
    "EquivalentSchedule",
    "RegimeLabel",
    "Regime",
    "FeasibilityReport",
    "throughput",
    "check_feasibility",
    "classify_regime",
    "decompose",
    "aggregate_supplements",
    "to_physical",
    "to_equivalent",
    "equivalent_slacks",
]

REGIME_EPS = 1e-12
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Exogenous quantities of one relay link instance.

    ``harvest`` is the harvesting gain per unit of power transmitted by the
    peer (efficiency times the SN-RN channel power gain).  ``snr1`` and
    ``snr2`` are the noise-normalized SNRs per unit power of the SN-RN and
    RN-DN links.
    """

    bandwidth: float = 1.0
    phases: int = 1
    snr1: float = 1.0
    snr2: float = 1.0
    harvest: float = 0.0
    initial1: float = 1.0
    initial2: float = 1.0

    def __post_init__(self):
        if isinstance(self.phases, bool) or int(self.phases) != self.phases:
            raise ValueError(f"phases must be an integer, got {self.phases!r}")
        object.__setattr__(self, "phases", int(self.phases))
        for name in ("bandwidth", "snr1", "snr2", "harvest", "initial1", "initial2"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.phases < 1:
            raise ValueError("phases must be >= 1")
        if self.snr1 <= 0 or self.snr2 <= 0:
            raise ValueError("snr1 and snr2 must be > 0")
        if self.harvest < 0:
            raise ValueError("harvest must be >= 0")
        if self.initial1 < 0 or self.initial2 < 0:
            raise ValueError("initial storages must be >= 0")
        if not math.isfinite(self.snr1 / self.snr2):
            raise ValueError("snr1/snr2 must be finite")

    @property
    def ratio(self) -> float:
        """SNR ratio ``snr1 / snr2``."""
        return self.snr1 / self.snr2

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


def _as_matrix(powers) -> np.ndarray:
    arr = np.array(powers, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != 2 or arr.shape[1] < 1:
        raise ValueError(f"schedule must have shape (2, N), got {arr.shape}")
    return arr


@dataclass(frozen=True)
class PowerSchedule:
    """Physical per-phase transmit powers ``P[i, j]``."""

    powers: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.powers)
        if not np.all(np.isfinite(arr)):
            raise ValueError("schedule entries must be finite")
        if np.any(arr < 0):
            raise ValueError("schedule entries must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "powers", arr)

    @classmethod
    def from_rows(cls, source, relay) -> "PowerSchedule":
        return cls(np.vstack([np.asarray(source, float), np.asarray(relay, float)]))

    @classmethod
    def zeros(cls, phases: int) -> "PowerSchedule":
        return cls(np.zeros((2, phases)))

    @property
    def phases(self) -> int:
        return self.powers.shape[1]

    @property
    def source(self) -> np.ndarray:
        return self.powers[0]

    @property
    def relay(self) -> np.ndarray:
        return self.powers[1]

    def __eq__(self, other):
        if not isinstance(other, PowerSchedule):
            return NotImplemented
        return np.array_equal(self.powers, other.powers)

    def __hash__(self):
        return hash(self.powers.tobytes())


@dataclass(frozen=True)
class DecomposedSchedule:
    """Per-phase split of a schedule into data power and supplement power.

    ``data[i, j]`` carries end-to-end traffic (matched rates across the two
    hops); ``supplement[i, j]`` only charges the peer.  ``agg1``/``agg2``
    are the first-phase supplements of SN and RN.
    """

    data: np.ndarray
    supplement: np.ndarray
    agg1: float = 0.0
    agg2: float = 0.0

    def __post_init__(self):
        for name in ("data", "supplement"):
            arr = _as_matrix(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.data.shape != self.supplement.shape:
            raise ValueError("data and supplement shapes differ")

    def physical(self) -> PowerSchedule:
        return PowerSchedule(np.maximum(self.data + self.supplement, 0.0))


@dataclass(frozen=True)
class EquivalentSchedule:
    """Variables of the equivalent system used when ``harvest * ratio < 1``.

    ``data[j]`` is the relay's net data power drawn from its own storage in
    phase ``j + 1``; ``alpha1``/``alpha2`` are the first-phase supplements
    sent by SN and RN.
    """

    data: np.ndarray
    alpha1: float = 0.0
    alpha2: float = 0.0

    def __post_init__(self):
        arr = np.array(self.data, dtype=float).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "alpha1", float(self.alpha1))
        object.__setattr__(self, "alpha2", float(self.alpha2))


class RegimeLabel(str, Enum):
    BETA_GE_GAMMA = "BetaGeGamma"
    HIGH_PRODUCT = "HighProduct"
    LOW_PRODUCT_CASE1 = "LowProductCase1"
    LOW_PRODUCT_CASE2 = "LowProductCase2"

    def __str__(self):
        return self.value

    @property
    def is_low_product(self) -> bool:
        return self in (RegimeLabel.LOW_PRODUCT_CASE1, RegimeLabel.LOW_PRODUCT_CASE2)


@dataclass(frozen=True)
class Regime:
    """Regime label plus the equivalent-system constants for the low-product labels.

    ``gamma_prime = ratio - harvest``, ``beta_prime = harvest * ratio / gamma_prime``
    and ``gamma2_prime = snr1 / gamma_prime``.  ``factor`` is
    ``(N - (N-1) beta' gamma') / (N gamma')``; ``threshold = initial2 * factor``
    is the SN storage at or above which SN supplements the relay (Case 1).
    """

    label: RegimeLabel
    gamma_prime: Optional[float] = None
    beta_prime: Optional[float] = None
    gamma2_prime: Optional[float] = None
    factor: Optional[float] = None
    threshold: Optional[float] = None


@dataclass(frozen=True)
class FeasibilityReport:
    slack1: np.ndarray
    slack2: np.ndarray
    min_power: float
    tol: float = FEAS_TOL

    @property
    def feasible(self) -> bool:
        return bool(
            np.all(self.slack1 >= -self.tol)
            and np.all(self.slack2 >= -self.tol)
            and self.min_power >= -self.tol
        )

    @property
    def max_violation(self) -> float:
        worst = max(-float(np.min(self.slack1)), -float(np.min(self.slack2)), -self.min_power)
        return max(worst, 0.0)


def _check_dims(params: SystemParams, sched: PowerSchedule) -> None:
    if sched.phases != params.phases:
        raise ValueError(
            f"schedule has {sched.phases} phases but params specify {params.phases}"
        )


def throughput(params: SystemParams, sched: PowerSchedule) -> float:
    """Sum over phases of the bottleneck hop rate, in bits scaled by B/2."""
    if not isinstance(sched, PowerSchedule):
        sched = PowerSchedule(sched)
    _check_dims(params, sched)
    snr = np.minimum(params.snr1 * sched.source, params.snr2 * sched.relay)
    return 0.5 * params.bandwidth * float(np.sum(np.log2(1.0 + snr)))


def check_feasibility(
    params: SystemParams, sched: PowerSchedule, tol: float = FEAS_TOL, variant: str = "full"
) -> FeasibilityReport:
    """Energy-causality slacks of both nodes, phase by phase.

    SN may only spend energy harvested in earlier phases; RN may also spend
    what it harvests from SN in the current phase, because it forwards one
    slot after receiving.  ``variant`` selects the constraint set of a
    baseline: ``"sno"`` (RN does not harvest) or ``"rno"`` (SN does not
    harvest, holds both initial storages, RN starts empty).
    """
    p = np.asarray(sched.powers if isinstance(sched, PowerSchedule) else sched, float)
    if p.ndim != 2 or p.shape != (2, params.phases):
        raise ValueError(f"schedule must have shape (2, {params.phases}), got {p.shape}")
    budget1, budget2 = params.initial1, params.initial2
    gain1 = gain2 = params.harvest
    if variant == "sno":
        gain2 = 0.0
    elif variant == "rno":
        gain1 = 0.0
        budget1, budget2 = params.initial1 + params.initial2, 0.0
    elif variant != "full":
        raise ValueError(f"unknown feasibility variant {variant!r}")
    cum1 = np.cumsum(p[0])
    cum2 = np.cumsum(p[1])
    prev2 = np.concatenate(([0.0], cum2[:-1]))
    slack1 = (budget1 + gain1 * prev2) - cum1
    slack2 = (budget2 + gain2 * cum1) - cum2
    return FeasibilityReport(slack1, slack2, float(np.min(p)), tol)


def classify_regime(params: SystemParams, eps: float = REGIME_EPS) -> Regime:
    beta = params.harvest
    gamma = params.ratio
    if beta >= gamma - eps:
        return Regime(RegimeLabel.BETA_GE_GAMMA)
    if beta * gamma >= 1.0 - eps:
        return Regime(RegimeLabel.HIGH_PRODUCT)
    n = params.phases
    gamma_p = gamma - beta
    beta_p = beta * gamma / gamma_p
    gamma2_p = params.snr1 / gamma_p
    factor = (n - (n - 1) * beta * gamma) / (n * gamma_p)
    threshold = params.initial2 * factor
    label = (
        RegimeLabel.LOW_PRODUCT_CASE1
        if params.initial1 >= threshold
        else RegimeLabel.LOW_PRODUCT_CASE2
    )
    return Regime(label, gamma_p, beta_p, gamma2_p, factor, threshold)


def decompose(params: SystemParams, sched: PowerSchedule) -> DecomposedSchedule:
    """Split each phase into matched data power and one-sided supplement."""
    _check_dims(params, sched)
    gamma = params.ratio
    p1, p2 = sched.source, sched.relay
    src_limited = p1 * params.snr1 >= p2 * params.snr2
    data1 = np.where(src_limited, p2 / gamma, p1)
    data2 = np.where(src_limited, p2, p1 * gamma)
    sup1 = np.where(src_limited, np.maximum(p1 - data1, 0.0), 0.0)
    sup2 = np.where(src_limited, 0.0, np.maximum(p2 - data2, 0.0))
    data = np.vstack([data1, data2])
    sup = np.vstack([sup1, sup2])
    return DecomposedSchedule(data, sup, float(sup[0, 0]), float(sup[1, 0]))


def aggregate_supplements(params: SystemParams, dec: DecomposedSchedule) -> DecomposedSchedule:
    """Move every relay supplement back to phase 1, netting opposing supplements.

    Sweeping from the last phase down, each phase's two-sided supplement is
    netted and whatever RN still sends is shifted one phase earlier.  RN's
    residual at the start of a phase always covers that phase's own
    supplement, so the shift keeps RN feasible and only lets SN harvest
    sooner.  Data powers are untouched, so throughput is unchanged.
    Netting saves energy only while ``harvest <= 1``.
    """
    beta, gamma = params.harvest, params.ratio
    if beta >= gamma:
        raise ValueError("aggregate_supplements requires harvest < snr1/snr2")
    if beta > 1.0:
        raise ValueError("netting opposing supplements requires harvest <= 1")
    if dec.data.shape[1] != params.phases:
        raise ValueError("decomposition does not match params.phases")
    sup = np.array(dec.supplement, dtype=float)
    for j in range(params.phases - 1, 0, -1):
        common = min(sup[0, j], sup[1, j])
        sup[:, j] -= common
        sup[1, j - 1] += sup[1, j]
        sup[1, j] = 0.0
    common = min(sup[0, 0], sup[1, 0])
    sup[:, 0] -= common
    return DecomposedSchedule(dec.data, sup, float(sup[0, 0]), float(sup[1, 0]))


def _require_low_product(regime: Regime) -> None:
    if not regime.label.is_low_product:
        raise ValueError(f"equivalent system is defined only for low-product regimes, got {regime.label}")


def to_physical(params: SystemParams, regime: Regime, eq: EquivalentSchedule) -> PowerSchedule:
    """Map equivalent-system variables back to physical transmit powers."""
    _require_low_product(regime)
    if eq.data.shape != (params.phases,):
        raise ValueError("equivalent schedule length does not match params.phases")
    gp = regime.gamma_prime
    p1 = eq.data / gp
    p2 = eq.data * (params.ratio / gp)
    p1[0] += eq.alpha1
    p2[0] += eq.alpha2
    return PowerSchedule(np.vstack([p1, p2]))


def to_equivalent(
    params: SystemParams, regime: Regime, sched: PowerSchedule, rtol: float = 1e-9
) -> EquivalentSchedule:
    """Inverse of :func:`to_physical` on schedules whose supplements sit in phase 1."""
    _require_low_product(regime)
    _check_dims(params, sched)
    gamma, gp = params.ratio, regime.gamma_prime
    p1, p2 = sched.source, sched.relay
    tail_ok = np.allclose(p2[1:], gamma * p1[1:], rtol=rtol, atol=rtol)
    if not tail_ok:
        raise ValueError("schedule carries supplements after phase 1; not in the equivalent image")
    alpha1 = max(p1[0] - p2[0] / gamma, 0.0)
    alpha2 = max(p2[0] - gamma * p1[0], 0.0)
    data = gp * p1
    data[0] = gp * (p1[0] - alpha1)
    return EquivalentSchedule(data, alpha1, alpha2)


def equivalent_slacks(params: SystemParams, regime: Regime, eq: EquivalentSchedule):
    """SN slacks per phase and the relay budget slack in equivalent-system units.

    The relay budget is treated as an inequality here; the optimal program
    makes it tight.  SN slacks are the physical SN slacks scaled by
    ``gamma_prime``.
    """
    _require_low_product(regime)
    beta, gamma, gp = params.harvest, params.ratio, regime.gamma_prime
    cum = np.cumsum(eq.data)
    prev = np.concatenate(([0.0], cum[:-1]))
    credit = np.full(params.phases, beta * eq.alpha2)
    credit[0] = 0.0
    slack1 = (params.initial1 - eq.alpha1 + credit) * gp + beta * gamma * prev - cum
    slack2 = params.initial2 + beta * eq.alpha1 - eq.alpha2 - cum[-1]
    return slack1, float(slack2)
