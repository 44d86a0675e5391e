"""Allocation of expected-failure targets to subsystems.

The tolerance test ``E[C] <= E[C]_bar`` is equivalent to requiring the
weighted success ``g = sum_k u_k prod_j (1 - E[q_j]) ** f_jk`` to be at least

    S_bar = (c_max - E[C]_bar) / (c_max - c_min).

Targets are apportioned along a ratio vector ``rho`` (expert judgement of how
reliable each subsystem should be relative to the others): ``E[q_j] = t * rho_j``,
and the scale ``t`` is found by bisection on the strictly decreasing
``g(t)``.  Closed forms exist for special layouts but are kept as test
oracles only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    InfeasibleTargetError,
    NoToleranceSourceError,
    NonPositiveRrfError,
    RatioDegenerateError,
    ZeroToleranceRiskError,
)
from .expectation import (
    Binary,
    ModularBinomial,
    Proportional,
    Series,
)
from .model import Scenario, SubsystemSpec
from .risk import (
    Verdict,
    _weighted_success,
    expected_consequence,
    risk,
    tolerable_expected_consequence,
    tolerable_risk,
    verdict_for,
)

BISECTION_TOLERANCE = 1e-9
_T_MAX_SHRINK = 1.0 - 1e-12
_MAX_ITERATIONS = 400


class Feasibility(enum.Enum):
    ALWAYS_SATISFIED = "always_satisfied"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


class AllocationStatus(enum.Enum):
    BOUND = "bound"
    ALWAYS_SATISFIED = "always_satisfied"
    NO_BRACKET = "no_bracket"


class SilBand(enum.IntEnum):
    NOT_APPLICABLE = -1
    BELOW_SIL1 = 0
    SIL1 = 1
    SIL2 = 2
    SIL3 = 3
    SIL4 = 4
    ABOVE_SIL4 = 5

    @property
    def label(self) -> str:
        return {
            SilBand.NOT_APPLICABLE: "n/a",
            SilBand.BELOW_SIL1: "below 1",
            SilBand.ABOVE_SIL4: "above 4",
        }.get(self, str(int(self)))


class DesignKind(enum.Enum):
    EXPECTED_RESPONSE_FRACTION = "expected_response_fraction"
    MODULE_PFD = "module_pfd"
    PFD = "pfd"
    EXPECTED_FAILURE_DEGREE = "expected_failure_degree"


@dataclass(frozen=True)
class DesignTarget:
    subsystem_id: str
    kind: DesignKind
    value: float
    narrative: str


@dataclass(frozen=True)
class AllocationResult:
    subsystem_ids: tuple[str, ...]
    targets: tuple[float, ...]
    ratios: tuple[float, ...]
    scale: float
    status: AllocationStatus
    success_target: float
    achieved_success: float
    tolerable_expected_consequence: float
    achieved_expected_consequence: float
    achieved_risk: float
    tolerable_risk: float | None
    slack: float
    verdict: Verdict
    design_targets: tuple[DesignTarget, ...]
    rrf: float | None
    sil: SilBand
    tol: float
    unit: str = ""


def required_success_target(scenario: Scenario, tolerable_expected_consequence: float) -> float:
    """Minimum admissible weighted success ``S_bar``."""
    cm = scenario.consequence
    return (cm.c_max - tolerable_expected_consequence) / cm.span


def feasibility(success_target: float) -> Feasibility:
    if success_target > 1.0:
        return Feasibility.INFEASIBLE
    if success_target <= 0.0:
        return Feasibility.ALWAYS_SATISFIED
    return Feasibility.FEASIBLE


def _effective(scenario: Scenario, rho: np.ndarray) -> np.ndarray:
    F = scenario.mapping.array.astype(bool)
    weighted = F[:, scenario.contributions > 0].any(axis=1)
    return (rho > 0) & weighted


def _check_ratios(scenario: Scenario, ratios) -> np.ndarray:
    l = len(scenario.subsystems)
    rho = np.ones(l) if ratios is None else np.asarray(ratios, dtype=float)
    if rho.shape != (l,):
        raise ValueError(f"ratios must have {l} entries, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)) or np.any(rho < 0):
        raise ValueError("ratios must be finite and non-negative")
    if not _effective(scenario, rho).any():
        raise RatioDegenerateError(
            "no subsystem with a positive ratio affects a function with positive contribution"
        )
    return rho


def _finish(
    scenario: Scenario,
    rho: np.ndarray,
    t: float,
    status: AllocationStatus,
    success_target: float,
    tol: float,
) -> AllocationResult:
    cm = scenario.consequence
    targets = np.minimum(t * rho, 1.0)
    g = float(_weighted_success(targets, scenario))
    ec = expected_consequence(targets, scenario)
    ec_bar = cm.c_max - cm.span * success_target
    slack = ec_bar - ec
    try:
        r_bar = tolerable_risk(cm)
    except NoToleranceSourceError:
        r_bar = None
    rrf_value = None
    band = SilBand.NOT_APPLICABLE
    if r_bar is not None and r_bar > 0:
        rrf_value = rrf(scenario, r_bar)
        band = sil_from_rrf(rrf_value)
    return AllocationResult(
        subsystem_ids=tuple(scenario.subsystem_ids),
        targets=tuple(float(x) for x in targets),
        ratios=tuple(float(x) for x in rho),
        scale=float(t),
        status=status,
        success_target=float(success_target),
        achieved_success=g,
        tolerable_expected_consequence=ec_bar,
        achieved_expected_consequence=ec,
        achieved_risk=risk(scenario, ec),
        tolerable_risk=r_bar,
        slack=slack,
        verdict=verdict_for(slack, cm),
        design_targets=tuple(derive_design_targets(targets, scenario.subsystems)),
        rrf=rrf_value,
        sil=band,
        tol=tol,
        unit=cm.unit,
    )


def allocate_bisection(
    scenario: Scenario,
    ratios: Sequence[float] | None,
    success_target: float,
    tol: float = BISECTION_TOLERANCE,
) -> AllocationResult:
    """Scale the ratio vector until the weighted success meets ``success_target``.

    Returns the largest scale found with ``g(t) >= success_target`` and
    ``g(t) - success_target <= tol``.  If the constraint still holds at the
    largest admissible scale (where the highest-ratio subsystem reaches
    ``E[q] ~ 1``), it never binds along the chosen ratios; the result at that
    scale is returned with status ``NO_BRACKET`` rather than an error.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    state = feasibility(success_target)
    if state is Feasibility.INFEASIBLE:
        raise InfeasibleTargetError(
            f"required weighted success {success_target:.6g} exceeds 1; "
            "no set of subsystem targets can meet the tolerance"
        )
    rho = _check_ratios(scenario, ratios)
    t_max = _T_MAX_SHRINK / float(rho[rho > 0].max())

    def g(t: float) -> float:
        return float(_weighted_success(t * rho, scenario))

    if state is Feasibility.ALWAYS_SATISFIED:
        return _finish(scenario, rho, t_max, AllocationStatus.ALWAYS_SATISFIED, success_target, tol)
    if g(t_max) >= success_target:
        return _finish(scenario, rho, t_max, AllocationStatus.NO_BRACKET, success_target, tol)

    lo, hi = 0.0, t_max
    if g(lo) - success_target > tol:
        for _ in range(_MAX_ITERATIONS):
            mid = 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
            if g(mid) >= success_target:
                lo = mid
                if g(lo) - success_target <= tol:
                    break
            else:
                hi = mid
    return _finish(scenario, rho, lo, AllocationStatus.BOUND, success_target, tol)


def allocate(
    scenario: Scenario,
    ratios: Sequence[float] | None = None,
    tol: float = BISECTION_TOLERANCE,
) -> AllocationResult:
    """Run the whole allocation: tolerance, success target, bisection, design targets."""
    r_bar = tolerable_risk(scenario.consequence)
    target = required_success_target(scenario, tolerable_expected_consequence(scenario, r_bar))
    return allocate_bisection(scenario, ratios, target, tol)


def _sci(x: float) -> str:
    return f"{x:.1E}"


def _pct(x: float) -> str:
    return f"{100 * x:.4g}%"


def _design_target(sub: SubsystemSpec, eq: float) -> DesignTarget:
    match sub.model:
        case Proportional(measure=measure):
            if measure == "response_time":
                text = f"expected response time E[T] = {_pct(eq)} of T_max"
            else:
                text = f"expected {measure} = {_pct(eq)} of its limit"
            return DesignTarget(sub.id, DesignKind.EXPECTED_RESPONSE_FRACTION, eq, text)
        case Binary():
            return DesignTarget(sub.id, DesignKind.PFD, eq, f"PFD = {_sci(eq)}")
        case ModularBinomial():
            text = (
                f"module PFD = {_sci(eq)} (expected opening {_pct(1.0 - eq)} of modules, "
                "for any module count)"
            )
            return DesignTarget(sub.id, DesignKind.MODULE_PFD, eq, text)
        case Series(components=components):
            names = ", ".join(name for name, _ in components)
            text = (
                f"expected degree of failure = {_sci(eq)}; "
                f"product of successes of ({names}) >= {1.0 - eq:.6g}"
            )
            return DesignTarget(sub.id, DesignKind.EXPECTED_FAILURE_DEGREE, eq, text)
    return DesignTarget(
        sub.id, DesignKind.EXPECTED_FAILURE_DEGREE, eq, f"expected degree of failure = {_sci(eq)}"
    )


def derive_design_targets(
    targets: Sequence[float], subsystems: Sequence[SubsystemSpec]
) -> list[DesignTarget]:
    """Translate expected-failure targets into requirements for each subsystem's model."""
    if len(targets) != len(subsystems):
        raise ValueError("one target per subsystem is required")
    return [_design_target(sub, float(eq)) for sub, eq in zip(subsystems, targets)]


def unmitigated_risk(scenario: Scenario) -> float:
    """Risk with every function failed, i.e. consequence fixed at ``c_max``."""
    return scenario.event_rate * scenario.consequence.c_max


def rrf(scenario: Scenario, tolerable_risk: float) -> float:
    """Risk reduction factor ``r_max / r_bar``.

    For several functions sharing subsystems this treats the whole mitigation
    system as absent, which is only one reading of "without the function".
    """
    if tolerable_risk <= 0:
        raise ZeroToleranceRiskError("tolerable risk must be positive to form an RRF")
    return unmitigated_risk(scenario) / tolerable_risk


# Low-demand bands on PFD = 1/RRF, half-open [lower, upper): expressed on RRF
# as (lower, upper], so RRF 10 is below SIL1 and RRF 100 is SIL1.
_SIL_RRF_UPPER = [
    (10.0, SilBand.BELOW_SIL1),
    (1e2, SilBand.SIL1),
    (1e3, SilBand.SIL2),
    (1e4, SilBand.SIL3),
    (1e5, SilBand.SIL4),
]


def sil_from_rrf(rrf_value: float) -> SilBand:
    if not rrf_value > 0 or math.isnan(rrf_value):
        raise NonPositiveRrfError(f"RRF must be positive, got {rrf_value!r}")
    for upper, band in _SIL_RRF_UPPER:
        if rrf_value <= upper:
            return band
    return SilBand.ABOVE_SIL4
