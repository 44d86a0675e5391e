"""Analytic risk engine.

Function ``k`` succeeds to the degree ``s_k = prod_j (1 - q_j) ** f_jk``, and the
consequence severity falls linearly from ``c_max`` towards ``c_min`` with the
contribution-weighted success::

    c = c_max - (c_max - c_min) * sum_k u_k * s_k

Subsystems are independent, so ``E[s_k]`` is the same product taken over the
expected failure degrees, and ``E[C]`` follows by linearity.  Risk is the
expected consequence times the rate at which consequences materialise
(hazardous-event frequency times any external enabling probabilities).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DivisionByZeroFrequencyError,
    MissingEstimatedFrequencyError,
    NoToleranceSourceError,
    UnknownCategoryError,
)
from .model import ConsequenceModel, ConsequenceSegment, MappingMatrix, Scenario

VERDICT_RTOL = 1e-12

# Fatality-equivalent weights (1 fatality = 3 permanent disabilities =
# 10 hospitalisations = 200 medical treatments = 1000 first aid cases).
# These ratios are set by national authorities; override per jurisdiction.
DEFAULT_FWI_WEIGHTS = {
    "fatality": 1.0,
    "permanent_disability": 1.0 / 3.0,
    "hospitalisation": 0.1,
    "medical_treatment": 0.005,
    "first_aid": 0.001,
}


class Verdict(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RiskAssessment:
    expected_consequence: float
    risk: float
    tolerable_risk: float
    tolerable_expected_consequence: float
    slack: float
    verdict: Verdict
    subsystem_ids: tuple[str, ...]
    expected_failures: tuple[float, ...]
    weighted_success: float
    hazardous_event_frequency: float
    external_factors: tuple[tuple[str, float], ...]
    segment_tolerable_risk: float | None
    unit: str = ""
    verdict_tolerance: float = VERDICT_RTOL


def _as_failures(q, length: int, what: str = "q") -> np.ndarray:
    arr = np.asarray(q, dtype=float)
    if arr.shape[-1:] != (length,):
        raise ValueError(f"{what} must have {length} entries (one per subsystem), got shape {arr.shape}")
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise ValueError(f"{what} entries must lie in [0, 1]")
    return arr


def function_success(q: Sequence[float], mapping: MappingMatrix, k: int) -> float:
    """Degree of success of function ``k`` given subsystem failure degrees ``q``."""
    l, m = mapping.shape
    if not 0 <= k < m:
        raise IndexError(f"function index {k} out of range for {m} functions")
    arr = _as_failures(q, l)
    col = mapping.array[:, k].astype(bool)
    return float(np.prod(1.0 - arr[col]))


def _weighted_success(q: np.ndarray, scenario: Scenario) -> np.ndarray:
    # works on a single vector (l,) or a batch (n, l)
    F = scenario.mapping.array.astype(bool)
    u = scenario.contributions
    total = np.zeros(q.shape[:-1])
    for k in range(F.shape[1]):
        total = total + u[k] * np.prod(1.0 - q[..., F[:, k]], axis=-1)
    return total


def weighted_success(eq: Sequence[float], scenario: Scenario) -> float:
    """``sum_k u_k * prod_j (1 - E[q_j]) ** f_jk``; at least the required success target to pass."""
    return float(_weighted_success(_as_failures(eq, len(scenario.subsystems), "eq"), scenario))


def _severity(success, consequence: ConsequenceModel):
    c = consequence.c_max - consequence.span * success
    return np.clip(c, consequence.c_min, consequence.c_max)


def consequence(q: Sequence[float], scenario: Scenario) -> float:
    """Consequence severity for one realisation of subsystem failure degrees."""
    arr = _as_failures(q, len(scenario.subsystems))
    return float(_severity(_weighted_success(arr, scenario), scenario.consequence))


def consequence_batch(q: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Row-wise :func:`consequence` for an ``(n, l)`` array of draws."""
    arr = _as_failures(q, len(scenario.subsystems))
    return _severity(_weighted_success(arr, scenario), scenario.consequence)


def expected_consequence(eq: Sequence[float], scenario: Scenario) -> float:
    """E[C] from the expected failure degree of every subsystem."""
    arr = _as_failures(eq, len(scenario.subsystems), "eq")
    return float(_severity(_weighted_success(arr, scenario), scenario.consequence))


def risk(scenario: Scenario, expected_consequence: float) -> float:
    if expected_consequence < 0:
        raise ValueError("expected consequence must be non-negative")
    return scenario.hazardous_event_frequency * scenario.external_probability * expected_consequence


def risk_from_segments(segments: Iterable[ConsequenceSegment]) -> float:
    terms = []
    for seg in segments:
        if seg.estimated_frequency is None:
            raise MissingEstimatedFrequencyError(f"segment {seg.name!r} has no estimated_frequency")
        terms.append(seg.estimated_frequency * seg.severity)
    return math.fsum(terms)


def segment_tolerable_risk(consequence_model: ConsequenceModel) -> float | None:
    """Sum of ``tolerable_frequency * severity`` over segments, or None without segments."""
    if not consequence_model.segments:
        return None
    return math.fsum(s.tolerable_frequency * s.severity for s in consequence_model.segments)


def tolerable_risk(consequence_model: ConsequenceModel) -> float:
    """Tolerable risk: the explicit override if present, else the segment sum."""
    if consequence_model.tolerable_risk_override is not None:
        return float(consequence_model.tolerable_risk_override)
    derived = segment_tolerable_risk(consequence_model)
    if derived is None:
        raise NoToleranceSourceError("no tolerable_risk given and no consequence segments")
    return derived


def tolerable_expected_consequence(scenario: Scenario, tolerable_risk: float) -> float:
    rate = scenario.event_rate
    if rate <= 0:
        raise DivisionByZeroFrequencyError("event frequency times external probabilities is zero")
    return tolerable_risk / rate


def verdict_for(slack: float, consequence_model: ConsequenceModel) -> Verdict:
    return Verdict.PASS if slack >= -VERDICT_RTOL * consequence_model.span else Verdict.FAIL


def assess(scenario: Scenario, eq: Sequence[float]) -> RiskAssessment:
    """Compare expected risk at the given expected failure degrees with the tolerance."""
    arr = _as_failures(eq, len(scenario.subsystems), "eq")
    success = float(_weighted_success(arr, scenario))
    ec = float(_severity(success, scenario.consequence))
    r = risk(scenario, ec)
    r_bar = tolerable_risk(scenario.consequence)
    ec_bar = tolerable_expected_consequence(scenario, r_bar)
    slack = ec_bar - ec
    return RiskAssessment(
        expected_consequence=ec,
        risk=r,
        tolerable_risk=r_bar,
        tolerable_expected_consequence=ec_bar,
        slack=slack,
        verdict=verdict_for(slack, scenario.consequence),
        subsystem_ids=tuple(scenario.subsystem_ids),
        expected_failures=tuple(float(x) for x in arr),
        weighted_success=success,
        hazardous_event_frequency=scenario.hazardous_event_frequency,
        external_factors=tuple((x.name, x.probability) for x in scenario.external_factors),
        segment_tolerable_risk=segment_tolerable_risk(scenario.consequence),
        unit=scenario.consequence.unit,
    )


def severity_from_fwi(
    counts: Mapping[str, float] | Iterable[tuple[str, float]],
    ratios: Mapping[str, float] | Iterable[tuple[str, float]] | None = None,
) -> float:
    """Fatality-equivalent severity of a casualty profile."""
    weights = dict(DEFAULT_FWI_WEIGHTS if ratios is None else ratios)
    pairs = counts.items() if isinstance(counts, Mapping) else counts
    total = []
    for category, count in pairs:
        if category not in weights:
            raise UnknownCategoryError(category)
        total.append(count * weights[category])
    return math.fsum(total)
