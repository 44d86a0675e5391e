"""Scenario domain types and structural validation.

A scenario describes one hazardous event and the mitigation system that
responds to it: ``l`` independent subsystems supporting ``m`` functions,
linked by a binary mapping matrix (``entries[j][k] == 1`` when subsystem ``j``
is needed by function ``k``).

Severity units are carried as a label only and are never converted; putting
every consequence on one common scale is left to the analyst.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping

import numpy as np

from .errors import Issue, ScenarioValidationError, UnknownFunctionError
from .expectation import MODEL_TYPES, FailureModel

log = logging.getLogger(__name__)

CONTRIBUTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ConsequenceSegment:
    name: str
    severity: float
    tolerable_frequency: float
    estimated_frequency: float | None = None


@dataclass(frozen=True)
class ConsequenceModel:
    c_min: float
    c_max: float
    unit: str = ""
    segments: tuple[ConsequenceSegment, ...] = ()
    tolerable_risk_override: float | None = None

    @property
    def span(self) -> float:
        return self.c_max - self.c_min


@dataclass(frozen=True)
class FunctionSpec:
    id: str
    contribution: float


@dataclass(frozen=True)
class SubsystemSpec:
    id: str
    model: FailureModel


@dataclass(frozen=True)
class ExternalFactor:
    name: str
    probability: float


@dataclass(frozen=True)
class MappingMatrix:
    """``l x m`` matrix of 0/1 entries stored as nested tuples."""

    entries: tuple[tuple[int, ...], ...]

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.array(self.entries, dtype=np.int8).reshape(len(self.entries), -1)
        arr.flags.writeable = False
        return arr

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.entries), len(self.entries[0]) if self.entries else 0)

    def column(self, k: int) -> tuple[int, ...]:
        return tuple(row[k] for row in self.entries)


@dataclass(frozen=True)
class Scenario:
    name: str
    hazardous_event_frequency: float
    consequence: ConsequenceModel
    functions: tuple[FunctionSpec, ...]
    subsystems: tuple[SubsystemSpec, ...]
    mapping: MappingMatrix
    external_factors: tuple[ExternalFactor, ...] = ()
    description: str = ""
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def function_ids(self) -> list[str]:
        return [f.id for f in self.functions]

    @property
    def subsystem_ids(self) -> list[str]:
        return [s.id for s in self.subsystems]

    @property
    def contributions(self) -> np.ndarray:
        return np.array([f.contribution for f in self.functions], dtype=float)

    @property
    def external_probability(self) -> float:
        """Product of the external-factor probabilities (1 when there are none)."""
        return math.prod(f.probability for f in self.external_factors)

    @property
    def event_rate(self) -> float:
        """Frequency at which a consequence actually materialises, per year."""
        return self.hazardous_event_frequency * self.external_probability


def subsystems_of(scenario: Scenario, function_id: str) -> list[str]:
    """Ids of the subsystems the function depends on, in declaration order."""
    try:
        k = scenario.function_ids.index(function_id)
    except ValueError:
        raise UnknownFunctionError(function_id) from None
    col = scenario.mapping.column(k)
    return [s.id for s, f in zip(scenario.subsystems, col) if f == 1]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_ids(kind: str, ids: list[str], issues: list[Issue]) -> None:
    seen: set[str] = set()
    for i, ident in enumerate(ids):
        if not isinstance(ident, str) or not ident:
            issues.append(Issue("RangeViolation", f"{kind} id must be a non-empty string", f"{kind}s[{i}]"))
        elif ident in seen:
            issues.append(Issue("DuplicateId", f"{kind} id {ident!r} is declared more than once", f"{kind}s[{i}]"))
        seen.add(ident)


def _check_scenario(s: Scenario, issues: list[Issue], warnings: list[str], normalize: bool) -> Scenario:
    if not _is_number(s.hazardous_event_frequency) or s.hazardous_event_frequency <= 0:
        issues.append(Issue(
            "RangeViolation",
            f"frequency must be positive, got {s.hazardous_event_frequency!r}",
            "hazardous_event.frequency_per_year",
        ))
    for i, ext in enumerate(s.external_factors):
        if not _is_number(ext.probability) or not 0.0 < ext.probability <= 1.0:
            issues.append(Issue(
                "RangeViolation",
                f"external factor {ext.name!r} probability {ext.probability!r} not in (0, 1]",
                f"hazardous_event.external_factors[{i}]",
            ))

    cm = s.consequence
    if not _is_number(cm.c_min) or cm.c_min < 0:
        issues.append(Issue("RangeViolation", f"c_min must be >= 0, got {cm.c_min!r}", "consequence.c_min"))
    if not _is_number(cm.c_max) or (_is_number(cm.c_min) and cm.c_max <= cm.c_min):
        issues.append(Issue("RangeViolation", f"c_max {cm.c_max!r} must exceed c_min {cm.c_min!r}", "consequence.c_max"))
    if cm.tolerable_risk_override is not None and (
        not _is_number(cm.tolerable_risk_override) or cm.tolerable_risk_override < 0
    ):
        issues.append(Issue("RangeViolation", "tolerable_risk must be a non-negative number", "consequence.tolerable_risk"))
    severities = []
    for h, seg in enumerate(cm.segments):
        path = f"consequence.segments[{h}]"
        if not _is_number(seg.severity) or seg.severity < 0:
            issues.append(Issue("RangeViolation", f"segment {seg.name!r} severity must be >= 0", path))
        else:
            severities.append(seg.severity)
            if _is_number(cm.c_max) and seg.severity > cm.c_max:
                issues.append(Issue("RangeViolation", f"segment {seg.name!r} severity exceeds c_max", path))
        if not _is_number(seg.tolerable_frequency) or seg.tolerable_frequency <= 0:
            issues.append(Issue("RangeViolation", f"segment {seg.name!r} tolerable_frequency must be > 0", path))
        if seg.estimated_frequency is not None and (
            not _is_number(seg.estimated_frequency) or seg.estimated_frequency < 0
        ):
            issues.append(Issue("RangeViolation", f"segment {seg.name!r} estimated_frequency must be >= 0", path))
    if len(severities) == len(cm.segments) and any(
        a < b for a, b in zip(severities, severities[1:])
    ):
        issues.append(Issue("RangeViolation", "segments must be sorted by severity, descending", "consequence.segments"))

    _check_ids("function", s.function_ids, issues)
    _check_ids("subsystem", s.subsystem_ids, issues)

    functions = s.functions
    contributions_ok = True
    for k, fn in enumerate(functions):
        if not _is_number(fn.contribution) or not 0.0 <= fn.contribution <= 1.0:
            contributions_ok = False
            issues.append(Issue("RangeViolation", f"contribution {fn.contribution!r} not in [0, 1]", f"functions[{k}]"))
    if not functions:
        issues.append(Issue("DimensionMismatch", "scenario declares no functions", "functions"))
    elif contributions_ok:
        total = math.fsum(f.contribution for f in functions)
        if abs(total - 1.0) > CONTRIBUTION_TOLERANCE:
            if normalize and total > 0:
                functions = tuple(FunctionSpec(f.id, f.contribution / total) for f in functions)
                warnings.append(f"contributions summed to {total!r}; rescaled to 1")
            else:
                issues.append(Issue("ContributionSumViolation", f"contributions sum to {total!r}, not 1", "functions"))

    if not s.subsystems:
        issues.append(Issue("DimensionMismatch", "scenario declares no subsystems", "subsystems"))
    for j, sub in enumerate(s.subsystems):
        if not isinstance(sub.model, MODEL_TYPES):
            issues.append(Issue("InvalidModel", f"unsupported model {sub.model!r}", f"subsystems[{j}].model"))
            continue
        for problem in sub.model.problems():
            issues.append(Issue("RangeViolation", problem, f"subsystems[{j}].model"))

    rows = s.mapping.entries
    l, m = len(s.subsystems), len(s.functions)
    if len(rows) != l or any(len(r) != m for r in rows):
        issues.append(Issue(
            "DimensionMismatch",
            f"mapping is not {l} x {m} (subsystems x functions)",
            "mapping",
        ))
    else:
        if any(v not in (0, 1) or isinstance(v, bool) for r in rows for v in r):
            issues.append(Issue("RangeViolation", "mapping entries must be exactly 0 or 1", "mapping"))
        for k in range(m):
            if not any(r[k] == 1 for r in rows):
                issues.append(Issue(
                    "EmptyFunctionColumn",
                    f"function {s.functions[k].id!r} depends on no subsystem",
                    f"mapping[*][{k}]",
                ))
        for j, r in enumerate(rows):
            if not any(v == 1 for v in r):
                warnings.append(f"subsystem {s.subsystems[j].id!r} supports no function")

    if functions is not s.functions:
        s = Scenario(**{**s.__dict__, "functions": functions})
    return s


def scenario_from_document(doc: Mapping[str, Any]) -> tuple[Scenario, list[Issue]]:
    """Build a Scenario from a parsed document without checking invariants.

    Mapping references to unknown ids are reported as issues here, since they
    cannot be represented in the matrix.
    """
    from .scenario_io import check_document, model_from_document

    check_document(doc)
    issues: list[Issue] = []
    meta = doc.get("metadata", {})
    he = doc["hazardous_event"]
    cons = doc["consequence"]
    segments = tuple(
        ConsequenceSegment(
            name=seg.get("name", f"segment{h + 1}"),
            severity=seg["severity"],
            tolerable_frequency=seg["tolerable_frequency"],
            estimated_frequency=seg.get("estimated_frequency"),
        )
        for h, seg in enumerate(cons.get("segments", []))
    )
    consequence = ConsequenceModel(
        c_min=cons["c_min"],
        c_max=cons["c_max"],
        unit=meta.get("severity_unit", ""),
        segments=segments,
        tolerable_risk_override=cons.get("tolerable_risk"),
    )
    functions = tuple(FunctionSpec(f["id"], f["contribution"]) for f in doc["functions"])
    subsystems = tuple(
        SubsystemSpec(s["id"], model_from_document(s["model"])) for s in doc["subsystems"]
    )
    fn_index = {f.id: k for k, f in reversed(list(enumerate(functions)))}
    sub_index = {s.id: j for j, s in reversed(list(enumerate(subsystems)))}
    matrix = [[0] * len(functions) for _ in subsystems]
    mapped: set[str] = set()
    for i, entry in enumerate(doc["mapping"]):
        sid = entry["subsystem"]
        if sid not in sub_index:
            issues.append(Issue("DimensionMismatch", f"mapping names unknown subsystem {sid!r}", f"mapping[{i}]"))
            continue
        if sid in mapped:
            issues.append(Issue("DuplicateId", f"subsystem {sid!r} is mapped more than once", f"mapping[{i}]"))
        mapped.add(sid)
        for fid in entry["functions"]:
            if fid not in fn_index:
                issues.append(Issue("DimensionMismatch", f"mapping names unknown function {fid!r}", f"mapping[{i}]"))
                continue
            matrix[sub_index[sid]][fn_index[fid]] = 1
    scenario = Scenario(
        name=meta.get("name", ""),
        description=meta.get("description", ""),
        hazardous_event_frequency=he["frequency_per_year"],
        external_factors=tuple(
            ExternalFactor(x["name"], x["probability"]) for x in he.get("external_factors", [])
        ),
        consequence=consequence,
        functions=functions,
        subsystems=subsystems,
        mapping=MappingMatrix(tuple(tuple(r) for r in matrix)),
    )
    return scenario, issues


def validate_scenario(document: Mapping[str, Any] | Scenario, *, normalize: bool = False) -> Scenario:
    """Check every scenario invariant and return the validated Scenario.

    Accepts either a parsed scenario document or an existing Scenario.  All
    violations are collected and raised together as
    :class:`ScenarioValidationError`.  With ``normalize=True`` contributions
    that do not sum to one are rescaled (with a warning) instead of rejected.
    """
    if isinstance(document, Scenario):
        scenario, issues = document, []
    else:
        scenario, issues = scenario_from_document(document)
    warnings: list[str] = []
    checked = _check_scenario(scenario, issues, warnings, normalize)
    if issues:
        raise ScenarioValidationError(issues)
    for w in warnings:
        log.warning("%s: %s", checked.name or "scenario", w)
    if checked is scenario and tuple(warnings) == scenario.warnings:
        return scenario
    return Scenario(**{**checked.__dict__, "warnings": tuple(warnings)})
