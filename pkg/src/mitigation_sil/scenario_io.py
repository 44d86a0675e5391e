"""Scenario files and reports.

Scenario files are JSON documents (see ``docs/scenario_format.md``).  Parsing
here is structural only: it checks that required fields exist and have the
right JSON types.  Semantic checks live in :func:`mitigation_sil.model.validate_scenario`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .allocate import AllocationResult
from .errors import MissingFieldError, ScenarioParseError, ScenarioSyntaxError, UnknownModelKindError
from .expectation import (
    BetaDensity,
    Binary,
    Empirical,
    FailureModel,
    MCEstimate,
    ModularBinomial,
    PointMass,
    Proportional,
    Series,
)
from .model import Scenario, validate_scenario
from .risk import RiskAssessment

FORMATS = ("table", "csv", "json")

_NUMBER = (int, float)


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------


def _require(obj: Any, key: str, types, path: str, optional: bool = False):
    if not isinstance(obj, dict):
        raise ScenarioParseError(f"{path or 'document'} must be an object")
    if key not in obj:
        if optional:
            return None
        raise MissingFieldError(f"missing field {path + '.' if path else ''}{key}")
    value = obj[key]
    if optional and value is None:
        return None
    if types is _NUMBER and isinstance(value, bool):
        raise ScenarioParseError(f"{path}.{key} must be a number")
    if not isinstance(value, types):
        names = getattr(types, "__name__", None) or "/".join(t.__name__ for t in types)
        raise ScenarioParseError(f"{path + '.' if path else ''}{key} must be {names}, got {type(value).__name__}")
    return value


_MODEL_FIELDS = {
    "binary": {"pfd": _NUMBER},
    "point_mass": {"q": _NUMBER},
    "proportional": {"expected_fraction": _NUMBER},
    "modular_binomial": {"module_pfd": _NUMBER},
    "beta": {"alpha": _NUMBER, "beta": _NUMBER},
    "empirical": {"support": list},
    "series": {"components": list},
}


def _check_model(doc: Any, path: str) -> None:
    kind = _require(doc, "kind", str, path)
    if kind not in _MODEL_FIELDS:
        raise UnknownModelKindError(f"{path}.kind: unknown model kind {kind!r}")
    for key, types in _MODEL_FIELDS[kind].items():
        _require(doc, key, types, path)
    if kind == "proportional":
        _require(doc, "measure", str, path, optional=True)
        _require(doc, "params", dict, path, optional=True)
    elif kind == "modular_binomial":
        _require(doc, "module_count", int, path, optional=True)
    elif kind == "empirical":
        for i, atom in enumerate(doc["support"]):
            if not (isinstance(atom, list) and len(atom) == 2 and all(
                isinstance(x, _NUMBER) and not isinstance(x, bool) for x in atom
            )):
                raise ScenarioParseError(f"{path}.support[{i}] must be a [value, probability] pair")
    elif kind == "series":
        for i, comp in enumerate(doc["components"]):
            _require(comp, "name", str, f"{path}.components[{i}]")
            _check_model(_require(comp, "model", dict, f"{path}.components[{i}]"), f"{path}.components[{i}].model")


def check_document(doc: Any) -> None:
    """Raise a :class:`ScenarioParseError` unless ``doc`` has the scenario layout."""
    if not isinstance(doc, dict):
        raise MissingFieldError("scenario document must be a JSON object with the scenario sections")
    meta = _require(doc, "metadata", dict, "", optional=True)
    if meta is not None:
        for key in ("name", "description", "severity_unit"):
            _require(meta, key, str, "metadata", optional=True)
    he = _require(doc, "hazardous_event", dict, "")
    _require(he, "frequency_per_year", _NUMBER, "hazardous_event")
    for i, ext in enumerate(_require(he, "external_factors", list, "hazardous_event", optional=True) or []):
        p = f"hazardous_event.external_factors[{i}]"
        _require(ext, "name", str, p)
        _require(ext, "probability", _NUMBER, p)
    cons = _require(doc, "consequence", dict, "")
    _require(cons, "c_min", _NUMBER, "consequence")
    _require(cons, "c_max", _NUMBER, "consequence")
    _require(cons, "tolerable_risk", _NUMBER, "consequence", optional=True)
    for h, seg in enumerate(_require(cons, "segments", list, "consequence", optional=True) or []):
        p = f"consequence.segments[{h}]"
        _require(seg, "name", str, p, optional=True)
        _require(seg, "severity", _NUMBER, p)
        _require(seg, "tolerable_frequency", _NUMBER, p)
        _require(seg, "estimated_frequency", _NUMBER, p, optional=True)
    for i, fn in enumerate(_require(doc, "functions", list, "")):
        _require(fn, "id", str, f"functions[{i}]")
        _require(fn, "contribution", _NUMBER, f"functions[{i}]")
    for j, sub in enumerate(_require(doc, "subsystems", list, "")):
        _require(sub, "id", str, f"subsystems[{j}]")
        _check_model(_require(sub, "model", dict, f"subsystems[{j}]"), f"subsystems[{j}].model")
    for i, entry in enumerate(_require(doc, "mapping", list, "")):
        _require(entry, "subsystem", str, f"mapping[{i}]")
        fns = _require(entry, "functions", list, f"mapping[{i}]")
        if not all(isinstance(f, str) for f in fns):
            raise ScenarioParseError(f"mapping[{i}].functions must list function ids")


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------


def parse(text: str) -> dict:
    """Parse scenario file contents into a structurally checked document."""
    if not text.strip():
        raise MissingFieldError("empty scenario file: missing field hazardous_event")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    check_document(doc)
    return doc


def emit_document(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def model_from_document(doc: Mapping[str, Any]) -> FailureModel:
    kind = doc["kind"]
    if kind == "binary":
        return Binary(doc["pfd"])
    if kind == "point_mass":
        return PointMass(doc["q"])
    if kind == "proportional":
        return Proportional(doc["expected_fraction"], doc.get("measure", "fraction"), dict(doc.get("params") or {}))
    if kind == "modular_binomial":
        return ModularBinomial(doc["module_pfd"], doc.get("module_count"))
    if kind == "beta":
        return BetaDensity(doc["alpha"], doc["beta"])
    if kind == "empirical":
        return Empirical(tuple(tuple(a) for a in doc["support"]))
    if kind == "series":
        return Series(tuple((c["name"], model_from_document(c["model"])) for c in doc["components"]))
    raise UnknownModelKindError(f"unknown model kind {kind!r}")


def model_to_document(model: FailureModel) -> dict:
    match model:
        case Binary(pfd=p):
            return {"kind": "binary", "pfd": p}
        case PointMass(q=q):
            return {"kind": "point_mass", "q": q}
        case Proportional(expected_fraction=f, measure=measure, params=params):
            out = {"kind": "proportional", "measure": measure, "expected_fraction": f}
            if params:
                out["params"] = dict(params)
            return out
        case ModularBinomial(module_pfd=p, module_count=n):
            out = {"kind": "modular_binomial", "module_pfd": p}
            if n is not None:
                out["module_count"] = n
            return out
        case BetaDensity(alpha=a, beta=b):
            return {"kind": "beta", "alpha": a, "beta": b}
        case Empirical(support=support):
            return {"kind": "empirical", "support": [[v, p] for v, p in support]}
        case Series(components=components):
            return {
                "kind": "series",
                "components": [{"name": n, "model": model_to_document(m)} for n, m in components],
            }
    raise UnknownModelKindError(f"cannot serialise {model!r}")


def scenario_to_document(scenario: Scenario) -> dict:
    """Serialise a Scenario; ``validate_scenario`` of the result gives it back."""
    cm = scenario.consequence
    meta = {"name": scenario.name}
    if scenario.description:
        meta["description"] = scenario.description
    meta["severity_unit"] = cm.unit
    he: dict[str, Any] = {"frequency_per_year": scenario.hazardous_event_frequency}
    if scenario.external_factors:
        he["external_factors"] = [{"name": x.name, "probability": x.probability} for x in scenario.external_factors]
    cons: dict[str, Any] = {"c_min": cm.c_min, "c_max": cm.c_max}
    if cm.tolerable_risk_override is not None:
        cons["tolerable_risk"] = cm.tolerable_risk_override
    if cm.segments:
        segs = []
        for s in cm.segments:
            seg = {"name": s.name, "severity": s.severity, "tolerable_frequency": s.tolerable_frequency}
            if s.estimated_frequency is not None:
                seg["estimated_frequency"] = s.estimated_frequency
            segs.append(seg)
        cons["segments"] = segs
    fids = scenario.function_ids
    return {
        "metadata": meta,
        "hazardous_event": he,
        "consequence": cons,
        "functions": [{"id": f.id, "contribution": f.contribution} for f in scenario.functions],
        "subsystems": [{"id": s.id, "model": model_to_document(s.model)} for s in scenario.subsystems],
        "mapping": [
            {"subsystem": s.id, "functions": [fids[k] for k, f in enumerate(row) if f == 1]}
            for s, row in zip(scenario.subsystems, scenario.mapping.entries)
        ],
    }


def load_scenario(path: str | Path, *, normalize: bool = False) -> Scenario:
    """Read, parse and validate a scenario file."""
    return validate_scenario(parse(Path(path).read_text(encoding="utf-8")), normalize=normalize)


def fixture_path(name: str) -> Path:
    """Path of a bundled case-study scenario (``"gas"`` or ``"tunnel"``)."""
    path = resources.files("mitigation_sil") / "scenarios" / f"{name}.scenario"
    return Path(str(path))


def load_fixture(name: str) -> Scenario:
    return load_scenario(fixture_path(name))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def fmt(x: float | None) -> str:
    """Four significant figures, as used in printed tables."""
    if x is None:
        return "n/a"
    if x == 0:
        return "0"
    if not math.isfinite(x):
        return str(x)
    return f"{x:.4g}"


def _unit(u: str) -> str:
    return f" {u}" if u else ""


def _assessment_summary(a: RiskAssessment) -> list[tuple[str, Any]]:
    return [
        ("expected_consequence", a.expected_consequence),
        ("tolerable_expected_consequence", a.tolerable_expected_consequence),
        ("risk", a.risk),
        ("tolerable_risk", a.tolerable_risk),
        ("slack", a.slack),
        ("verdict", str(a.verdict)),
    ]


def _allocation_summary(r: AllocationResult) -> list[tuple[str, Any]]:
    return [
        ("expected_consequence", r.achieved_expected_consequence),
        ("tolerable_expected_consequence", r.tolerable_expected_consequence),
        ("risk", r.achieved_risk),
        ("tolerable_risk", r.tolerable_risk),
        ("slack", r.slack),
        ("verdict", str(r.verdict)),
        ("scale", r.scale),
        ("success_target", r.success_target),
        ("achieved_success", r.achieved_success),
        ("status", r.status.value),
        ("rrf", r.rrf),
        ("sil", r.sil.label),
    ]


def _mc_summary(mc: MCEstimate) -> list[tuple[str, Any]]:
    return [("mean", mc.mean), ("stderr", mc.stderr), ("samples", mc.samples), ("seed", mc.seed)]


def report_to_dict(result: RiskAssessment | AllocationResult | MCEstimate) -> dict:
    """Lossless machine form of a result."""
    if isinstance(result, RiskAssessment):
        return {
            "type": "assessment",
            "unit": result.unit,
            "hazardous_event_frequency": result.hazardous_event_frequency,
            "external_factors": {n: p for n, p in result.external_factors},
            "expected_consequence": result.expected_consequence,
            "tolerable_expected_consequence": result.tolerable_expected_consequence,
            "risk": result.risk,
            "tolerable_risk": result.tolerable_risk,
            "segment_tolerable_risk": result.segment_tolerable_risk,
            "weighted_success": result.weighted_success,
            "slack": result.slack,
            "verdict": str(result.verdict),
            "verdict_tolerance": result.verdict_tolerance,
            "targets": dict(zip(result.subsystem_ids, result.expected_failures)),
        }
    if isinstance(result, AllocationResult):
        return {
            "type": "allocation",
            "unit": result.unit,
            "status": result.status.value,
            "scale": result.scale,
            "tol": result.tol,
            "success_target": result.success_target,
            "achieved_success": result.achieved_success,
            "expected_consequence": result.achieved_expected_consequence,
            "tolerable_expected_consequence": result.tolerable_expected_consequence,
            "risk": result.achieved_risk,
            "tolerable_risk": result.tolerable_risk,
            "slack": result.slack,
            "verdict": str(result.verdict),
            "rrf": result.rrf,
            "sil": result.sil.label,
            "ratios": dict(zip(result.subsystem_ids, result.ratios)),
            "targets": dict(zip(result.subsystem_ids, result.targets)),
            "design_targets": [
                {
                    "subsystem": d.subsystem_id,
                    "kind": d.kind.value,
                    "value": d.value,
                    "narrative": d.narrative,
                }
                for d in result.design_targets
            ],
        }
    if isinstance(result, MCEstimate):
        return {"type": "monte_carlo", **dict(_mc_summary(result))}
    raise TypeError(f"cannot report {type(result).__name__}")


def _table(rows: list[tuple[str, str]]) -> list[str]:
    return [f"{k}: {v}" for k, v in rows]


def _subsystem_table(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> list[str]:
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    return [line(header), line(tuple("-" * w for w in widths))] + [line(r) for r in rows]


def _assessment_table(a: RiskAssessment) -> str:
    u = _unit(a.unit)
    rows = [("Event frequency", f"{fmt(a.hazardous_event_frequency)} /yr")]
    for name, p in a.external_factors:
        rows.append((f"External factor {name}", fmt(p)))
    rows += [
        ("E[C]", f"{fmt(a.expected_consequence)}{u}"),
        ("E[C]-bar", f"{fmt(a.tolerable_expected_consequence)}{u}"),
        ("r", f"{fmt(a.risk)}{u}/yr"),
        ("r-bar", f"{fmt(a.tolerable_risk)}{u}/yr"),
        ("Weighted success", fmt(a.weighted_success)),
        ("Slack", f"{fmt(a.slack)}{u}"),
        ("Verdict", str(a.verdict)),
    ]
    subs = _subsystem_table(
        ("subsystem", "E[q]"),
        [(sid, fmt(q)) for sid, q in zip(a.subsystem_ids, a.expected_failures)],
    )
    return "\n".join(_table(rows) + [""] + subs) + "\n"


def _allocation_table(r: AllocationResult) -> str:
    u = _unit(r.unit)
    rows = [
        ("Status", r.status.value),
        ("Scale t*", fmt(r.scale)),
        ("Required success", fmt(r.success_target)),
        ("Achieved success", fmt(r.achieved_success)),
        ("E[C]", f"{fmt(r.achieved_expected_consequence)}{u}"),
        ("E[C]-bar", f"{fmt(r.tolerable_expected_consequence)}{u}"),
        ("r", f"{fmt(r.achieved_risk)}{u}/yr"),
        ("r-bar", f"{fmt(r.tolerable_risk)}{u}/yr"),
        ("Slack", f"{fmt(r.slack)}{u}"),
        ("Verdict", str(r.verdict)),
        ("RRF", fmt(r.rrf)),
        ("SIL", r.sil.label),
    ]
    subs = _subsystem_table(
        ("subsystem", "ratio", "E[q] target", "design requirement"),
        [
            (sid, fmt(rho), fmt(q), d.narrative)
            for sid, rho, q, d in zip(r.subsystem_ids, r.ratios, r.targets, r.design_targets)
        ],
    )
    return "\n".join(_table(rows) + [""] + subs) + "\n"


def _csv(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(result, RiskAssessment):
        w.writerow(["subsystem", "expected_failure"])
        for sid, q in zip(result.subsystem_ids, result.expected_failures):
            w.writerow([sid, repr(q)])
        summary = _assessment_summary(result)
    elif isinstance(result, AllocationResult):
        w.writerow(["subsystem", "ratio", "expected_failure", "design_kind", "design_value", "narrative"])
        for sid, rho, q, d in zip(result.subsystem_ids, result.ratios, result.targets, result.design_targets):
            w.writerow([sid, repr(rho), repr(q), d.kind.value, repr(d.value), d.narrative])
        summary = _allocation_summary(result)
    else:
        w.writerow(["quantity", "value"])
        summary = _mc_summary(result)
    for key, value in summary:
        w.writerow(["summary", key, "" if value is None else (repr(value) if isinstance(value, float) else value)])
    return buf.getvalue()


def emit_report(result: RiskAssessment | AllocationResult | MCEstimate, format: str = "table") -> str:
    """Render a result as an aligned table, CSV, or JSON."""
    if format not in FORMATS:
        raise ValueError(f"unknown report format {format!r}; choose from {FORMATS}")
    if format == "json":
        return json.dumps(report_to_dict(result), indent=2) + "\n"
    if format == "csv":
        return _csv(result)
    if isinstance(result, RiskAssessment):
        return _assessment_table(result)
    if isinstance(result, AllocationResult):
        return _allocation_table(result)
    rows = [(k, fmt(v) if isinstance(v, float) else str(v)) for k, v in _mc_summary(result)]
    return "\n".join(_table(rows)) + "\n"
