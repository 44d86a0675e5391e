"""Command-line interface.

Exit codes: 0 success, 1 verdict FAIL, 2 validation/parse/usage error,
3 infeasible tolerance, 4 internal error.  The default ``--format`` can be
set with the ``MITIGATION_SIL_FORMAT`` environment variable.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import allocate as alloc
from . import expectation, risk
from .errors import InfeasibleTargetError, ScenarioValidationError
from .model import Scenario, validate_scenario
from .scenario_io import FORMATS, emit_report, fmt, parse

ENV_FORMAT = "MITIGATION_SIL_FORMAT"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


@dataclass(frozen=True)
class CommandOutcome:
    exit_code: int
    output: str
    diagnostics: str


class UsageError(Exception):
    pass


def _load(path: str) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return validate_scenario(parse(text))


def _vector(scenario: Scenario, inline: str | None, keyed: str | None, what: str) -> list[float] | None:
    """Resolve a per-subsystem vector from inline text and/or a keyed JSON file.

    ``inline`` may itself be a path to a JSON file.  Keyed values override
    inline ones.
    """
    ids = scenario.subsystem_ids
    values: list[float | None] = [None] * len(ids)
    if inline is not None and Path(inline).is_file():
        inline, keyed = None, keyed or inline
    if inline is not None:
        try:
            parts = [float(x) for x in inline.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"--{what} must be comma-separated numbers or a JSON file") from None
        if len(parts) != len(ids):
            raise UsageError(f"--{what} needs {len(ids)} values (one per subsystem), got {len(parts)}")
        values = list(parts)
    if keyed is not None:
        try:
            data = json.loads(Path(keyed).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read {what} file {keyed}: {exc}") from None
        if isinstance(data, dict) and isinstance(data.get(what), dict):
            data = data[what]
        if not isinstance(data, dict):
            raise UsageError(f"{what} file must map subsystem ids to numbers")
        unknown = set(data) - set(ids)
        if unknown:
            raise UsageError(f"{what} file names unknown subsystems: {sorted(unknown)}")
        for key, value in data.items():
            values[ids.index(key)] = float(value)
    if inline is None and keyed is None:
        return None
    missing = [sid for sid, v in zip(ids, values) if v is None]
    if missing:
        raise UsageError(f"no {what} value for subsystems {missing}")
    return values  # type: ignore[return-value]


def _model_expectations(scenario: Scenario) -> list[float]:
    return [expectation.expect_failure(s.model) for s in scenario.subsystems]


def _cmd_validate(a, out) -> int:
    try:
        text = Path(a.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {a.file}: {exc.strerror}") from None
    try:
        scenario = validate_scenario(parse(text), normalize=a.normalize)
    except ScenarioValidationError as exc:
        if a.format == "json":
            out.write(json.dumps({"valid": False, "issues": [
                {"code": i.code, "path": i.path, "message": i.message} for i in exc.issues
            ]}, indent=2) + "\n")
        else:
            out.write(f"INVALID: {len(exc.issues)} violation(s)\n")
            out.writelines(f"  {i}\n" for i in exc.issues)
        return EXIT_INVALID
    summary = {
        "valid": True,
        "name": scenario.name,
        "subsystems": len(scenario.subsystems),
        "functions": len(scenario.functions),
        "warnings": list(scenario.warnings),
    }
    if a.format == "json":
        out.write(json.dumps(summary, indent=2) + "\n")
    else:
        out.write(f"VALID: {scenario.name} ({summary['subsystems']} subsystems, {summary['functions']} functions)\n")
        out.writelines(f"  warning: {w}\n" for w in scenario.warnings)
    return EXIT_OK


def _cmd_tolerable(a, out) -> int:
    s = _load(a.file)
    cm = s.consequence
    r_bar = risk.tolerable_risk(cm)
    ec_bar = risk.tolerable_expected_consequence(s, r_bar)
    data = {
        "tolerable_risk": r_bar,
        "tolerable_risk_source": "override" if cm.tolerable_risk_override is not None else "segments",
        "segment_tolerable_risk": risk.segment_tolerable_risk(cm),
        "tolerable_expected_consequence": ec_bar,
        "required_success": alloc.required_success_target(s, ec_bar),
        "event_rate": s.event_rate,
        "unit": cm.unit,
    }
    u = f" {cm.unit}" if cm.unit else ""
    if a.format == "json":
        out.write(json.dumps(data, indent=2) + "\n")
    elif a.format == "csv":
        out.write("quantity,value\n")
        out.writelines(f"{k},{'' if v is None else v}\n" for k, v in data.items())
    else:
        out.write(f"r-bar: {fmt(r_bar)}{u}/yr ({data['tolerable_risk_source']})\n")
        if data["segment_tolerable_risk"] is not None and cm.tolerable_risk_override is not None:
            out.write(f"r-bar from segments: {fmt(data['segment_tolerable_risk'])}{u}/yr\n")
        out.write(f"E[C]-bar: {fmt(ec_bar)}{u}\n")
        out.write(f"Required weighted success: {fmt(data['required_success'])}\n")
    return EXIT_OK


def _cmd_evaluate(a, out) -> int:
    s = _load(a.file)
    eq = _vector(s, a.targets, a.targets_file, "targets")
    if eq is None:
        eq = _model_expectations(s)
    result = risk.assess(s, eq)
    out.write(emit_report(result, a.format))
    return EXIT_OK if result.verdict is risk.Verdict.PASS else EXIT_FAIL


def _cmd_allocate(a, out) -> int:
    s = _load(a.file)
    ratios = _vector(s, a.ratios, a.ratios_file, "ratios")
    result = alloc.allocate(s, ratios, tol=a.tol)
    out.write(emit_report(result, a.format))
    return EXIT_OK if result.verdict is risk.Verdict.PASS else EXIT_FAIL


def _cmd_mc(a, out) -> int:
    s = _load(a.file)
    eq = _vector(s, a.targets, a.targets_file, "targets")
    models = [sub.model for sub in s.subsystems]
    if eq is not None:
        models = [expectation.retarget(m, v) for m, v in zip(models, eq)]
    analytic = risk.expected_consequence([expectation.expect_failure(m) for m in models], s)
    est = expectation.mc_expected_consequence(s, a.samples, a.seed, models=models, workers=a.workers)
    diff = est.mean - analytic
    z = diff / est.stderr if est.stderr > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
    data = {
        "type": "monte_carlo",
        "analytic_expected_consequence": analytic,
        "mc_mean": est.mean,
        "mc_stderr": est.stderr,
        "z_score": z,
        "samples": est.samples,
        "seed": est.seed,
        "targets": dict(zip(s.subsystem_ids, (expectation.expect_failure(m) for m in models))),
    }
    if a.format == "json":
        out.write(json.dumps(data, indent=2) + "\n")
    elif a.format == "csv":
        out.write("quantity,value\n")
        out.writelines(f"{k},{v!r}\n" for k, v in data.items() if k != "targets")
    else:
        u = f" {s.consequence.unit}" if s.consequence.unit else ""
        out.write(f"Analytic E[C]: {fmt(analytic)}{u}\n")
        out.write(f"MC mean: {fmt(est.mean)}{u} +/- {fmt(est.stderr)} (1 s.e.)\n")
        out.write(f"z-score: {z:.3f}\n")
        out.write(f"Samples: {est.samples}\nSeed: {est.seed}\n")
    return EXIT_OK


def _cmd_sil(a, out) -> int:
    s = _load(a.file)
    r_bar = risk.tolerable_risk(s.consequence)
    value = alloc.rrf(s, r_bar)
    band = alloc.sil_from_rrf(value)
    data = {
        "unmitigated_risk": alloc.unmitigated_risk(s),
        "tolerable_risk": r_bar,
        "rrf": value,
        "sil": band.label,
        "note": None,
    }
    if len(s.functions) > 1:
        # whole mitigation system treated as absent; shared subsystems make a
        # per-function reading ambiguous
        data["note"] = "RRF assumes every mitigation function is absent"
    if a.format == "json":
        out.write(json.dumps(data, indent=2) + "\n")
    elif a.format == "csv":
        out.write("quantity,value\n")
        out.writelines(f"{k},{'' if v is None else v}\n" for k, v in data.items())
    else:
        u = f" {s.consequence.unit}" if s.consequence.unit else ""
        out.write(f"r_max: {fmt(data['unmitigated_risk'])}{u}/yr\n")
        out.write(f"r-bar: {fmt(r_bar)}{u}/yr\n")
        out.write(f"RRF: {fmt(value)}\n")
        out.write(f"SIL: {band.label}\n")
        if data["note"]:
            out.write(f"Note: {data['note']}\n")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    default_format = os.environ.get(ENV_FORMAT, "table")
    if default_format not in FORMATS:
        default_format = "table"
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=default_format)

    parser = _Parser(
        prog="mitigation-sil",
        description="Allocate expected-degree-of-failure targets to mitigation subsystems.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="parse and validate a scenario file")
    p.add_argument("file")
    p.add_argument("--normalize", action="store_true", help="rescale contributions that do not sum to 1")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("tolerable", parents=[common], help="tolerable risk and expected consequence")
    p.add_argument("file")
    p.set_defaults(func=_cmd_tolerable)

    p = sub.add_parser("evaluate", parents=[common], help="assess a vector of expected failure degrees")
    p.add_argument("file")
    p.add_argument("--targets", help="comma-separated E[q] values, or a JSON file keyed by subsystem id")
    p.add_argument("--targets-file", help="JSON file keyed by subsystem id (wins over --targets)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("allocate", parents=[common], help="solve for E[q] targets along a ratio vector")
    p.add_argument("file")
    p.add_argument("--ratios", help="comma-separated ratios, or a JSON file keyed by subsystem id")
    p.add_argument("--ratios-file", help="JSON file keyed by subsystem id (wins over --ratios)")
    p.add_argument("--tol", type=float, default=alloc.BISECTION_TOLERANCE)
    p.set_defaults(func=_cmd_allocate)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo check of the analytic E[C]")
    p.add_argument("file")
    p.add_argument("--targets", help="comma-separated E[q] values the models are re-parametrised to")
    p.add_argument("--targets-file")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("sil", parents=[common], help="risk reduction factor and SIL band")
    p.add_argument("file")
    p.set_defaults(func=_cmd_sil)
    return parser


def run(args: Sequence[str]) -> CommandOutcome:
    out, err = io.StringIO(), io.StringIO()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            ns = build_parser().parse_args(list(args))
        code = ns.func(ns, out)
    except SystemExit as exc:  # --help
        code = EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    except InfeasibleTargetError as exc:
        err.write(f"infeasible: {exc}\n")
        code = EXIT_INFEASIBLE
    except (UsageError, ValueError, KeyError) as exc:
        # parse, validation and other input errors all derive from these
        err.write(f"error: {exc}\n")
        code = EXIT_INVALID
    except Exception as exc:
        err.write(f"internal error: {type(exc).__name__}: {exc}\n")
        code = EXIT_INTERNAL
    return CommandOutcome(code, out.getvalue(), err.getvalue())


def main(argv: Sequence[str] | None = None) -> None:
    outcome = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(outcome.output)
    sys.stderr.write(outcome.diagnostics)
    sys.exit(outcome.exit_code)


if __name__ == "__main__":
    main()
