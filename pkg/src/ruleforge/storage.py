"""File formats and canonical (reproducible) serialization.

* Dataset CSV: feature columns plus a final ``outcome`` column of
  Pass/Fail, UTF-8, comma separated. Numbers are written in canonical
  decimal form so store(load(path)) is byte-identical for canonical files.
* Rules JSON: a bare list of {"id", "polarity": "pass"|"fail", "text"}.
* Engine-owned JSON artifacts (oracle config, evidence, outcome, metrics)
  carry a schema_version header.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .counterfactual import CounterfactualPair, EvidenceFile
from .generation import Edit, EditKind
from .grammar import OddSpec, OddVariable, ParseError, fmt_number, parse_rule, print_rule
from .metrics import MetricsReport
from .scenario import OracleConfig
from .semantics import LabeledRun, Outcome, PolarizedRule, Polarity
from .validation import (ContradictionStatus, ContradictionSummary, RefinementOutcome,
                         ValidationReport)

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Malformed input file; the message names the offending location."""


def _fail(path, message: str):
    raise FormatError(f"{path}: {message}")


# ---------------------------------------------------------------------------
# Dataset CSV.
# ---------------------------------------------------------------------------


def load_dataset(path: str | Path) -> list[LabeledRun]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            _fail(path, "empty dataset file")
        if not header or header[-1] != "outcome":
            _fail(path, 'last column must be "outcome"')
        features = header[:-1]
        if not features:
            _fail(path, "no feature columns")
        runs = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                _fail(path, f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                x = {name: float(cell) for name, cell in zip(features, row)}
            except ValueError:
                _fail(path, f"line {lineno}: non-numeric feature value")
            label = row[-1]
            if label not in (Outcome.PASS.value, Outcome.FAIL.value):
                _fail(path, f"line {lineno}: outcome must be Pass or Fail, got {label!r}")
            runs.append(LabeledRun(x=x, y=Outcome(label)))
    if not runs:
        _fail(path, "dataset has no runs")
    return runs


def dataset_bytes(runs: list[LabeledRun]) -> bytes:
    features = list(runs[0].x.keys())
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(features + ["outcome"])
    for run in runs:
        writer.writerow([fmt_number(run.x[name]) for name in features] + [run.y.value])
    return buffer.getvalue().encode("utf-8")


def store_dataset(path: str | Path, runs: list[LabeledRun]) -> None:
    Path(path).write_bytes(dataset_bytes(runs))


# ---------------------------------------------------------------------------
# JSON helpers.
# ---------------------------------------------------------------------------


def _json_bytes(payload) -> bytes:
    return (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _write_json(path: str | Path, payload) -> None:
    Path(path).write_bytes(_json_bytes(payload))


def _read_json(path: str | Path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        _fail(path, f"invalid JSON: {exc}")


# ---------------------------------------------------------------------------
# Rules file.
# ---------------------------------------------------------------------------


def load_rules(path: str | Path) -> list[PolarizedRule]:
    data = _read_json(path)
    if not isinstance(data, list):
        _fail(path, "rules file must be a JSON list")
    rules = []
    seen_ids = set()
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            _fail(path, f"rule {i}: expected an object")
        for key in ("id", "polarity", "text"):
            if key not in entry:
                _fail(path, f"rule {i}: missing field {key!r}")
        try:
            polarity = Polarity(entry["polarity"])
        except ValueError:
            _fail(path, f"rule {i}: field 'polarity' must be \"pass\" or \"fail\", "
                        f"got {entry['polarity']!r}")
        try:
            ast = parse_rule(entry["text"])
        except ParseError as exc:
            _fail(path, f"rule {i} ({entry['id']}): {exc}")
        if entry["id"] in seen_ids:
            _fail(path, f"rule {i}: duplicate id {entry['id']!r}")
        seen_ids.add(entry["id"])
        rules.append(PolarizedRule(id=str(entry["id"]), polarity=polarity, ast=ast))
    if not rules:
        _fail(path, "rules file is empty")
    return rules


def store_rules(path: str | Path, rules: list[PolarizedRule]) -> None:
    _write_json(path, [
        {"id": r.id, "polarity": r.polarity.value, "text": print_rule(r.ast)}
        for r in rules
    ])


# ---------------------------------------------------------------------------
# ODD / oracle config.
# ---------------------------------------------------------------------------


def odd_to_json(odd: OddSpec) -> dict:
    return {"variables": [
        {"name": v.name, "min": v.min, "max": v.max, "step": v.step}
        for v in odd.variables
    ]}


def odd_from_json(data, path="<odd>") -> OddSpec:
    if not isinstance(data, dict) or "variables" not in data:
        _fail(path, 'expected an object with a "variables" list')
    try:
        return OddSpec(tuple(
            OddVariable(v["name"], float(v["min"]), float(v["max"]), float(v["step"]))
            for v in data["variables"]
        ))
    except (KeyError, TypeError, ValueError) as exc:
        _fail(path, f"bad variable entry: {exc}")


def load_odd(path: str | Path) -> OddSpec:
    data = _read_json(path)
    if isinstance(data, dict) and "odd" in data:
        data = data["odd"]
    return odd_from_json(data, path)


def store_odd(path: str | Path, odd: OddSpec) -> None:
    _write_json(path, {"schema_version": SCHEMA_VERSION, **odd_to_json(odd)})


def store_oracle_config(path: str | Path, config: OracleConfig) -> None:
    _write_json(path, {
        "schema_version": SCHEMA_VERSION,
        "odd": odd_to_json(config.odd),
        "safe_region": print_rule(config.safe_region),
        "seed": config.seed,
    })


def load_oracle_config(path: str | Path) -> OracleConfig:
    data = _read_json(path)
    for key in ("odd", "safe_region", "seed"):
        if key not in data:
            _fail(path, f"missing field {key!r}")
    odd = odd_from_json(data["odd"], path)
    try:
        safe_region = parse_rule(data["safe_region"])
    except ParseError as exc:
        _fail(path, f"safe_region: {exc}")
    return OracleConfig(odd=odd, safe_region=safe_region, seed=int(data["seed"]))


# ---------------------------------------------------------------------------
# Evidence file.
# ---------------------------------------------------------------------------


def evidence_to_json(evidence: EvidenceFile) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "rule_id": evidence.rule_id,
        "rule_text": evidence.rule_text,
        "dataset_ref": evidence.dataset_ref,
        "pairs": [
            {
                "x": pair.x,
                "y": pair.y.value,
                "x_cf": pair.x_cf,
                "y_cf": pair.y_cf.value,
                "delta": pair.delta,
                "l1": pair.l1,
                "l1_steps": pair.l1_steps,
            }
            for pair in evidence.pairs
        ],
        "unresolved": list(evidence.unresolved),
    }


def evidence_from_json(data, path="<evidence>") -> EvidenceFile:
    try:
        pairs = tuple(
            CounterfactualPair(
                x={k: float(v) for k, v in p["x"].items()},
                y=Outcome(p["y"]),
                x_cf={k: float(v) for k, v in p["x_cf"].items()},
                y_cf=Outcome(p["y_cf"]),
                delta={k: float(v) for k, v in p["delta"].items()},
                l1=float(p["l1"]),
                l1_steps=int(p["l1_steps"]),
            )
            for p in data["pairs"]
        )
        return EvidenceFile(
            rule_id=data["rule_id"],
            rule_text=data["rule_text"],
            dataset_ref=data["dataset_ref"],
            pairs=pairs,
            unresolved=tuple(int(i) for i in data["unresolved"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        _fail(path, f"bad evidence file: {exc}")


def store_evidence(path: str | Path, evidence: EvidenceFile) -> None:
    _write_json(path, evidence_to_json(evidence))


def load_evidence(path: str | Path) -> EvidenceFile:
    return evidence_from_json(_read_json(path), path)


# ---------------------------------------------------------------------------
# Refinement outcome and validation reports.
# ---------------------------------------------------------------------------


def _report_to_json(report: ValidationReport) -> dict:
    contradiction = None
    if report.contradiction is not None:
        contradiction = {
            "status": report.contradiction.status.value,
            "witness": report.contradiction.witness,
            "opposing_rule_id": report.contradiction.opposing_rule_id,
        }
    return {
        "attempt": report.attempt,
        "candidate_text": report.candidate_text,
        "contradiction": contradiction,
        "preserved": {"broken_rule_ids": list(report.broken_rule_ids)},
        "resolution": {
            "mismatch_before": report.mismatch_before,
            "mismatch_after": report.mismatch_after,
        },
        "new_inconsistencies": report.new_inconsistencies,
        "accepted": report.accepted,
        "failure_summary": report.failure_summary,
        "diagnostics": list(report.diagnostics),
    }


def _report_from_json(data) -> ValidationReport:
    contradiction = None
    if data.get("contradiction"):
        contradiction = ContradictionSummary(
            status=ContradictionStatus(data["contradiction"]["status"]),
            witness=data["contradiction"]["witness"],
            opposing_rule_id=data["contradiction"]["opposing_rule_id"],
        )
    return ValidationReport(
        attempt=data["attempt"],
        candidate_text=data.get("candidate_text"),
        contradiction=contradiction,
        broken_rule_ids=tuple(data["preserved"]["broken_rule_ids"]),
        new_inconsistencies=data["new_inconsistencies"],
        mismatch_before=data["resolution"]["mismatch_before"],
        mismatch_after=data["resolution"]["mismatch_after"],
        accepted=data["accepted"],
        failure_summary=data.get("failure_summary"),
        diagnostics=tuple(data.get("diagnostics", ())),
    )


def outcome_to_json(outcome: RefinementOutcome, rule_id: str,
                    dg_before: float | None = None,
                    dg_after: float | None = None) -> dict:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "rule_id": rule_id,
        "refined_text": print_rule(outcome.refined),
        "change_log": [
            {"kind": e.kind.value, "path": list(e.path), "before": e.before, "after": e.after}
            for e in outcome.change_log
        ],
        "explanation": outcome.explanation,
        "attempts": outcome.attempts,
        "reports": [_report_to_json(r) for r in outcome.reports],
        "evidence": evidence_to_json(outcome.evidence),
    }
    if dg_before is not None:
        payload["dg_before"] = dg_before
    if dg_after is not None:
        payload["dg_after"] = dg_after
    return payload


def store_outcome(path: str | Path, outcome: RefinementOutcome, rule_id: str,
                  dg_before: float | None = None, dg_after: float | None = None) -> None:
    _write_json(path, outcome_to_json(outcome, rule_id, dg_before, dg_after))


def load_outcome(path: str | Path) -> RefinementOutcome:
    data = _read_json(path)
    try:
        return RefinementOutcome(
            refined=parse_rule(data["refined_text"]),
            change_log=tuple(
                Edit(kind=EditKind(e["kind"]), path=tuple(e["path"]),
                     before=e["before"], after=e["after"])
                for e in data["change_log"]
            ),
            explanation=data["explanation"],
            attempts=data["attempts"],
            reports=tuple(_report_from_json(r) for r in data["reports"]),
            evidence=evidence_from_json(data["evidence"], path),
        )
    except (KeyError, TypeError, ValueError, ParseError) as exc:
        if isinstance(exc, FormatError):
            raise
        _fail(path, f"bad outcome file: {exc}")


# ---------------------------------------------------------------------------
# Metrics report.
# ---------------------------------------------------------------------------


def metrics_to_json(report: MetricsReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "dg_before": report.dg_before,
        "dg_after": report.dg_after,
        "dg_gain": report.dg_gain,
        "sv": {
            "score": report.sv.sv,
            "n_invalid": report.sv.n_invalid,
            "n_pred": report.sv.n_pred,
            "invalid_predicates": list(report.sv.invalid_predicates),
        },
        "gc": {"score": report.gc.gc, "n_viol": report.gc.n_viol, "n_tok": report.gc.n_tok},
        "cm": {"score": report.cm.cm, "band": report.cm.band,
               "edit_stats": report.cm.edit_stats},
    }


def store_metrics(path: str | Path, report: MetricsReport) -> None:
    _write_json(path, metrics_to_json(report))
