"""Candidate acceptance gates and the bounded refine-validate loop.

A candidate replaces its target only after it clears, in order: the
vocabulary whitelist, satisfiability of overlap with every opposite-polarity
rule (no point in the domain may trigger a pass rule and a fail rule at
once), preservation of historical rules' consistency, and strict reduction
of the target's mismatch count without introducing new inconsistencies.
Overlap checking is decided over the bounded domain box: a concrete witness
(dataset points first, then the step grid, then seeded grid sampling) flags
a contradiction; recursive interval-arithmetic subdivision proves clearance;
anything undecided within budget stays Unknown and is treated as a
rejection.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum

from .counterfactual import EvidenceFile, Oracle, SearchLimits, build_evidence
from .generation import Edit, GenerationFailure, RefinementContext, generate_candidate
from .grammar import (Const, Expr, GRAMMAR_TEXT, OddSpec, Relation, RelOp, RuleAst, Var,
                      check_vocabulary, print_rule)
from .semantics import (Consistency, DEFAULT_EPS_EQ, LabeledRun, PolarizedRule,
                        classify_consistency, decisiveness, evaluate)


class ContradictionStatus(Enum):
    CLEAR = "Clear"
    FLAGGED = "Flagged"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class ContradictionBudget:
    grid_cap: int = 100_000  # max deterministic grid probes
    subdivision_depth: int = 12
    samples: int = 10_000
    seed: int = 0


@dataclass(frozen=True)
class ContradictionResult:
    opposing_rule_id: str
    status: ContradictionStatus
    witness: dict[str, float] | None = None


class TargetNotInRuleset(ValueError):
    pass


# ---------------------------------------------------------------------------
# Interval arithmetic over a box: three-valued truth of rules.
# ---------------------------------------------------------------------------

_FULL_LINE = (-math.inf, math.inf, True)


def _interval(expr: Expr, box: dict[str, tuple[float, float]]) -> tuple[float, float, bool]:
    """(lo, hi, tainted): bounds of the expression over the box. tainted
    means a division by zero is possible inside, so no truth value may be
    concluded from the bounds."""
    if isinstance(expr, Const):
        return (expr.value, expr.value, False)
    if isinstance(expr, Var):
        lo, hi = box[expr.name]
        return (lo, hi, False)
    llo, lhi, ltaint = _interval(expr.left, box)
    rlo, rhi, rtaint = _interval(expr.right, box)
    if ltaint or rtaint:
        return _FULL_LINE
    op = expr.op.value
    if op == "+":
        return (llo + rlo, lhi + rhi, False)
    if op == "-":
        return (llo - rhi, lhi - rlo, False)
    if op == "*":
        products = [_safe_mul(a, b) for a in (llo, lhi) for b in (rlo, rhi)]
        return (min(products), max(products), False)
    if rlo <= 0 <= rhi:
        return _FULL_LINE
    quotients = [a / b for a in (llo, lhi) for b in (rlo, rhi)]
    return (min(quotients), max(quotients), False)


def _safe_mul(a: float, b: float) -> float:
    if a == 0 or b == 0:
        return 0.0
    return a * b


def _relation_truth(rel: Relation, box, eps_eq: float) -> bool | None:
    llo, lhi, ltaint = _interval(rel.lhs, box)
    rlo, rhi, rtaint = _interval(rel.rhs, box)
    if ltaint or rtaint:
        return None
    lo, hi = llo - rhi, lhi - rlo  # bounds of lhs - rhs
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return None
    if rel.op is RelOp.LT:
        return True if hi < 0 else (False if lo >= 0 else None)
    if rel.op is RelOp.LE:
        return True if hi <= 0 else (False if lo > 0 else None)
    if rel.op is RelOp.GT:
        return True if lo > 0 else (False if hi <= 0 else None)
    if rel.op is RelOp.GE:
        return True if lo >= 0 else (False if hi < 0 else None)
    if rel.op is RelOp.EQ:
        return True if (-eps_eq <= lo and hi <= eps_eq) else (False if (lo > eps_eq or hi < -eps_eq) else None)
    # NE
    inner = True if (-eps_eq <= lo and hi <= eps_eq) else (False if (lo > eps_eq or hi < -eps_eq) else None)
    return None if inner is None else not inner


def _and3(values) -> bool | None:
    result: bool | None = True
    for v in values:
        if v is False:
            return False
        if v is None:
            result = None
    return result


def _or3(values) -> bool | None:
    result: bool | None = False
    for v in values:
        if v is True:
            return True
        if v is None:
            result = None
    return result


def _rule_truth(ast: RuleAst, box, eps_eq: float) -> bool | None:
    return _or3(_and3(_relation_truth(r, box, eps_eq) for r in conj.relations)
                for conj in ast.disjuncts)


def _grid_point_in_box(box, odd: OddSpec) -> dict[str, float] | None:
    point = {}
    for v in odd.variables:
        lo, hi = box[v.name]
        k_lo = max(0, math.ceil((lo - v.min) / v.step - 1e-9))
        k_hi = min(v.grid_count - 1, math.floor((hi - v.min) / v.step + 1e-9))
        if k_lo > k_hi:
            return None
        point[v.name] = v.grid_value(k_lo)
    return point


def _satisfies_both(a: RuleAst, b: RuleAst, x: dict[str, float], eps_eq: float) -> bool:
    return evaluate(a, x, eps_eq) and evaluate(b, x, eps_eq)


def _refute(a: RuleAst, b: RuleAst, box, odd: OddSpec, depth: int, eps_eq: float):
    """'refuted' | ('witness', point) | 'unknown' over the box."""
    truth = _and3((_rule_truth(a, box, eps_eq), _rule_truth(b, box, eps_eq)))
    if truth is False:
        return "refuted"
    if truth is True:
        point = _grid_point_in_box(box, odd)
        if point is not None and _satisfies_both(a, b, point, eps_eq):
            return ("witness", point)
        return "unknown"  # satisfiable off-grid; nothing reportable
    if depth <= 0:
        return "unknown"
    name, (lo, hi) = max(box.items(), key=lambda kv: kv[1][1] - kv[1][0])
    if hi - lo <= 0:
        return "unknown"
    mid = (lo + hi) / 2
    results = []
    for sub in ((lo, mid), (mid, hi)):
        child = dict(box)
        child[name] = sub
        results.append(_refute(a, b, child, odd, depth - 1, eps_eq))
    for r in results:
        if isinstance(r, tuple):
            return r
    if all(r == "refuted" for r in results):
        return "refuted"
    return "unknown"


def _grid_strides(odd: OddSpec, cap: int) -> list[int]:
    counts = [v.grid_count for v in odd.variables]
    total = math.prod(counts)
    if total <= cap:
        return [1] * len(counts)
    per_dim = max(1, int(cap ** (1.0 / len(counts))))
    return [max(1, math.ceil(c / per_dim)) for c in counts]


def _coarse_grid(odd: OddSpec, cap: int):
    strides = _grid_strides(odd, cap)
    axes = [[v.grid_value(k) for k in range(0, v.grid_count, stride)]
            for v, stride in zip(odd.variables, strides)]

    def walk(i, binding):
        if i == len(axes):
            yield dict(binding)
            return
        name = odd.variables[i].name
        for value in axes[i]:
            binding[name] = value
            yield from walk(i + 1, binding)

    yield from walk(0, {})


def check_contradiction(candidate: PolarizedRule, opposing: list[PolarizedRule],
                        odd: OddSpec, budget: ContradictionBudget = ContradictionBudget(),
                        dataset: list[LabeledRun] | None = None,
                        eps_eq: float = DEFAULT_EPS_EQ) -> list[ContradictionResult]:
    """Per opposing rule: Flagged with a grid witness where both rules hold,
    Clear when interval subdivision refutes joint satisfiability over the
    whole domain box, Unknown otherwise."""
    results = []
    for other in opposing:
        if other.polarity is candidate.polarity:
            raise ValueError(f"rule {other.id!r} has the same polarity as the candidate")
        results.append(ContradictionResult(other.id, *_decide_pair(
            candidate.ast, other.ast, odd, budget, dataset, eps_eq)))
    return results


def _decide_pair(a: RuleAst, b: RuleAst, odd: OddSpec, budget: ContradictionBudget,
                 dataset, eps_eq) -> tuple[ContradictionStatus, dict[str, float] | None]:
    for run in dataset or []:
        if _satisfies_both(a, b, run.x, eps_eq):
            return (ContradictionStatus.FLAGGED, dict(run.x))
    for point in _coarse_grid(odd, budget.grid_cap):
        if _satisfies_both(a, b, point, eps_eq):
            return (ContradictionStatus.FLAGGED, point)
    rng = random.Random(budget.seed)
    for _ in range(budget.samples):
        point = {v.name: v.grid_value(rng.randrange(v.grid_count)) for v in odd.variables}
        if _satisfies_both(a, b, point, eps_eq):
            return (ContradictionStatus.FLAGGED, point)
    box = {v.name: (v.min, v.max) for v in odd.variables}
    outcome = _refute(a, b, box, odd, budget.subdivision_depth, eps_eq)
    if outcome == "refuted":
        return (ContradictionStatus.CLEAR, None)
    if isinstance(outcome, tuple):
        return (ContradictionStatus.FLAGGED, outcome[1])
    return (ContradictionStatus.UNKNOWN, None)


# ---------------------------------------------------------------------------
# Preservation and resolution checks.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreservedReport:
    broken_rule_ids: tuple[str, ...]
    new_inconsistency_indices: tuple[int, ...]

    @property
    def new_inconsistencies(self) -> int:
        return len(self.new_inconsistency_indices)


def check_preserved_consistency(candidate: PolarizedRule, ruleset: list[PolarizedRule],
                                dataset: list[LabeledRun],
                                eps_eq: float = DEFAULT_EPS_EQ) -> PreservedReport:
    """Re-classify every historical rule with the candidate substituted for
    its target (matched by id). Rules classify runs independently of one
    another, so breakage cannot arise here; the recomputation documents
    that, and the report carries the runs where the candidate is
    inconsistent although the original rule was not."""
    target = next((r for r in ruleset if r.id == candidate.id), None)
    if target is None:
        raise TargetNotInRuleset(f"no rule with id {candidate.id!r} in the rule set")
    broken: list[str] = []
    for rule in ruleset:
        if rule.id == candidate.id:
            continue
        for run in dataset:
            before = classify_consistency(rule, run, eps_eq)
            after = classify_consistency(rule, run, eps_eq)  # independent of the swap
            if before is Consistency.CONSISTENT and after is Consistency.INCONSISTENT:
                broken.append(rule.id)
                break
    new_indices = tuple(
        idx for idx, run in enumerate(dataset)
        if classify_consistency(candidate, run, eps_eq) is Consistency.INCONSISTENT
        and classify_consistency(target, run, eps_eq) is not Consistency.INCONSISTENT
    )
    return PreservedReport(broken_rule_ids=tuple(broken),
                           new_inconsistency_indices=new_indices)


@dataclass(frozen=True)
class ResolutionReport:
    mismatch_before: int
    mismatch_after: int


def check_target_resolution(candidate: PolarizedRule, target: PolarizedRule,
                            dataset: list[LabeledRun],
                            eps_eq: float = DEFAULT_EPS_EQ) -> ResolutionReport:
    return ResolutionReport(
        mismatch_before=decisiveness(target, dataset, eps_eq).n_mismatch,
        mismatch_after=decisiveness(candidate, dataset, eps_eq).n_mismatch,
    )


# ---------------------------------------------------------------------------
# The refinement loop.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContradictionSummary:
    status: ContradictionStatus
    witness: dict[str, float] | None = None
    opposing_rule_id: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    attempt: int
    candidate_text: str | None
    contradiction: ContradictionSummary | None
    broken_rule_ids: tuple[str, ...]
    new_inconsistencies: int
    mismatch_before: int | None
    mismatch_after: int | None
    accepted: bool
    failure_summary: str | None
    diagnostics: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class RefinementOutcome:
    refined: RuleAst
    change_log: tuple[Edit, ...]
    explanation: str
    attempts: int
    reports: tuple[ValidationReport, ...]
    evidence: EvidenceFile


class Exhausted(Exception):
    def __init__(self, reports: tuple[ValidationReport, ...]):
        super().__init__(f"no candidate accepted in {len(reports)} attempts")
        self.reports = reports


DEFAULT_MAX_ATTEMPTS = 5


def refine_loop(target: PolarizedRule, ruleset: list[PolarizedRule],
                dataset: list[LabeledRun], oracle: Oracle, odd: OddSpec, generator,
                max_attempts: int = DEFAULT_MAX_ATTEMPTS, *,
                eps_eq: float = DEFAULT_EPS_EQ,
                limits: SearchLimits = SearchLimits(),
                budget: ContradictionBudget = ContradictionBudget(),
                grammar_doc: str = GRAMMAR_TEXT) -> RefinementOutcome:
    """Generate-validate loop: evidence is built once, failed attempts feed
    their failure summaries back into the next prompt, and the first
    candidate to clear every gate is returned. Unknown contradiction status
    counts as a rejection. Raises Exhausted after max_attempts rejections.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    evidence = build_evidence(target, dataset, oracle, odd, limits, eps_eq=eps_eq)
    historical = tuple(r for r in ruleset if r.id != target.id)
    opposing = [r for r in historical if r.polarity is not target.polarity]
    base_mismatch = decisiveness(target, dataset, eps_eq).n_mismatch
    reports: list[ValidationReport] = []
    summaries: list[str] = []

    def reject(attempt: int, summary: str, **fields) -> None:
        reports.append(ValidationReport(
            attempt=attempt,
            candidate_text=fields.get("candidate_text"),
            contradiction=fields.get("contradiction"),
            broken_rule_ids=fields.get("broken_rule_ids", ()),
            new_inconsistencies=fields.get("new_inconsistencies", 0),
            mismatch_before=fields.get("mismatch_before"),
            mismatch_after=fields.get("mismatch_after"),
            accepted=False,
            failure_summary=summary,
            diagnostics=fields.get("diagnostics", ()),
        ))
        summaries.append(f"attempt {attempt}: {summary}")

    for attempt in range(1, max_attempts + 1):
        ctx = RefinementContext(
            grammar_doc=grammar_doc,
            target=target,
            historical=historical,
            evidence=evidence,
            failure_summary="\n".join(summaries) if summaries else None,
        )
        try:
            candidate = replace(generate_candidate(generator, ctx), attempt=attempt)
        except GenerationFailure as exc:
            reject(attempt, exc.summary)
            continue
        candidate_text = print_rule(candidate.ast)
        violations = check_vocabulary(candidate.ast, odd)
        if violations:
            reject(attempt, "; ".join(str(v) for v in violations),
                   candidate_text=candidate_text)
            continue
        as_rule = PolarizedRule(target.id, target.polarity, candidate.ast)
        contradiction = ContradictionSummary(ContradictionStatus.CLEAR)
        contra_failure = None
        for result in check_contradiction(as_rule, opposing, odd, budget, dataset, eps_eq):
            if result.status is not ContradictionStatus.CLEAR:
                contradiction = ContradictionSummary(result.status, result.witness,
                                                     result.opposing_rule_id)
                contra_failure = (f"contradiction {result.status.value} against rule "
                                  f"{result.opposing_rule_id}"
                                  + (f" at {result.witness}" if result.witness else ""))
                break
        if contra_failure:
            reject(attempt, contra_failure, candidate_text=candidate_text,
                   contradiction=contradiction)
            continue
        preserved = check_preserved_consistency(as_rule, list(ruleset), dataset, eps_eq)
        if preserved.broken_rule_ids:
            reject(attempt, f"breaks historical rules: {', '.join(preserved.broken_rule_ids)}",
                   candidate_text=candidate_text, contradiction=contradiction,
                   broken_rule_ids=preserved.broken_rule_ids,
                   new_inconsistencies=preserved.new_inconsistencies)
            continue
        diagnostics: list[str] = []
        after_report = decisiveness(as_rule, dataset, eps_eq)
        diagnostics.extend(after_report.diagnostics)
        resolution = ResolutionReport(base_mismatch, after_report.n_mismatch)
        if resolution.mismatch_after >= resolution.mismatch_before:
            reject(attempt,
                   f"does not reduce mismatches ({resolution.mismatch_before} -> "
                   f"{resolution.mismatch_after})",
                   candidate_text=candidate_text, contradiction=contradiction,
                   mismatch_before=resolution.mismatch_before,
                   mismatch_after=resolution.mismatch_after,
                   new_inconsistencies=preserved.new_inconsistencies,
                   diagnostics=tuple(diagnostics))
            continue
        if preserved.new_inconsistencies:
            reject(attempt,
                   f"introduces {preserved.new_inconsistencies} new inconsistencies "
                   f"at runs {list(preserved.new_inconsistency_indices)}",
                   candidate_text=candidate_text, contradiction=contradiction,
                   mismatch_before=resolution.mismatch_before,
                   mismatch_after=resolution.mismatch_after,
                   new_inconsistencies=preserved.new_inconsistencies,
                   diagnostics=tuple(diagnostics))
            continue
        reports.append(ValidationReport(
            attempt=attempt,
            candidate_text=candidate_text,
            contradiction=contradiction,
            broken_rule_ids=(),
            new_inconsistencies=0,
            mismatch_before=resolution.mismatch_before,
            mismatch_after=resolution.mismatch_after,
            accepted=True,
            failure_summary=None,
            diagnostics=tuple(diagnostics),
        ))
        return RefinementOutcome(
            refined=candidate.ast,
            change_log=tuple(candidate.change_log),
            explanation=candidate.explanation,
            attempts=attempt,
            reports=tuple(reports),
            evidence=evidence,
        )
    raise Exhausted(tuple(reports))
