"""Rule evaluation on input vectors and rule/outcome consistency accounting.

A rule carries a polarity: a pass rule asserts the Pass verdict wherever it
holds, a fail rule asserts Fail. Holding-but-wrong is Inconsistent; not
holding is Inconclusive and the observed outcome is ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .grammar import Const, Expr, Relation, RelOp, RuleAst, Var, print_relation

DEFAULT_EPS_EQ = 1e-9


class Outcome(Enum):
    PASS = "Pass"
    FAIL = "Fail"


class Polarity(Enum):
    PASS_RULE = "pass"
    FAIL_RULE = "fail"

    @property
    def verdict(self) -> Outcome:
        return Outcome.PASS if self is Polarity.PASS_RULE else Outcome.FAIL


class Consistency(Enum):
    CONSISTENT = "Consistent"
    INCONSISTENT = "Inconsistent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class LabeledRun:
    x: dict[str, float]
    y: Outcome


@dataclass(frozen=True)
class PolarizedRule:
    id: str
    polarity: Polarity
    ast: RuleAst


class UnboundVariable(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"variable {self.name!r} is not bound by the input vector"


class EmptyDataset(ValueError):
    pass


def eval_expr(expr: Expr, x: dict[str, float]) -> float:
    """Evaluate an arithmetic expression; raises ZeroDivisionError on a zero
    divisor and UnboundVariable on a missing binding."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        try:
            return x[expr.name]
        except KeyError:
            raise UnboundVariable(expr.name) from None
    left = eval_expr(expr.left, x)
    right = eval_expr(expr.right, x)
    op = expr.op.value
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if right == 0:
        raise ZeroDivisionError
    return left / right


def eval_relation(rel: Relation, x: dict[str, float], eps_eq: float = DEFAULT_EPS_EQ,
                  diagnostics: list[str] | None = None) -> bool:
    """Truth of one relation. Equality holds within eps_eq; a division by
    zero makes the relation false and records a diagnostic."""
    try:
        lhs = eval_expr(rel.lhs, x)
        rhs = eval_expr(rel.rhs, x)
    except ZeroDivisionError:
        if diagnostics is not None:
            diagnostics.append(f"division by zero in {print_relation(rel)}")
        return False
    if rel.op is RelOp.LT:
        return lhs < rhs
    if rel.op is RelOp.LE:
        return lhs <= rhs
    if rel.op is RelOp.GT:
        return lhs > rhs
    if rel.op is RelOp.GE:
        return lhs >= rhs
    if rel.op is RelOp.EQ:
        return abs(lhs - rhs) <= eps_eq
    return abs(lhs - rhs) > eps_eq  # NE


def evaluate(ast: RuleAst, x: dict[str, float], eps_eq: float = DEFAULT_EPS_EQ,
             diagnostics: list[str] | None = None) -> bool:
    """Disjunction over conjunctions of relations.

    Raises UnboundVariable if x misses a variable appearing in the rule.
    """
    return any(
        all(eval_relation(rel, x, eps_eq, diagnostics) for rel in conj.relations)
        for conj in ast.disjuncts
    )


def classify_consistency(rule: PolarizedRule, run: LabeledRun,
                         eps_eq: float = DEFAULT_EPS_EQ,
                         diagnostics: list[str] | None = None) -> Consistency:
    """Classify one run: Inconclusive when the rule does not hold; otherwise
    Consistent iff the polarity's verdict equals the observed outcome."""
    if not evaluate(rule.ast, run.x, eps_eq, diagnostics):
        return Consistency.INCONCLUSIVE
    if rule.polarity.verdict is run.y:
        return Consistency.CONSISTENT
    return Consistency.INCONSISTENT


@dataclass(frozen=True)
class DecisivenessReport:
    dg: float
    n: int
    n_mismatch: int
    mismatches: tuple[int, ...]  # run indices, in dataset order
    fully_inconclusive: bool
    diagnostics: tuple[str, ...] = field(default=())


def decisiveness(rule: PolarizedRule, dataset: list[LabeledRun],
                 eps_eq: float = DEFAULT_EPS_EQ) -> DecisivenessReport:
    """dg = 1 - n_mismatch / n over the dataset.

    A rule that never holds scores dg = 1.0 by the formula; such rules are
    flagged fully_inconclusive so reports can call out vacuous refinements.
    """
    if not dataset:
        raise EmptyDataset("decisiveness needs a non-empty dataset")
    diagnostics: list[str] = []
    mismatches = []
    definitive = 0
    for idx, run in enumerate(dataset):
        verdict = classify_consistency(rule, run, eps_eq, diagnostics)
        if verdict is not Consistency.INCONCLUSIVE:
            definitive += 1
        if verdict is Consistency.INCONSISTENT:
            mismatches.append(idx)
    n = len(dataset)
    return DecisivenessReport(
        dg=1.0 - len(mismatches) / n,
        n=n,
        n_mismatch=len(mismatches),
        mismatches=tuple(sorted(mismatches)),
        fully_inconclusive=definitive == 0,
        diagnostics=tuple(diagnostics),
    )
