"""Rule DSL: AST types, tokenizer, parser, canonical printer, vocabulary checks.

A rule is a disjunction of conjunctions of relational predicates over
arithmetic expressions:

    rule     = disj ;
    disj     = conj , { ( "or" | "||" ) , conj } ;
    conj     = rel , { ( "and" | "&&" ) , rel } ;
    rel      = expr , relop , expr , { relop , expr } ;   (* chain = sugar *)
    expr     = term , { ( "+" | "-" ) , term } ;
    term     = primary , { ( "*" | "/" ) , primary } ;
    primary  = NUMBER | "-" NUMBER | IDENT | "(" , disj , ")" ;
    relop    = "<" | "<=" | ">" | ">=" | "==" | "!=" ;
    IDENT    = letter-or-underscore , { letter-digit-underscore } ;
    NUMBER   = digits , [ "." , digits ] ;

Logical keywords are case-insensitive; the unicode forms for the logical and
relational operators are accepted as aliases on input. Chained comparisons
(``0 < x < 5``) are sugar for a conjunction of binary relations and are
desugared at parse time; the canonical printed form is always binary.
Precedence, loosest first: or, and, relational, additive, multiplicative.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum


class RelOp(Enum):
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    EQ = "=="
    NE = "!="


class ArithOp(Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"


#: Relational operators with a strict/non-strict counterpart.
STRICTNESS_SWAP = {RelOp.LT: RelOp.LE, RelOp.LE: RelOp.LT, RelOp.GT: RelOp.GE, RelOp.GE: RelOp.GT}

#: Mirror image of a relational operator (x op y  <=>  y mirror(op) x).
MIRROR = {
    RelOp.LT: RelOp.GT,
    RelOp.LE: RelOp.GE,
    RelOp.GT: RelOp.LT,
    RelOp.GE: RelOp.LE,
    RelOp.EQ: RelOp.EQ,
    RelOp.NE: RelOp.NE,
}

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
KEYWORDS = {"and", "or"}


class GrammarError(ValueError):
    """Structurally invalid AST construction."""


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if not IDENT_RE.match(self.name) or self.name.lower() in KEYWORDS:
            raise GrammarError(f"invalid variable name: {self.name!r}")


@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise GrammarError(f"constant must be finite, got {self.value!r}")


@dataclass(frozen=True)
class BinOp:
    op: ArithOp
    left: "Expr"
    right: "Expr"


Expr = Var | Const | BinOp


@dataclass(frozen=True)
class Relation:
    lhs: Expr
    op: RelOp
    rhs: Expr


@dataclass(frozen=True)
class Conjunct:
    relations: tuple[Relation, ...]

    def __post_init__(self):
        if not self.relations:
            raise GrammarError("conjunct needs at least one relation")


@dataclass(frozen=True)
class RuleAst:
    disjuncts: tuple[Conjunct, ...]

    def __post_init__(self):
        if not self.disjuncts:
            raise GrammarError("rule needs at least one disjunct")

    def relations(self):
        """All relations with their (disjunct, relation) positions."""
        for d, conj in enumerate(self.disjuncts):
            for j, rel in enumerate(conj.relations):
                yield (d, j), rel

    def variables(self) -> set[str]:
        names: set[str] = set()
        for _, rel in self.relations():
            names |= expr_variables(rel.lhs) | expr_variables(rel.rhs)
        return names


def expr_variables(expr: Expr) -> set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Const):
        return set()
    return expr_variables(expr.left) | expr_variables(expr.right)


def rule(*disjuncts) -> RuleAst:
    """Build a RuleAst from lists of relations (test/fixture convenience)."""
    return RuleAst(tuple(Conjunct(tuple(rels)) for rels in disjuncts))


# ---------------------------------------------------------------------------
# ODD: the declared input domain, one bounded stepped range per variable.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OddVariable:
    name: str
    min: float
    max: float
    step: float

    def __post_init__(self):
        if not IDENT_RE.match(self.name) or self.name.lower() in KEYWORDS:
            raise GrammarError(f"invalid ODD variable name: {self.name!r}")
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or self.min > self.max:
            raise GrammarError(f"bad range for {self.name}: [{self.min}, {self.max}]")
        if not (math.isfinite(self.step) and self.step > 0):
            raise GrammarError(f"step for {self.name} must be positive")

    @property
    def decimals(self) -> int:
        """Decimal places of the step; grid values are rounded to this."""
        return max(0, -Decimal(repr(self.step)).as_tuple().exponent)

    @property
    def grid_count(self) -> int:
        """Number of grid points in [min, max] at step spacing."""
        return int(math.floor((self.max - self.min) / self.step + 1e-9)) + 1

    def grid_value(self, k: int) -> float:
        return round(self.min + k * self.step, self.decimals)

    def grid_values(self) -> list[float]:
        return [self.grid_value(k) for k in range(self.grid_count)]

    def snap(self, value: float) -> float:
        k = round((value - self.min) / self.step)
        k = min(max(k, 0), self.grid_count - 1)
        return self.grid_value(k)

    def contains(self, value: float, tol: float = 1e-9) -> bool:
        return self.min - tol <= value <= self.max + tol


@dataclass(frozen=True)
class OddSpec:
    variables: tuple[OddVariable, ...]

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise GrammarError("ODD variable names must be unique")

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def get(self, name: str) -> OddVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(v.name == name for v in self.variables)

    def contains_point(self, x: dict[str, float], tol: float = 1e-9) -> bool:
        return all(v.name in x and v.contains(x[v.name], tol) for v in self.variables)


def odd_spec(variables: list[tuple[str, float, float, float]]) -> OddSpec:
    return OddSpec(tuple(OddVariable(n, lo, hi, step) for n, lo, hi, step in variables))


# ---------------------------------------------------------------------------
# Tokenizer. Total: anything unrecognizable becomes a GARBAGE token run.
# ---------------------------------------------------------------------------


class TokenKind(Enum):
    IDENT = "IDENT"
    NUMBER = "NUMBER"
    RELOP = "RELOP"
    AROP = "AROP"
    LOGOP = "LOGOP"
    LPAREN = "LPAREN"
    RPAREN = "RPAREN"
    GARBAGE = "GARBAGE"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: tuple[int, int]  # character offsets [start, end)


_WHITESPACE = " \t\r\n\f\v"
_TWO_CHAR_OPS = {"<=": TokenKind.RELOP, ">=": TokenKind.RELOP, "==": TokenKind.RELOP,
                 "!=": TokenKind.RELOP, "&&": TokenKind.LOGOP, "||": TokenKind.LOGOP}
_ONE_CHAR_OPS = {"<": TokenKind.RELOP, ">": TokenKind.RELOP, "=": TokenKind.RELOP,
                 "≤": TokenKind.RELOP, "≥": TokenKind.RELOP, "≠": TokenKind.RELOP,
                 "+": TokenKind.AROP, "-": TokenKind.AROP, "*": TokenKind.AROP, "/": TokenKind.AROP,
                 "∧": TokenKind.LOGOP, "∨": TokenKind.LOGOP,
                 "(": TokenKind.LPAREN, ")": TokenKind.RPAREN}

#: Input aliases normalized to the canonical operator spelling.
NORMALIZED_LEXEMES = {"=": "==", "≤": "<=", "≥": ">=", "≠": "!=",
                      "&&": "and", "||": "or", "∧": "and", "∨": "or"}


def _is_digit(ch: str) -> bool:
    return "0" <= ch <= "9"  # ASCII only; unicode digits are not literals


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or ("A" <= ch <= "Z") or ("a" <= ch <= "z")


def _is_ident_char(ch: str) -> bool:
    return _is_ident_start(ch) or _is_digit(ch)


def _starts_token(ch: str) -> bool:
    return (ch in _WHITESPACE or _is_digit(ch) or _is_ident_start(ch)
            or ch in _ONE_CHAR_OPS or ch in "!&|")


def tokenize(text: str) -> list[Token]:
    """Split rule text into tokens. Never fails; unknown runs become GARBAGE.

    Concatenating the lexemes and the skipped whitespace reconstructs the
    input exactly.
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in _WHITESPACE:
            i += 1
            continue
        start = i
        if text[i:i + 2] in _TWO_CHAR_OPS:
            pair = text[i:i + 2]
            tokens.append(Token(_TWO_CHAR_OPS[pair], pair, (start, start + 2)))
            i += 2
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(Token(_ONE_CHAR_OPS[ch], ch, (start, start + 1)))
            i += 1
            continue
        if _is_digit(ch):
            i += 1
            while i < n and _is_digit(text[i]):
                i += 1
            if i + 1 < n and text[i] == "." and _is_digit(text[i + 1]):
                i += 1
                while i < n and _is_digit(text[i]):
                    i += 1
            tokens.append(Token(TokenKind.NUMBER, text[start:i], (start, i)))
            continue
        if _is_ident_start(ch):
            i += 1
            while i < n and _is_ident_char(text[i]):
                i += 1
            word = text[start:i]
            kind = TokenKind.LOGOP if word.lower() in KEYWORDS else TokenKind.IDENT
            tokens.append(Token(kind, word, (start, i)))
            continue
        # Unrecognizable: swallow the whole run up to the next recognizable
        # character or whitespace.
        i += 1
        while i < n and not _starts_token(text[i]):
            i += 1
        tokens.append(Token(TokenKind.GARBAGE, text[start:i], (start, i)))
    return tokens


# ---------------------------------------------------------------------------
# Parser. Recursive descent over the token list; chains desugar to
# conjunctions; parenthesized groups may be logical or arithmetic and are
# checked for shape when the tree is assembled.
# ---------------------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, position: int, expected: set[str], token_index: int):
        super().__init__(f"{message} at position {position} (expected {', '.join(sorted(expected))})")
        self.position = position
        self.expected = expected
        self.token_index = token_index


@dataclass(frozen=True)
class _Or:
    items: tuple
    span: tuple[int, int]


@dataclass(frozen=True)
class _And:
    items: tuple
    span: tuple[int, int]


@dataclass(frozen=True)
class _Chain:
    operands: tuple  # k+1 expressions
    ops: tuple[RelOp, ...]  # k operators
    span: tuple[int, int]


class _Parser:
    def __init__(self, tokens: list[Token], text_len: int):
        self.tokens = tokens
        self.pos = 0
        self.text_len = text_len

    def _peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _here(self) -> int:
        tok = self._peek()
        return tok.span[0] if tok is not None else self.text_len

    def _behind(self) -> int:
        return self.tokens[self.pos - 1].span[1] if self.pos > 0 else 0

    def _error(self, expected: set[str]):
        tok = self._peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.text_len, expected, len(self.tokens))
        raise ParseError(f"unexpected {tok.kind.value} {tok.lexeme!r}", tok.span[0], expected, self.pos)

    def _at_logop(self, word: str) -> bool:
        tok = self._peek()
        if tok is None or tok.kind is not TokenKind.LOGOP:
            return False
        return NORMALIZED_LEXEMES.get(tok.lexeme, tok.lexeme).lower() == word

    def parse_rule(self) -> RuleAst:
        node = self.parse_or()
        if self._peek() is not None:
            self._error({"end of input", "'and'", "'or'"})
        return _shape(node)

    def parse_or(self):
        start = self._here()
        items = [self.parse_and()]
        while self._at_logop("or"):
            self.pos += 1
            items.append(self.parse_and())
        if len(items) == 1:
            return items[0]
        return _Or(tuple(items), (start, self._behind()))

    def parse_and(self):
        start = self._here()
        items = [self.parse_cmp()]
        while self._at_logop("and"):
            self.pos += 1
            items.append(self.parse_cmp())
        if len(items) == 1:
            return items[0]
        return _And(tuple(items), (start, self._behind()))

    def parse_cmp(self):
        start = self._here()
        first = self.parse_add()
        operands, ops = [first], []
        while (tok := self._peek()) is not None and tok.kind is TokenKind.RELOP:
            self.pos += 1
            ops.append(RelOp(NORMALIZED_LEXEMES.get(tok.lexeme, tok.lexeme)))
            operands.append(self.parse_add())
        if not ops:
            return first
        for operand in operands:
            self._require_expr(operand, "relational operand")
        return _Chain(tuple(operands), tuple(ops), (start, self._behind()))

    def parse_add(self):
        node = self.parse_mul()
        while (tok := self._peek()) is not None and tok.kind is TokenKind.AROP and tok.lexeme in "+-":
            self.pos += 1
            self._require_expr(node, "arithmetic operand")
            right = self.parse_mul()
            self._require_expr(right, "arithmetic operand")
            node = BinOp(ArithOp(tok.lexeme), node, right)
        return node

    def parse_mul(self):
        node = self.parse_primary()
        while (tok := self._peek()) is not None and tok.kind is TokenKind.AROP and tok.lexeme in "*/":
            self.pos += 1
            self._require_expr(node, "arithmetic operand")
            right = self.parse_primary()
            self._require_expr(right, "arithmetic operand")
            node = BinOp(ArithOp(tok.lexeme), node, right)
        return node

    def parse_primary(self):
        tok = self._peek()
        if tok is None:
            self._error({"number", "identifier", "'('"})
        if tok.kind is TokenKind.NUMBER:
            self.pos += 1
            return self._literal(tok, 1.0)
        if tok.kind is TokenKind.AROP and tok.lexeme == "-":
            nxt = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
            if nxt is not None and nxt.kind is TokenKind.NUMBER:
                self.pos += 2
                return self._literal(nxt, -1.0)
            self._error({"number"})
        if tok.kind is TokenKind.IDENT:
            self.pos += 1
            return Var(tok.lexeme)
        if tok.kind is TokenKind.LPAREN:
            self.pos += 1
            node = self.parse_or()
            closing = self._peek()
            if closing is None or closing.kind is not TokenKind.RPAREN:
                self._error({"')'"})
            self.pos += 1
            return node
        self._error({"number", "identifier", "'('"})

    def _literal(self, tok: Token, sign: float) -> Const:
        value = sign * float(tok.lexeme)
        if not math.isfinite(value):
            raise ParseError("number literal out of range", tok.span[0],
                             {"finite number"}, self.pos - 1)
        return Const(value)

    def _require_expr(self, node, context: str):
        if isinstance(node, (_Or, _And, _Chain)):
            raise ParseError(f"logical group used as {context}", node.span[0],
                             {"arithmetic expression"}, self.pos)


def _shape(node) -> RuleAst:
    """Coerce a parse tree into disjunctive-over-conjunctive rule shape."""
    disjunct_nodes = node.items if isinstance(node, _Or) else (node,)
    disjuncts = []
    for dnode in disjunct_nodes:
        parts = dnode.items if isinstance(dnode, _And) else (dnode,)
        relations: list[Relation] = []
        for part in parts:
            if isinstance(part, (_Or, _And)):
                raise ParseError("nested logical group is not a relation", part.span[0],
                                 {"relation"}, -1)
            if isinstance(part, _Chain):
                for k, op in enumerate(part.ops):
                    relations.append(Relation(part.operands[k], op, part.operands[k + 1]))
            else:
                span = dnode.span if isinstance(dnode, (_Or, _And, _Chain)) else (0, 0)
                raise ParseError("expected a relation, found a bare expression", span[0],
                                 {"relational operator"}, -1)
        disjuncts.append(Conjunct(tuple(relations)))
    return RuleAst(tuple(disjuncts))


def parse_rule(text: str) -> RuleAst:
    """Parse rule text into an AST, desugaring chained comparisons.

    Raises ParseError (with position and the expected-token set) on any
    malformed input, including garbage characters.
    """
    return parse_tokens(tokenize(text), len(text))


def parse_tokens(tokens: list[Token], text_len: int = 0) -> RuleAst:
    for idx, tok in enumerate(tokens):
        if tok.kind is TokenKind.GARBAGE:
            raise ParseError(f"unrecognized text {tok.lexeme!r}", tok.span[0], {"token"}, idx)
    return _Parser(tokens, text_len).parse_rule()


def parse_relation(text: str) -> Relation:
    """Parse a single binary relation (used to replay change-log fragments)."""
    ast = parse_rule(text)
    if len(ast.disjuncts) != 1 or len(ast.disjuncts[0].relations) != 1:
        raise ParseError("expected a single relation", 0, {"relation"}, -1)
    return ast.disjuncts[0].relations[0]


# ---------------------------------------------------------------------------
# Canonical printer.
# ---------------------------------------------------------------------------


def fmt_number(value: float) -> str:
    """Canonical decimal form: no exponent, no trailing zeros."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    text = repr(value)
    if "e" in text or "E" in text:
        text = format(Decimal(text), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"


_PREC = {ArithOp.ADD: 1, ArithOp.SUB: 1, ArithOp.MUL: 2, ArithOp.DIV: 2}


def print_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Const):
        return fmt_number(expr.value)
    prec = _PREC[expr.op]
    text = f"{print_expr(expr.left, prec)} {expr.op.value} {print_expr(expr.right, prec + 1)}"
    return f"({text})" if prec < parent_prec else text


def print_relation(rel: Relation) -> str:
    return f"({print_expr(rel.lhs)} {rel.op.value} {print_expr(rel.rhs)})"


def print_conjunct(conj: Conjunct, wrap: bool) -> str:
    text = " and ".join(print_relation(r) for r in conj.relations)
    return f"({text})" if wrap and len(conj.relations) > 1 else text


def print_rule(ast: RuleAst) -> str:
    """Deterministic canonical text: binary relations, each parenthesized."""
    many = len(ast.disjuncts) > 1
    return " or ".join(print_conjunct(c, wrap=many) for c in ast.disjuncts)


# ---------------------------------------------------------------------------
# JSON interchange form.
# ---------------------------------------------------------------------------


def expr_to_json(expr: Expr):
    if isinstance(expr, Var):
        return {"var": expr.name}
    if isinstance(expr, Const):
        return {"const": expr.value}
    return {"bin": {"op": expr.op.value, "l": expr_to_json(expr.left), "r": expr_to_json(expr.right)}}


def expr_from_json(data) -> Expr:
    if "var" in data:
        return Var(data["var"])
    if "const" in data:
        return Const(float(data["const"]))
    bin_ = data["bin"]
    return BinOp(ArithOp(bin_["op"]), expr_from_json(bin_["l"]), expr_from_json(bin_["r"]))


def ast_to_json(ast: RuleAst) -> dict:
    return {"or": [{"and": [{"lhs": expr_to_json(r.lhs), "op": r.op.value, "rhs": expr_to_json(r.rhs)}
                            for r in conj.relations]}
                   for conj in ast.disjuncts]}


def ast_from_json(data: dict) -> RuleAst:
    return RuleAst(tuple(
        Conjunct(tuple(Relation(expr_from_json(r["lhs"]), RelOp(r["op"]), expr_from_json(r["rhs"]))
                       for r in conj["and"]))
        for conj in data["or"]))


# ---------------------------------------------------------------------------
# Vocabulary checking against an ODD.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # "UnknownVariable" | "OutOfRangeBound"
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} {self.detail}"


def direct_bound(rel: Relation) -> tuple[str, RelOp, float] | None:
    """(variable, op-with-variable-on-the-left, constant) for Var-vs-Const
    relations, or None for compound shapes."""
    if isinstance(rel.lhs, Var) and isinstance(rel.rhs, Const):
        return (rel.lhs.name, rel.op, rel.rhs.value)
    if isinstance(rel.lhs, Const) and isinstance(rel.rhs, Var):
        return (rel.rhs.name, MIRROR[rel.op], rel.lhs.value)
    return None


def check_vocabulary(ast: RuleAst, odd: OddSpec) -> list[Violation]:
    """One violation per unknown variable occurrence and per constant that is
    directly compared to a variable but lies outside that variable's range.
    Compound arithmetic is not range-checked."""
    violations: list[Violation] = []
    for _, rel in ast.relations():
        for side in (rel.lhs, rel.rhs):
            for name in sorted(expr_variables(side)):
                if name not in odd:
                    violations.append(Violation("UnknownVariable", name))
        bound = direct_bound(rel)
        if bound is not None:
            name, _, value = bound
            if name in odd:
                var = odd.get(name)
                if not (var.min <= value <= var.max):
                    violations.append(Violation("OutOfRangeBound", fmt_number(value)))
    return violations


# ---------------------------------------------------------------------------
# Random rule generation (test corpus). Deterministic per seed; outputs are
# vocabulary-clean and round-trip through print/parse.
# ---------------------------------------------------------------------------

_COMPARE_OPS = [RelOp.LT, RelOp.LE, RelOp.GT, RelOp.GE, RelOp.EQ, RelOp.NE]


def _random_const(rng: random.Random, var: OddVariable) -> Const:
    return Const(var.grid_value(rng.randrange(var.grid_count)))


def _random_relation(rng: random.Random, odd: OddSpec) -> Relation:
    var = odd.variables[rng.randrange(len(odd.variables))]
    op = _COMPARE_OPS[rng.randrange(len(_COMPARE_OPS))]
    roll = rng.random()
    if roll < 0.70:
        lhs, rhs = Var(var.name), _random_const(rng, var)
    elif roll < 0.80:
        lhs, rhs = _random_const(rng, var), Var(var.name)
    elif roll < 0.90:
        other = odd.variables[rng.randrange(len(odd.variables))]
        lhs, rhs = Var(var.name), Var(other.name)
    else:
        # Compound arithmetic side; not range-checked by the vocabulary rules.
        other = odd.variables[rng.randrange(len(odd.variables))]
        aop = list(ArithOp)[rng.randrange(4)]
        lhs = BinOp(aop, Var(var.name), _random_const(rng, other))
        rhs = _random_const(rng, var)
    return Relation(lhs, op, rhs)


def random_rule(seed: int, odd: OddSpec, max_disjuncts: int, max_relations: int) -> RuleAst:
    if max_disjuncts < 1 or max_relations < 1:
        raise ValueError("limits must be >= 1")
    rng = random.Random(seed)
    disjuncts = []
    for _ in range(rng.randint(1, max_disjuncts)):
        relations = tuple(_random_relation(rng, odd) for _ in range(rng.randint(1, max_relations)))
        disjuncts.append(Conjunct(relations))
    return RuleAst(tuple(disjuncts))


#: Grammar rendering used in prompts and docs.
GRAMMAR_TEXT = """\
rule     = disj ;
disj     = conj , { "or" , conj } ;
conj     = rel , { "and" , rel } ;
rel      = expr , relop , expr ;
expr     = expr , ( "+" | "-" | "*" | "/" ) , expr | constant | variable ;
relop    = "<" | "<=" | ">" | ">=" | "==" | "!=" ;
variable = letter-or-underscore , { letter-digit-underscore } ;
constant = digits , [ "." , digits ] ;
Chained comparisons like (0 < x < 5) are accepted shorthand for
(0 < x) and (x < 5). Parentheses group."""
