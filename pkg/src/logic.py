"""PATL / PATL* syntax: AST, concrete-syntax parser, printer, desugaring and fragment check.

Concrete syntax (precedence from tightest to loosest: unary, U, &, |, ->;
U and -> associate to the right):

    p   true   false   !f   f & g   f | g   f -> g
    X f   F f   G f   f U g
    <<a,b>>{>=1/2} f     strategic modality (<<>> empty, <<*>> grand coalition)
    [[a]]{<1/4} f        dual modality

`&`, `->` and `false` are sugar and never appear in the AST.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from .errors import BindingError, FormulaSyntaxError
from .utils import format_rational

GRAND_COALITION = "*"

PATL_GRAMMAR = r"""
    ?start: implication

    ?implication: disjunction
                | disjunction "->" implication      -> implies

    ?disjunction: conjunction
                | disjunction "|" conjunction       -> or_

    ?conjunction: until
                | conjunction "&" until             -> and_

    ?until: unary
          | unary "U" until                         -> until_

    ?unary: "!" unary                               -> negation
          | "X" unary                               -> next
          | "F" unary                               -> eventually
          | "G" unary                               -> always
          | "<<" coalition ">>" bound unary         -> strategic
          | "[[" coalition "]]" bound unary         -> dual
          | primary

    ?primary: NAME                                  -> atom
            | "true"                                -> top
            | "false"                               -> bottom
            | "(" implication ")"

    coalition: "*"                                  -> grand
             | AGENT ("," AGENT)*                   -> agents
             |                                      -> nobody

    bound: "{" COMPARISON RATIONAL "}"

    COMPARISON: ">=" | "<=" | ">" | "<"
    RATIONAL: /\d+(\s*\/\s*\d+)?/
    AGENT: /[A-Za-z0-9_]+/
    NAME: /[A-Za-z_][A-Za-z0-9_]*/

    %import common.WS
    %ignore WS
"""


class Comparison(enum.Enum):
    GE = ">="
    GT = ">"
    LE = "<="
    LT = "<"

    def holds(self, value, threshold):
        if self is Comparison.GE:
            return value >= threshold
        if self is Comparison.GT:
            return value > threshold
        if self is Comparison.LE:
            return value <= threshold
        return value < threshold

    def mirror(self):
        return _MIRROR[self]

    @property
    def mode(self):
        """Which adversary extremum decides the comparison: the worst case for the coalition."""
        return "min" if self in (Comparison.GE, Comparison.GT) else "max"


_MIRROR = {
    Comparison.GE: Comparison.LE,
    Comparison.LE: Comparison.GE,
    Comparison.GT: Comparison.LT,
    Comparison.LT: Comparison.GT,
}


class Formula:
    """Base class of all AST nodes (state and path formulas alike)."""

    __slots__ = ()

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Strategic(Formula):
    coalition: tuple
    cmp: Comparison
    threshold: Fraction
    path: Formula


@dataclass(frozen=True)
class Dual(Formula):
    coalition: tuple
    cmp: Comparison
    threshold: Fraction
    path: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Finally(Formula):
    operand: Formula


@dataclass(frozen=True)
class Globally(Formula):
    operand: Formula


TEMPORAL = (Next, Until, Finally, Globally)
MODALITIES = (Strategic, Dual)


def conj(left, right):
    return Not(Or(Not(left), Not(right)))


def implies(left, right):
    return Or(Not(left), right)


@v_args(inline=True)
class _AstBuilder(Transformer):
    def atom(self, name):
        return Atom(str(name))

    def top(self):
        return Top()

    def bottom(self):
        return Not(Top())

    def negation(self, operand):
        return Not(operand)

    def implies(self, left, right):
        return implies(left, right)

    def or_(self, left, right):
        return Or(left, right)

    def and_(self, left, right):
        return conj(left, right)

    def until_(self, left, right):
        return Until(left, right)

    def next(self, operand):
        return Next(operand)

    def eventually(self, operand):
        return Finally(operand)

    def always(self, operand):
        return Globally(operand)

    def grand(self):
        return (GRAND_COALITION,)

    def agents(self, *names):
        return tuple(sorted({str(n) for n in names if n is not None}))

    def nobody(self):
        return ()

    def bound(self, cmp, rational):
        num, _, den = str(rational).replace(" ", "").partition("/")
        if den and int(den) == 0:
            raise FormulaSyntaxError("zero denominator in threshold", rational.start_pos)
        d = Fraction(int(num), int(den) if den else 1)
        if d > 1:
            raise FormulaSyntaxError(f"threshold {format_rational(d)} outside [0, 1]", rational.start_pos)
        return Comparison(str(cmp)), d

    def strategic(self, coalition, bound, path):
        return Strategic(coalition, bound[0], bound[1], path)

    def dual(self, coalition, bound, path):
        return Dual(coalition, bound[0], bound[1], path)


_parser = Lark(PATL_GRAMMAR, parser="lalr")


def parse_formula(text):
    """Parse concrete syntax into an AST; raises FormulaSyntaxError with a position."""
    if not text or not text.strip():
        raise FormulaSyntaxError("empty formula", 0)
    try:
        tree = _parser.parse(text)
    except UnexpectedInput as e:
        pos = getattr(e, "pos_in_stream", None)
        if pos is None or pos < 0:
            pos = len(text)
        raise FormulaSyntaxError(f"syntax error in {text!r}", pos) from e
    try:
        return _AstBuilder().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, FormulaSyntaxError):
            raise e.orig_exc from None
        raise


_LINE_RE = re.compile(r"^\s*([A-Za-z0-9_\[\]=,.*+-]+)\s*:\s*(.+?)\s*$")


def parse_formula_file(path):
    """Read `name: formula` lines (or bare formulas); `#` starts a comment."""
    formulas = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        match = _LINE_RE.match(line)
        if match:
            name, text = match.group(1), match.group(2)
        else:
            name, text = f"formula_{lineno}", line
        formulas.append((name, parse_formula(text)))
    return formulas


def _coalition_text(coalition):
    return ",".join(coalition)


def format_formula(f):
    """Canonical fully-parenthesised text; parse_formula inverts it."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Not):
        return "!" + format_formula(f.operand)
    if isinstance(f, Or):
        return f"({format_formula(f.left)} | {format_formula(f.right)})"
    if isinstance(f, Until):
        return f"({format_formula(f.left)} U {format_formula(f.right)})"
    if isinstance(f, Next):
        return "X " + format_formula(f.operand)
    if isinstance(f, Finally):
        return "F " + format_formula(f.operand)
    if isinstance(f, Globally):
        return "G " + format_formula(f.operand)
    if isinstance(f, MODALITIES):
        left, right = ("<<", ">>") if isinstance(f, Strategic) else ("[[", "]]")
        bound = f"{{{f.cmp.value}{format_rational(f.threshold)}}}"
        return f"{left}{_coalition_text(f.coalition)}{right}{bound} {format_formula(f.path)}"
    raise TypeError(f"not a formula: {f!r}")


# --- desugaring ---------------------------------------------------------------


def _negate(f):
    return f.operand if isinstance(f, Not) else Not(f)


def _modality(coalition, cmp, threshold, path):
    # mu(!psi) = 1 - mu(psi): path negations move into the bound
    while isinstance(path, Not):
        path = path.operand
        cmp = cmp.mirror()
        threshold = 1 - threshold
    return Strategic(coalition, cmp, threshold, path)


def desugar(f):
    """Rewrite F, G, dual modalities and path negations into Atom/Not/Or/Strategic(Next|Until)."""
    if isinstance(f, (Atom, Top)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.operand))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, Next):
        return Next(desugar(f.operand))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right))
    if isinstance(f, Finally):
        return Until(Top(), desugar(f.operand))
    if isinstance(f, Globally):
        return Not(Until(Top(), _negate(desugar(f.operand))))
    if isinstance(f, Strategic):
        return _modality(f.coalition, f.cmp, f.threshold, desugar(f.path))
    if isinstance(f, Dual):
        return Not(_modality(f.coalition, f.cmp.mirror(), 1 - f.threshold, desugar(f.path)))
    raise TypeError(f"not a formula: {f!r}")


# --- fragment classification ---------------------------------------------------


def _has_free_temporal(f):
    """True if a temporal operator occurs outside every strategic modality."""
    if isinstance(f, TEMPORAL):
        return True
    if isinstance(f, Not):
        return _has_free_temporal(f.operand)
    if isinstance(f, Or):
        return _has_free_temporal(f.left) or _has_free_temporal(f.right)
    return False


def _operand_diagnostic(f):
    if _has_free_temporal(f):
        return f"nested temporal operator: {format_formula(f)}"
    return _state_diagnostic(f)


def _state_diagnostic(f):
    if isinstance(f, (Atom, Top)):
        return None
    if isinstance(f, Not):
        return _state_diagnostic(f.operand)
    if isinstance(f, Or):
        return _state_diagnostic(f.left) or _state_diagnostic(f.right)
    if isinstance(f, TEMPORAL):
        return f"temporal operator outside a strategic modality: {format_formula(f)}"
    if isinstance(f, Dual):
        return f"dual modality left after desugaring: {format_formula(f)}"
    if isinstance(f, Strategic):
        path = f.path
        if isinstance(path, Next):
            return _operand_diagnostic(path.operand)
        if isinstance(path, Until):
            return _operand_diagnostic(path.left) or _operand_diagnostic(path.right)
        if isinstance(path, (Finally, Globally)):
            return f"F/G left after desugaring: {format_formula(path)}"
        if isinstance(path, (Not, Or)) and _has_free_temporal(path):
            return f"boolean combination of path formulas: {format_formula(path)}"
        return f"strategic modality over a state formula: {format_formula(f)}"
    raise TypeError(f"not a formula: {f!r}")


def is_patl(f):
    """Return (True, None) if f is in PATL, else (False, diagnostic naming the offending subterm)."""
    diagnostic = _state_diagnostic(f)
    return diagnostic is None, diagnostic


# --- binding and traversal ---------------------------------------------------------


def bind_formula(f, cgs):
    """Expand `*` to all agents and check every atom and agent against the CGS."""
    if isinstance(f, Atom):
        if f.name not in cgs.atoms:
            raise BindingError(f"unknown atom {f.name!r}")
        return f
    if isinstance(f, Top):
        return f
    if isinstance(f, (Not, Next, Finally, Globally)):
        return type(f)(bind_formula(f.operand, cgs))
    if isinstance(f, (Or, Until)):
        return type(f)(bind_formula(f.left, cgs), bind_formula(f.right, cgs))
    if isinstance(f, MODALITIES):
        if f.coalition == (GRAND_COALITION,):
            coalition = tuple(sorted(cgs.agents))
        else:
            unknown = [a for a in f.coalition if a not in cgs.agents]
            if unknown:
                raise BindingError(f"unknown agent(s) {', '.join(map(repr, unknown))} in {format_formula(f)}")
            coalition = f.coalition
        return type(f)(coalition, f.cmp, f.threshold, bind_formula(f.path, cgs))
    raise TypeError(f"not a formula: {f!r}")


def state_subformulas(f):
    """State subformulas of a PATL formula, children before parents, without repeats."""
    ordered = []
    seen = set()

    def visit(g):
        if isinstance(g, Not):
            visit(g.operand)
        elif isinstance(g, Or):
            visit(g.left)
            visit(g.right)
        elif isinstance(g, Strategic):
            path = g.path
            if isinstance(path, Next):
                visit(path.operand)
            elif isinstance(path, Until):
                visit(path.left)
                visit(path.right)
        if g not in seen:
            seen.add(g)
            ordered.append(g)

    visit(f)
    return ordered
