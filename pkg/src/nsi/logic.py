"""Normal logic programs: terms, clauses, parsing, and bounded grounding.

A program is a set of rules ``head :- body.`` with one head atom and a body
of positive and ``not``-negated atoms.  Terms are variables (uppercase) or
compounds (lowercase functor, possibly 0-ary).  Numerals are admitted as
0-ary functors so programs like ``even(0).`` read naturally.

Grounding is depth-bounded by term *size* (total symbol count), which is
monotone under subterms and induces the stratification the enumeration of
the ground-atom base relies on.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Optional

from .errors import ArityConflictError, ProgramSyntaxError, ResourceLimitError

DEFAULT_GROUND_CAP = 10**6

_RESERVED_CONSTANT = "a"


# ---------------------------------------------------------------------------
# Syntax trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple = ()

    def __str__(self) -> str:
        if not self.args:
            return self.functor
        return f"{self.functor}({','.join(str(a) for a in self.args)})"


Term = Variable | Compound


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple = ()

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negative: bool = False

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negative else str(self.atom)


@dataclass(frozen=True)
class Clause:
    head: Atom
    body: tuple = ()

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(b) for b in self.body)}."


@dataclass(frozen=True)
class Signature:
    """Functor and predicate arities occurring in a program.

    ``functors`` always contains at least one constant; if the source text
    has none, a reserved constant is injected so the ground-term universe
    is nonempty.
    """

    functors: tuple  # sorted ((name, arity), ...)
    predicates: tuple  # sorted ((name, arity), ...)

    def functor_arity(self, name: str) -> Optional[int]:
        for n, k in self.functors:
            if n == name:
                return k
        return None

    @property
    def constants(self) -> tuple:
        return tuple(n for n, k in self.functors if k == 0)

    @property
    def max_functor_arity(self) -> int:
        return max((k for _, k in self.functors), default=0)


@dataclass(frozen=True)
class Program:
    clauses: tuple
    signature: Signature = field(compare=False)

    def __str__(self) -> str:
        return "\n".join(str(c) for c in self.clauses)


def term_size(t: Term) -> int:
    """Total symbol-occurrence count; the grounding and enumeration measure."""
    if isinstance(t, Variable):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


def atom_size(a: Atom) -> int:
    return 1 + sum(term_size(t) for t in a.args)


def term_variables(t: Term) -> set:
    if isinstance(t, Variable):
        return {t.name}
    out: set = set()
    for a in t.args:
        out |= term_variables(a)
    return out


def clause_variables(c: Clause) -> set:
    out = set()
    for t in c.head.args:
        out |= term_variables(t)
    for lit in c.body:
        for t in lit.atom.args:
            out |= term_variables(t)
    return out


def is_ground_term(t: Term) -> bool:
    if isinstance(t, Variable):
        return False
    return all(is_ground_term(a) for a in t.args)


def is_ground_atom(a: Atom) -> bool:
    return all(is_ground_term(t) for t in a.args)


def is_ground_clause(c: Clause) -> bool:
    return is_ground_atom(c.head) and all(is_ground_atom(l.atom) for l in c.body)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<if>:-)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
  | (?P<dot>\.)
  | (?P<uident>[A-Z][A-Za-z0-9_]*)
  | (?P<lident>[a-z][A-Za-z0-9_]*|[0-9]+)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ProgramSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ProgramSyntaxError(
                f"expected {what}, found {tok.text!r}" if tok.text else f"expected {what}",
                tok.line,
                tok.col,
            )
        self.pos += 1
        return tok

    def parse_program(self) -> list:
        clauses = []
        while self.peek().kind != "eof":
            clauses.append(self.parse_clause())
        return clauses

    def parse_clause(self) -> Clause:
        head = self.parse_atom()
        body: list = []
        if self.peek().kind == "if":
            self.pos += 1
            body.append(self.parse_literal())
            while self.peek().kind == "comma":
                self.pos += 1
                body.append(self.parse_literal())
        self.take("dot", "'.'")
        return Clause(head, tuple(body))

    def parse_literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "lident" and tok.text == "not":
            self.pos += 1
            return Literal(self.parse_atom(), negative=True)
        return Literal(self.parse_atom(), negative=False)

    def parse_atom(self) -> Atom:
        name = self.take("lident", "a predicate name")
        args: list = []
        if self.peek().kind == "lparen":
            self.pos += 1
            args.append(self.parse_term())
            while self.peek().kind == "comma":
                self.pos += 1
                args.append(self.parse_term())
            self.take("rparen", "')'")
        return Atom(name.text, tuple(args))

    def parse_term(self) -> Term:
        tok = self.peek()
        if tok.kind == "uident":
            self.pos += 1
            return Variable(tok.text)
        name = self.take("lident", "a term")
        args: list = []
        if self.peek().kind == "lparen":
            self.pos += 1
            args.append(self.parse_term())
            while self.peek().kind == "comma":
                self.pos += 1
                args.append(self.parse_term())
            self.take("rparen", "')'")
        return Compound(name.text, tuple(args))


def _collect_signature(clauses: Iterable[Clause]) -> Signature:
    functors: dict = {}
    predicates: dict = {}

    def note(table: dict, name: str, arity: int, kind: str) -> None:
        seen = table.get(name)
        if seen is None:
            table[name] = arity
        elif seen != arity:
            raise ArityConflictError(f"{kind} {name}", arity, seen)

    def walk_term(t: Term) -> None:
        if isinstance(t, Compound):
            note(functors, t.functor, len(t.args), "functor")
            for a in t.args:
                walk_term(a)

    for clause in clauses:
        for atom in [clause.head] + [l.atom for l in clause.body]:
            note(predicates, atom.predicate, len(atom.args), "predicate")
            for t in atom.args:
                walk_term(t)

    if not any(k == 0 for k in functors.values()):
        name = _RESERVED_CONSTANT
        while name in functors:
            name += "_"
        functors[name] = 0

    return Signature(
        functors=tuple(sorted(functors.items())),
        predicates=tuple(sorted(predicates.items())),
    )


def parse_program(text: str) -> Program:
    """Parse program text; raises ProgramSyntaxError / ArityConflictError."""
    clauses = _Parser(_tokenize(text)).parse_program()
    return Program(tuple(clauses), _collect_signature(clauses))


def program_from_clauses(clauses: Iterable[Clause]) -> Program:
    clauses = tuple(clauses)
    return Program(clauses, _collect_signature(clauses))


def is_propositional(p: Program) -> bool:
    """True iff every predicate is 0-ary and no variable occurs."""
    return all(k == 0 for _, k in p.signature.predicates) and not any(
        clause_variables(c) for c in p.clauses
    )


# ---------------------------------------------------------------------------
# Ground terms and grounding
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _terms_by_size(signature: Signature, max_size: int) -> tuple:
    """tuple indexed by size 1..max_size of tuples of ground terms, each
    level sorted by canonical string."""
    levels: list = [()]  # index 0 unused
    for size in range(1, max_size + 1):
        here = []
        for name, arity in signature.functors:
            if arity == 0:
                if size == 1:
                    here.append(Compound(name))
                continue
            budget = size - 1
            if budget < arity:
                continue
            for parts in _compositions(budget, arity):
                for combo in itertools.product(*(levels[s] for s in parts)):
                    here.append(Compound(name, combo))
        here.sort(key=str)
        levels.append(tuple(here))
    return tuple(levels)


def _compositions(total: int, parts: int) -> Iterator[tuple]:
    """All tuples of `parts` positive integers summing to `total`, ascending."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def ground_terms(signature: Signature, max_size: int, cap: int = DEFAULT_GROUND_CAP) -> list:
    """All ground terms of size <= max_size in (size, string) order."""
    out: list = []
    levels = _terms_by_size(signature, max_size)
    for size in range(1, max_size + 1):
        out.extend(levels[size])
        if len(out) > cap:
            raise ResourceLimitError(
                f"ground-term enumeration exceeded cap of {cap} at size {size}"
            )
    return out


def count_ground_terms(signature: Signature, max_size: int) -> int:
    return sum(len(l) for l in _terms_by_size(signature, max_size)[1:])


def _substitute_term(t: Term, sub: dict) -> Term:
    if isinstance(t, Variable):
        return sub[t.name]
    if not t.args:
        return t
    return Compound(t.functor, tuple(_substitute_term(a, sub) for a in t.args))


def substitute_atom(a: Atom, sub: dict) -> Atom:
    if not a.args:
        return a
    return Atom(a.predicate, tuple(_substitute_term(t, sub) for t in a.args))


def substitute_clause(c: Clause, sub: dict) -> Clause:
    return Clause(
        substitute_atom(c.head, sub),
        tuple(Literal(substitute_atom(l.atom, sub), l.negative) for l in c.body),
    )


def match_atom(pattern: Atom, ground: Atom) -> Optional[dict]:
    """One-way matching of a pattern atom against a ground atom."""
    if pattern.predicate != ground.predicate or len(pattern.args) != len(ground.args):
        return None
    sub: dict = {}

    def go(pat: Term, g: Term) -> bool:
        if isinstance(pat, Variable):
            bound = sub.get(pat.name)
            if bound is None:
                sub[pat.name] = g
                return True
            return bound == g
        if isinstance(g, Variable):
            return False
        if pat.functor != g.functor or len(pat.args) != len(g.args):
            return False
        return all(go(p, q) for p, q in zip(pat.args, g.args))

    for p, g in zip(pattern.args, ground.args):
        if not go(p, g):
            return None
    return sub


@dataclass(frozen=True)
class GroundInstance:
    clause_index: int
    substitution: tuple  # ((var, term), ...) sorted by var name
    clause: Clause  # fully ground


@dataclass(frozen=True)
class GroundProgram:
    program: Program
    depth: int
    instances: tuple

    def __iter__(self) -> Iterator[GroundInstance]:
        return iter(self.instances)

    def __len__(self) -> int:
        return len(self.instances)


def _clause_term_sizes_ok(c: Clause, depth: int) -> bool:
    for atom in [c.head] + [l.atom for l in c.body]:
        for t in atom.args:
            if term_size(t) > depth:
                return False
    return True


def _variable_size_bounds(c: Clause, depth: int) -> dict:
    """Largest assignment size per variable that can keep every argument
    term within `depth`; used only to prune, the exact filter runs after
    substitution."""
    bounds: dict = {v: depth for v in clause_variables(c)}

    def occurrences(t: Term, counts: dict) -> None:
        if isinstance(t, Variable):
            counts[t.name] = counts.get(t.name, 0) + 1
        else:
            for a in t.args:
                occurrences(a, counts)

    for atom in [c.head] + [l.atom for l in c.body]:
        for t in atom.args:
            counts: dict = {}
            occurrences(t, counts)
            base = term_size(t)
            for v, occ in counts.items():
                # size(t sub) = base + sum occ_v * (size_v - 1); other vars >= size 1
                allowed = (depth - base) // occ + 1
                bounds[v] = min(bounds[v], allowed)
    return bounds


def ground_program(p: Program, depth: int, cap: int = DEFAULT_GROUND_CAP) -> GroundProgram:
    """All ground instances of p whose every term has size <= depth.

    Instances come out sorted by (clause index, substitution), where the
    substitution key is the tuple of assigned-term strings in sorted
    variable-name order.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    instances: list = []
    terms_cache = ground_terms(p.signature, depth, cap)
    by_max: dict = {}

    def terms_up_to(size: int) -> list:
        if size not in by_max:
            by_max[size] = [t for t in terms_cache if term_size(t) <= size]
        return by_max[size]

    for idx, clause in enumerate(p.clauses):
        variables = sorted(clause_variables(clause))
        if not variables:
            if _clause_term_sizes_ok(clause, depth):
                instances.append(GroundInstance(idx, (), clause))
            continue
        bounds = _variable_size_bounds(clause, depth)
        pools = [terms_up_to(bounds[v]) for v in variables]
        total = 1
        for pool in pools:
            total *= len(pool)
        if total > cap:
            raise ResourceLimitError(
                f"clause {idx} would enumerate {total} candidate instances (cap {cap})"
            )
        for combo in itertools.product(*pools):
            sub = dict(zip(variables, combo))
            inst = substitute_clause(clause, sub)
            if _clause_term_sizes_ok(inst, depth):
                instances.append(
                    GroundInstance(idx, tuple(sorted(sub.items())), inst)
                )
        if len(instances) > cap:
            raise ResourceLimitError(f"grounding exceeded cap of {cap} instances")

    instances.sort(key=lambda gi: (gi.clause_index, tuple(str(t) for _, t in gi.substitution)))
    return GroundProgram(p, depth, tuple(instances))
