"""The immediate consequence operator and its embedded-analysis helpers.

A ground atom is true in the operator's output iff some ground instance of
a program clause has that atom as head, every positive body atom true in
the input, and every negative body atom false.  Outputs are computed as
exact digit prefixes up to an explicit truncation level m; whatever lies
beyond is either certified all-false by size arithmetic or declared
unknown, never silently approximated.

Grounding depth is likewise explicit.  A conservative size-arithmetic
check runs before every application: if a clause could produce a head
within the requested prefix from an instance deeper than the grounding,
the call fails with the sufficient depth in the error, because a missed
instance would silently under-derive.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .cantor import (
    TAIL_LO,
    CantorPoint,
    DigitConfig,
    DEFAULT_CONFIG,
    embedded_tp,
)
from .errors import InsufficientDepthError
from .herbrand import (
    TAIL_FALSE,
    TAIL_UNKNOWN,
    Interpretation,
    LevelMapping,
    enumerate_base,
)
from .logic import (
    Clause,
    GroundProgram,
    Program,
    atom_size,
    clause_variables,
    count_ground_terms,
    ground_program,
    match_atom,
    term_size,
    term_variables,
)


def _clause_var_roles(c: Clause) -> tuple:
    """(head vars, vars in positive body literals, vars in negative ones)."""
    head_vars = set()
    for t in c.head.args:
        head_vars |= term_variables(t)
    pos_vars: set = set()
    neg_vars: set = set()
    for lit in c.body:
        vs: set = set()
        for t in lit.atom.args:
            vs |= term_variables(t)
        if lit.negative:
            neg_vars |= vs
        else:
            pos_vars |= vs
    return head_vars, pos_vars, neg_vars


def _true_arg_bound(true_atoms) -> int:
    """Max argument-term size over a finite set of true atoms (>= 1)."""
    best = 1
    for a in true_atoms:
        for t in a.args:
            s = term_size(t)
            if s > best:
                best = s
    return best


def _finite_trueset(i: Interpretation, lm: LevelMapping) -> Optional[frozenset]:
    if i.finitely_true():
        return i.true_atom_set(lm)
    if lm.exhausted and i.digits is not None and i.tail != TAIL_UNKNOWN:
        # every atom of the base is listed, so even an all-true tail is finite
        return frozenset(
            a for lvl, a in enumerate(lm.atoms, 1) if i.truth_level(lm, lvl)
        )
    return None


def required_depth(p: Program, i: Interpretation, m: int, lm: LevelMapping) -> int:
    """Smallest grounding depth this module will accept for apply_tp.

    Conservative size arithmetic: for every clause whose head matches an
    atom at level <= m, bound the size of every term of a potentially
    firing instance.  Head-matched variables take their matched sizes;
    variables occurring only in the body are bounded through the input's
    finite true set (positives) or a collision-avoidance count (negatives).
    Raises InsufficientDepthError with needed=None when no finite depth can
    be certified (body-only positive variables under an infinite input).
    """
    if all(
        not clause_variables(c)
        and not c.head.args
        and not any(l.atom.args for l in c.body)
        for c in p.clauses
    ):
        return 1  # propositional: every instance is the clause itself
    trueset = _finite_trueset(i, lm)
    s_true = _true_arg_bound(trueset) if trueset is not None else None
    prefix_arg_bound = max(
        (term_size(t) for a in lm.atoms[: min(m, lm.size)] for t in a.args),
        default=1,
    )
    needed = 1
    for clause in p.clauses:
        head_vars, pos_vars, neg_vars = _clause_var_roles(clause)
        body_only = (pos_vars | neg_vars) - head_vars
        for level in range(1, min(m, lm.size) + 1):
            ground_head = lm.atoms[level - 1]
            theta = match_atom(clause.head, ground_head)
            if theta is None:
                continue
            bounds = {v: term_size(t) for v, t in theta.items()}
            ok = True
            for v in body_only:
                if v in pos_vars:
                    if trueset is None:
                        raise InsufficientDepthError(needed=None, given=-1)
                    if not trueset:
                        ok = False  # positive literal unsatisfiable, clause dead
                        break
                    bounds[v] = s_true
                else:
                    if trueset is None:
                        bounds[v] = prefix_arg_bound
                    else:
                        bounds[v] = _collision_free_size(
                            p, len(trueset) * max(1, len(clause.body))
                        )
            if not ok:
                continue
            worst = max((term_size(t) for t in ground_head.args), default=1)
            for lit in clause.body:
                for t in lit.atom.args:
                    size = term_size(t)
                    for v in term_variables(t):
                        size += _occurrences(t, v) * (bounds[v] - 1)
                    worst = max(worst, size)
            needed = max(needed, worst)
    return needed


def _occurrences(t, v: str) -> int:
    from .logic import Variable

    if isinstance(t, Variable):
        return 1 if t.name == v else 0
    return sum(_occurrences(a, v) for a in t.args)


def _collision_free_size(p: Program, n_bad: int) -> int:
    """Least s with more than n_bad ground terms of size <= s."""
    s = 1
    while count_ground_terms(p.signature, s) <= n_bad:
        s += 1
        if s > 64:  # term universes grow at least linearly; this is a safety stop
            raise InsufficientDepthError(needed=None, given=-1)
    return s


def _truth_lookup(i: Interpretation, lm: LevelMapping):
    if i.true_atoms is not None:
        trues = i.true_atoms
        return lambda a: a in trues
    return lambda a: i.truth_atom(lm, a)


def _certified_all_false(
    p: Program, i: Interpretation, m: int, lm: LevelMapping
) -> bool:
    """Sound check that the operator output has no true atom beyond level m."""
    if lm.exhausted and lm.size <= m:
        return True
    trueset = _finite_trueset(i, lm)
    if trueset is None:
        return False
    s_true = _true_arg_bound(trueset)
    worst_head = 0
    for clause in p.clauses:
        head_vars, pos_vars, _ = _clause_var_roles(clause)
        if not head_vars:
            bound = atom_size(clause.head)
        elif head_vars <= pos_vars:
            if not trueset:
                continue  # needs a positive body atom, none available
            occ = sum(_occurrences(t, v) for t in clause.head.args for v in head_vars)
            bound = atom_size(clause.head) + occ * (s_true - 1)
        else:
            return False  # head variable unconstrained by positive body
        worst_head = max(worst_head, bound)
    if worst_head == 0:
        return True
    # all possible heads lie within the first m levels iff every atom of
    # that size is already enumerated there
    count = _count_atoms_up_to_size(p, worst_head)
    return count <= m


def _count_atoms_up_to_size(p: Program, max_size: int) -> int:
    from .herbrand import _atoms_of_size

    return sum(
        len(_atoms_of_size(p, s, max_term_size=max(1, s - 1)))
        for s in range(1, max_size + 1)
    )


def apply_tp(
    p: Program,
    i: Interpretation,
    m: int,
    depth: int,
    lm: Optional[LevelMapping] = None,
    ground: Optional[GroundProgram] = None,
) -> Interpretation:
    """Truth values of the operator output on levels 1..m, exact.

    Returns a digit-prefix interpretation whose tail is all-false when that
    is certifiable and unknown otherwise.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if lm is None:
        lm = enumerate_base(p, m)
    n = min(m, lm.size)
    try:
        needed = required_depth(p, i, m, lm)
    except InsufficientDepthError as e:
        raise InsufficientDepthError(needed=e.needed, given=depth) from None
    if needed > depth:
        raise InsufficientDepthError(needed=needed, given=depth)
    if ground is None or ground.depth < depth:
        ground = ground_program(p, depth)
    truth = _truth_lookup(i, lm)

    by_head: dict = {}
    for gi in ground.instances:
        lvl = lm._index.get(gi.clause.head)
        if lvl is None or lvl > n:
            continue
        by_head.setdefault(lvl, []).append(gi.clause.body)

    bits = []
    for level in range(1, n + 1):
        fired = False
        for body in by_head.get(level, ()):
            if all(
                (not truth(lit.atom)) if lit.negative else truth(lit.atom)
                for lit in body
            ):
                fired = True
                break
        bits.append(fired)

    tail = TAIL_FALSE if _certified_all_false(p, i, m, lm) else TAIL_UNKNOWN
    return Interpretation.from_prefix(bits, tail)


@dataclass(frozen=True)
class TpTrace:
    """Iterates of the operator at a fixed truncation level."""

    entries: tuple  # digit-prefix Interpretations, first is the start point
    changed: tuple  # per-step frozensets of atoms whose truth flipped
    fixpoint_reached: bool
    truncation: int


def iterate_tp(
    p: Program,
    i0: Interpretation,
    steps: int,
    m: int,
    depth: int,
    lm: Optional[LevelMapping] = None,
) -> TpTrace:
    """Iterate the operator, feeding each truncated output back in.

    Stops early once two consecutive prefixes agree on levels 1..m.  The
    feedback uses the prefix with an all-false tail, i.e. iteration is by
    truncation; for programs acyclic on the prefix this agrees with the
    untruncated iteration on all reported levels.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if lm is None:
        lm = enumerate_base(p, m)
    n = min(m, lm.size)
    ground = ground_program(p, depth)

    current = Interpretation.from_prefix(i0.truth_vector(lm, n), TAIL_FALSE)
    entries = [current]
    changed = []
    fixpoint = False
    for _ in range(steps):
        out = apply_tp(p, current, m, depth, lm=lm, ground=ground)
        nxt = Interpretation.from_prefix(out.digits, TAIL_FALSE)
        delta = frozenset(
            lm.atoms[j]
            for j in range(n)
            if nxt.digits[j] != current.digits[j]
        )
        entries.append(out)
        changed.append(delta)
        if nxt.digits == current.digits:
            fixpoint = True
            break
        current = nxt
    return TpTrace(tuple(entries), tuple(changed), fixpoint, m)


@dataclass(frozen=True)
class AcyclicityReport:
    acyclic: bool
    witness: Optional[Clause] = None

    def __bool__(self) -> bool:
        return self.acyclic


def check_acyclic(g: GroundProgram, lm: LevelMapping) -> AcyclicityReport:
    """True iff every ground instance has its head strictly above every
    body atom in the level order; the first violating clause is returned
    as witness otherwise."""
    for gi in g.instances:
        head_level = lm.level_of(gi.clause.head)
        for lit in gi.clause.body:
            if head_level <= lm.level_of(lit.atom):
                return AcyclicityReport(False, gi.clause)
    return AcyclicityReport(True, None)


@dataclass(frozen=True)
class LipschitzEstimate:
    """Empirical lower bound on the Lipschitz constant of the embedded
    operator; whether a true upper bound exists is open in general."""

    l_hat: Fraction
    pair_count: int
    max_pair: Optional[tuple]  # (CantorPoint, CantorPoint) attaining l_hat
    flip_ratios: tuple  # ((level, Fraction ratio), ...)
    note: str = "empirical lower bound on the true Lipschitz constant"

    @property
    def l_hat_float(self) -> float:
        return float(self.l_hat)


def estimate_lipschitz(
    p: Program,
    pairs: int,
    seed: int,
    m: int,
    depth: int,
    config: DigitConfig = DEFAULT_CONFIG,
) -> LipschitzEstimate:
    """Max difference quotient of the embedded operator over all
    single-digit-flip pairs at levels 1..m plus seeded random prefix
    pairs, in exact rational arithmetic on interval midpoints."""
    if pairs < 0:
        raise ValueError("pairs must be >= 0")
    lm = enumerate_base(p, m)
    n = min(m, lm.size)
    if n == 0:
        return LipschitzEstimate(Fraction(0), 0, None, ())

    value_cache: dict = {}

    def point_of(bits: int) -> CantorPoint:
        return CantorPoint.from_bits(
            ((bits >> (n - 1 - j)) & 1 for j in range(n)), TAIL_LO, config
        )

    def image_mid(bits: int) -> Fraction:
        if bits not in value_cache:
            y = embedded_tp(p, point_of(bits), m, depth, config=config, lm=lm)
            value_cache[bits] = y.midpoint()
        return value_cache[bits]

    best = Fraction(0)
    best_pair = None
    count = 0
    flip_ratios = []

    def consider(bi: int, bj: int) -> Fraction:
        nonlocal best, best_pair, count
        xi, xj = point_of(bi), point_of(bj)
        dx = abs(xi.exact_value() - xj.exact_value())
        dy = abs(image_mid(bi) - image_mid(bj))
        ratio = dy / dx
        count += 1
        if ratio > best or best_pair is None:
            best = max(best, ratio)
            best_pair = (xi, xj)
        return ratio

    zero = 0
    for level in range(1, n + 1):
        flipped = zero | (1 << (n - level))
        flip_ratios.append((level, consider(zero, flipped)))

    rng = random.Random(seed)
    if n >= 1 and pairs > 0:
        for _ in range(pairs):
            bi = rng.getrandbits(n)
            bj = rng.getrandbits(n)
            while bj == bi:
                bj = rng.getrandbits(n)
            consider(bi, bj)

    return LipschitzEstimate(best, count, best_pair, tuple(flip_ratios))
