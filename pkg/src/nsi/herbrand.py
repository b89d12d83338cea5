"""Ground-atom enumeration and interpretations.

The ground atoms of a program are enumerated in a fixed canonical order:
ascending atom size (predicate symbol plus argument term sizes), ties
broken by canonical string.  The position of an atom in that order is its
*level*; levels are 1-based and stable under extension, so every number
computed downstream is reproducible.

An interpretation assigns truth values to ground atoms.  Two shapes are
supported: a finite set of true atoms (everything else false), and an
explicit truth prefix for levels 1..k with a declared tail policy for the
rest.  ``unknown`` tails arise as outputs of truncated operator
applications; consulting a level under an unknown tail is an error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import (
    OutOfPrefixError,
    ResourceLimitError,
    UnknownSymbolError,
    UnknownTailError,
)
from .logic import (
    Atom,
    Compound,
    Program,
    _compositions,
    _terms_by_size,
    atom_size,
    is_ground_atom,
)

DEFAULT_ATOM_CAP = 10**6

TAIL_FALSE = "false"
TAIL_TRUE = "true"
TAIL_UNKNOWN = "unknown"


@dataclass(frozen=True)
class LevelMapping:
    """The first ``size`` ground atoms in canonical order, atom i at level i."""

    program: Program = field(compare=False)
    atoms: tuple = ()
    exhausted: bool = False  # True iff the base is finite and fully listed

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {a: i + 1 for i, a in enumerate(self.atoms)}
        )

    @classmethod
    def from_atoms(
        cls, program: Program, atoms: Iterable[Atom], exhausted: bool = False
    ) -> "LevelMapping":
        """Alternative enumeration with the same downstream interface; the
        atom list must be duplicate-free and ground."""
        atoms = tuple(atoms)
        if len(set(atoms)) != len(atoms):
            raise ValueError("enumeration must be duplicate-free")
        for a in atoms:
            if not is_ground_atom(a):
                raise ValueError(f"enumeration entries must be ground, got {a}")
        return cls(program, atoms, exhausted)

    @property
    def size(self) -> int:
        return len(self.atoms)

    def atom(self, level: int) -> Atom:
        if not 1 <= level <= self.size:
            if self.exhausted and level > self.size:
                raise OutOfPrefixError(
                    f"level {level} beyond the finite base of {self.size} atoms"
                )
            raise OutOfPrefixError(f"level {level} beyond enumerated prefix of {self.size}")
        return self.atoms[level - 1]

    def level_of(self, a: Atom) -> int:
        lvl = self._index.get(a)
        if lvl is not None:
            return lvl
        self._check_symbols(a)
        if self.exhausted:
            raise UnknownSymbolError(f"{a} is not a ground atom of this base")
        raise OutOfPrefixError(f"{a} lies beyond the enumerated prefix of {self.size}")

    def find(self, a: Atom) -> Optional[int]:
        """Level if enumerated, None if legal but beyond the prefix."""
        lvl = self._index.get(a)
        if lvl is not None:
            return lvl
        self._check_symbols(a)
        if self.exhausted:
            raise UnknownSymbolError(f"{a} is not a ground atom of this base")
        return None

    def _check_symbols(self, a: Atom) -> None:
        sig = self.program.signature
        if not is_ground_atom(a):
            raise UnknownSymbolError(f"{a} is not ground")
        if (a.predicate, len(a.args)) not in sig.predicates:
            raise UnknownSymbolError(f"unknown predicate {a.predicate}/{len(a.args)}")

        def walk(t: Compound) -> None:
            if sig.functor_arity(t.functor) != len(t.args):
                raise UnknownSymbolError(f"unknown functor {t.functor}/{len(t.args)}")
            for s in t.args:
                walk(s)

        for t in a.args:
            walk(t)


def _atoms_of_size(p: Program, size: int, max_term_size: int) -> list:
    levels = _terms_by_size(p.signature, max_term_size)
    out = []
    for name, arity in p.signature.predicates:
        if arity == 0:
            if size == 1:
                out.append(Atom(name))
            continue
        budget = size - 1
        if budget < arity:
            continue
        for parts in _compositions(budget, arity):
            for combo in itertools.product(*(levels[s] for s in parts)):
                out.append(Atom(name, combo))
    out.sort(key=str)
    return out


def enumerate_base(p: Program, n: int, cap: int = DEFAULT_ATOM_CAP) -> LevelMapping:
    """First n ground atoms in canonical (size, string) order.

    If the base is finite and smaller than n, the full base is returned and
    the mapping is marked exhausted.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sig = p.signature
    finite = sig.max_functor_arity == 0
    max_pred_arity = max((k for _, k in sig.predicates), default=0)
    atoms: list = []
    generated = 0
    size = 0
    while len(atoms) < n:
        size += 1
        if finite and size > 1 + max_pred_arity:
            return LevelMapping(p, tuple(atoms), exhausted=True)
        if not sig.predicates:
            return LevelMapping(p, (), exhausted=True)
        batch = _atoms_of_size(p, size, max_term_size=max(1, size - 1))
        generated += len(batch)
        if generated > cap:
            raise ResourceLimitError(
                f"atom enumeration exceeded cap of {cap} at size {size}"
            )
        atoms.extend(batch)
    return LevelMapping(p, tuple(atoms[:n]), exhausted=False)


def level_of(lm: LevelMapping, a: Atom) -> int:
    return lm.level_of(a)


def enumerate_base_covering(
    p: Program, atoms: Iterable[Atom], cap: int = DEFAULT_ATOM_CAP
) -> LevelMapping:
    """Smallest canonical prefix that contains every given atom: the
    enumeration is extended through the largest atom size present."""
    atoms = list(atoms)
    if not atoms:
        return enumerate_base(p, 1, cap)
    target = max(atom_size(a) for a in atoms)
    sig = p.signature
    finite = sig.max_functor_arity == 0
    max_pred_arity = max((k for _, k in sig.predicates), default=0)
    collected: list = []
    generated = 0
    for size in range(1, target + 1):
        if finite and size > 1 + max_pred_arity:
            break
        batch = _atoms_of_size(p, size, max_term_size=max(1, size - 1))
        generated += len(batch)
        if generated > cap:
            raise ResourceLimitError(
                f"atom enumeration exceeded cap of {cap} at size {size}"
            )
        collected.extend(batch)
    exhausted = finite and target >= 1 + max_pred_arity
    return LevelMapping(p, tuple(collected), exhausted=exhausted)


@dataclass(frozen=True)
class Interpretation:
    """Truth assignment: finite true-set, or truth prefix plus tail policy."""

    true_atoms: Optional[frozenset] = None
    digits: Optional[tuple] = None
    tail: str = TAIL_FALSE

    def __post_init__(self):
        if (self.true_atoms is None) == (self.digits is None):
            raise ValueError("exactly one of true_atoms / digits must be given")
        if self.tail not in (TAIL_FALSE, TAIL_TRUE, TAIL_UNKNOWN):
            raise ValueError(f"bad tail policy {self.tail!r}")
        if self.true_atoms is not None and self.tail != TAIL_FALSE:
            raise ValueError("a true-set interpretation is all-false beyond its set")

    @classmethod
    def from_true_atoms(cls, atoms: Iterable[Atom]) -> "Interpretation":
        atoms = frozenset(atoms)
        for a in atoms:
            if not is_ground_atom(a):
                raise ValueError(f"true-set entries must be ground, got {a}")
        return cls(true_atoms=atoms)

    @classmethod
    def empty(cls) -> "Interpretation":
        return cls(true_atoms=frozenset())

    @classmethod
    def from_prefix(cls, digits: Iterable[bool], tail: str = TAIL_FALSE) -> "Interpretation":
        return cls(digits=tuple(bool(d) for d in digits), tail=tail)

    @property
    def prefix_length(self) -> int:
        return 0 if self.digits is None else len(self.digits)

    def truth_level(self, lm: LevelMapping, level: int) -> bool:
        if level < 1:
            raise ValueError("levels are 1-based")
        if self.digits is not None:
            if level <= len(self.digits):
                return self.digits[level - 1]
            if self.tail == TAIL_UNKNOWN:
                raise UnknownTailError(
                    f"level {level} beyond prefix of {len(self.digits)} with unknown tail"
                )
            return self.tail == TAIL_TRUE
        if level <= lm.size:
            return lm.atoms[level - 1] in self.true_atoms
        if lm.exhausted:
            return False  # no atom exists at this level
        raise OutOfPrefixError(
            f"level {level} beyond enumerated prefix of {lm.size}"
        )

    def truth_atom(self, lm: LevelMapping, a: Atom) -> bool:
        if self.true_atoms is not None:
            return a in self.true_atoms
        lvl = lm.find(a)
        if lvl is None:
            # legal atom beyond the enumerated prefix: governed by the tail,
            # provided the digit prefix is inside the enumerated prefix
            if len(self.digits) > lm.size:
                raise OutOfPrefixError(
                    "digit prefix extends beyond the enumerated atom prefix"
                )
            if self.tail == TAIL_UNKNOWN:
                raise UnknownTailError(f"truth of {a} not determined (unknown tail)")
            return self.tail == TAIL_TRUE
        if lvl <= len(self.digits):
            return self.digits[lvl - 1]
        if self.tail == TAIL_UNKNOWN:
            raise UnknownTailError(f"truth of {a} not determined (unknown tail)")
        return self.tail == TAIL_TRUE

    def truth_vector(self, lm: LevelMapping, n: int) -> tuple:
        return tuple(self.truth_level(lm, k) for k in range(1, n + 1))

    def finitely_true(self) -> bool:
        """True when the set of true atoms is provably finite."""
        if self.true_atoms is not None:
            return True
        return self.tail == TAIL_FALSE

    def true_atom_set(self, lm: LevelMapping) -> frozenset:
        if self.true_atoms is not None:
            return self.true_atoms
        if self.tail != TAIL_FALSE:
            raise UnknownTailError("true set is not finite or not determined")
        if len(self.digits) > lm.size:
            raise OutOfPrefixError("digit prefix extends beyond the enumerated atom prefix")
        return frozenset(
            lm.atoms[i] for i, d in enumerate(self.digits) if d
        )


def first_disagreement(
    i: Interpretation, j: Interpretation, lm: LevelMapping, n: Optional[int] = None
) -> Optional[int]:
    """Smallest level in 1..n where i and j differ, or None if they agree."""
    if n is None:
        n = lm.size
    for level in range(1, n + 1):
        if i.truth_level(lm, level) != j.truth_level(lm, level):
            return level
    return None
