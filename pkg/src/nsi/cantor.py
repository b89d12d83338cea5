"""Exact embedding of interpretations into the Cantor set.

An interpretation maps, level by level, to a digit string over a two-letter
alphabet inside base B: true becomes the high digit, false the low one, and
the resulting number is sum(digit_i * B^-i).  The default configuration is
base 3 with digits {0, 2}, the classical middle-thirds Cantor set; any base
B >= 3 with an alphabet pair (lo, hi) inside it gives a homeomorphic copy.

All digit arithmetic is exact: digit vectors plus rationals.  Floats appear
only at the output boundary (`to_real`) with outward rounding.  Beyond
roughly 33 ternary digits a double cannot separate two interpretations, so
exactness here is what keeps the embedding injective in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DigitAlphabetError, OutOfPrefixError, UnknownTailError
from .herbrand import (
    TAIL_FALSE,
    TAIL_TRUE,
    TAIL_UNKNOWN,
    Interpretation,
    LevelMapping,
    enumerate_base,
)
from .logic import Program

TAIL_LO = "lo"
TAIL_HI = "hi"
TAIL_UNKNOWN_DIGITS = "unknown"

_TAIL_FROM_POLICY = {TAIL_FALSE: TAIL_LO, TAIL_TRUE: TAIL_HI, TAIL_UNKNOWN: TAIL_UNKNOWN_DIGITS}
_POLICY_FROM_TAIL = {TAIL_LO: TAIL_FALSE, TAIL_HI: TAIL_TRUE, TAIL_UNKNOWN_DIGITS: TAIL_UNKNOWN}


@dataclass(frozen=True)
class DigitConfig:
    """Base and two-digit alphabet of the embedding."""

    base: int = 3
    lo: int = 0
    hi: int = 2

    def __post_init__(self):
        if self.base < 3:
            raise ValueError("base must be >= 3")
        if not 0 <= self.lo < self.hi < self.base:
            raise ValueError("alphabet must satisfy 0 <= lo < hi < base")

    def digit(self, truth: bool) -> int:
        return self.hi if truth else self.lo

    def tail_interval(self, k: int) -> tuple:
        """Exact (min, max) of sum_{i>k} d_i B^-i over digit choices."""
        geom = Fraction(1, self.base**k * (self.base - 1))
        return (self.lo * geom, self.hi * geom)


DEFAULT_CONFIG = DigitConfig()


@dataclass(frozen=True)
class CantorPoint:
    """Digit vector for positions 1..k plus a tail declaration."""

    digits: tuple
    tail: str = TAIL_LO
    config: DigitConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if self.tail not in (TAIL_LO, TAIL_HI, TAIL_UNKNOWN_DIGITS):
            raise ValueError(f"bad tail {self.tail!r}")
        for d in self.digits:
            if d not in (self.config.lo, self.config.hi):
                raise DigitAlphabetError(
                    f"digit {d} outside alphabet ({self.config.lo},{self.config.hi})"
                )

    @classmethod
    def from_bits(cls, bits, tail: str = TAIL_LO, config: DigitConfig = DEFAULT_CONFIG):
        return cls(tuple(config.digit(bool(b)) for b in bits), tail, config)

    @property
    def prefix_length(self) -> int:
        return len(self.digits)

    def bit(self, i: int) -> bool:
        return self.digits[i - 1] == self.config.hi

    def prefix_value(self) -> Fraction:
        b = self.config.base
        acc = 0
        for d in self.digits:
            acc = acc * b + d
        return Fraction(acc, b ** len(self.digits))

    def value_interval(self) -> tuple:
        v = self.prefix_value()
        lo_tail, hi_tail = self.config.tail_interval(len(self.digits))
        if self.tail == TAIL_LO:
            return (v + lo_tail, v + lo_tail)
        if self.tail == TAIL_HI:
            return (v + hi_tail, v + hi_tail)
        return (v + lo_tail, v + hi_tail)

    def exact_value(self) -> Fraction:
        if self.tail == TAIL_UNKNOWN_DIGITS:
            raise UnknownTailError("point has an unknown tail; use value_interval()")
        return self.value_interval()[0]

    def midpoint(self) -> Fraction:
        lo, hi = self.value_interval()
        return (lo + hi) / 2

    def radius(self) -> Fraction:
        lo, hi = self.value_interval()
        return (hi - lo) / 2

    def digit_string(self) -> str:
        return "".join(str(d) for d in self.digits)


@dataclass(frozen=True)
class EmbeddedValue:
    """Certified float enclosure of an exact embedded value."""

    midpoint: float
    radius: float

    @property
    def low(self) -> float:
        return max(0.0, self.midpoint - self.radius)

    @property
    def high(self) -> float:
        return min(1.0, self.midpoint + self.radius)


def embed(
    i: Interpretation,
    lm: LevelMapping,
    k: int,
    config: DigitConfig = DEFAULT_CONFIG,
) -> CantorPoint:
    """Digits of the first k levels of i, with the tail policy carried over.

    A finite true-set interpretation must have its whole support inside
    levels 1..k, otherwise the all-lo tail would misstate its value.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if i.true_atoms is not None:
        for a in sorted(i.true_atoms, key=str):
            lvl = lm.level_of(a)  # raises for out-of-prefix / unknown atoms
            if lvl > k:
                raise OutOfPrefixError(
                    f"true atom {a} at level {lvl} lies beyond requested prefix {k}"
                )
        bits = i.truth_vector(lm, min(k, lm.size))
        if lm.size < k and not lm.exhausted:
            raise OutOfPrefixError(
                f"requested prefix {k} exceeds enumerated prefix {lm.size}"
            )
        bits = bits + (False,) * (k - len(bits))
        return CantorPoint.from_bits(bits, TAIL_LO, config)

    digits = i.digits
    if k <= len(digits):
        rest = digits[k:]
        if all(not d for d in rest) and i.tail == TAIL_FALSE:
            tail = TAIL_LO
        elif all(rest) and i.tail == TAIL_TRUE:
            tail = TAIL_HI
        elif not rest:
            tail = _TAIL_FROM_POLICY[i.tail]
        else:
            tail = TAIL_UNKNOWN_DIGITS
        return CantorPoint.from_bits(digits[:k], tail, config)
    if i.tail == TAIL_UNKNOWN:
        raise UnknownTailError(
            f"cannot extend prefix of {len(digits)} to {k} under an unknown tail"
        )
    pad = (i.tail == TAIL_TRUE,) * (k - len(digits))
    return CantorPoint.from_bits(digits + pad, _TAIL_FROM_POLICY[i.tail], config)


def unembed(c: CantorPoint, lm: LevelMapping) -> Interpretation:
    """Inverse of embed on genuine Cantor points (tail must be known)."""
    if c.tail == TAIL_UNKNOWN_DIGITS:
        raise UnknownTailError("cannot invert a point with unknown tail")
    k = len(c.digits)
    if k > lm.size and not lm.exhausted:
        raise OutOfPrefixError(
            f"point has {k} digits but only {lm.size} atoms are enumerated"
        )
    bits = tuple(c.bit(i) for i in range(1, k + 1))
    if c.tail == TAIL_LO:
        return Interpretation.from_true_atoms(
            lm.atoms[i] for i, b in enumerate(bits) if b and i < lm.size
        )
    return Interpretation.from_prefix(bits, TAIL_TRUE)


def to_real(c: CantorPoint) -> EmbeddedValue:
    """Float midpoint and a radius that certifiably covers tail and rounding."""
    mid = c.midpoint()
    rad = c.radius()
    mid_f = float(mid)
    rad_exact = rad + abs(mid - Fraction(mid_f))
    rad_f = float(rad_exact)
    if Fraction(rad_f) < rad_exact:
        rad_f = math.nextafter(rad_f, math.inf)
    return EmbeddedValue(mid_f, rad_f)


def format_point(c: CantorPoint) -> str:
    """Digit-string rendering like ``0.2020...3`` with a base subscript."""
    subs = "₀₁₂₃₄₅₆₇₈₉"
    base = (
        "".join(subs[int(ch)] for ch in str(c.config.base))
        if c.config.base < 10
        else f"_{c.config.base}"
    )
    suffix = {TAIL_LO: "", TAIL_HI: "…hi", TAIL_UNKNOWN_DIGITS: "…?"}[c.tail]
    return f"0.{c.digit_string()}{suffix}{base}"


def embedded_tp(
    p: Program,
    x: CantorPoint,
    m: int,
    depth: int,
    config: Optional[DigitConfig] = None,
    lm: Optional[LevelMapping] = None,
) -> CantorPoint:
    """The embedded operator: unembed, apply the consequence operator to
    truncation level m, re-embed.

    The result's tail is all-lo exactly when the operator application can
    certify that no true atom exists beyond level m; otherwise it is
    unknown and the point denotes a certified interval.
    """
    from .consequence import apply_tp  # deferred: consequence builds on this module

    config = config or x.config
    if lm is None:
        lm = enumerate_base(p, max(m, len(x.digits), 1))
    i = unembed(x, lm)
    j = apply_tp(p, i, m, depth, lm=lm)
    return embed(j, lm, min(m, lm.size) if lm.exhausted else m, config)
