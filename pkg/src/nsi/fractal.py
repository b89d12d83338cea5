"""Fractal interpolation of the embedded consequence operator.

Sampling the embedded operator at all level-i digit prefixes gives 2^i
exactly computed graph points.  A fractal interpolation function (FIF) in
the Barnsley style turns those nodes into an iterated function system of
affine plane contractions

    w_j(x, y) = (a_j x + e_j,  c_j x + d_j y + f_j)

whose attractor is the graph of a continuous function through every node.
With vertical scaling d = 0 the attractor degenerates to the piecewise
linear interpolant; nonzero d bends self-similar structure into the graph.
Coefficients are kept as exact rationals so the endpoint conditions

    w_j(x_0, y_0) = (x_{j-1}, y_{j-1}),   w_j(x_N, y_N) = (x_j, y_j)

hold exactly, not merely to rounding.
"""

from __future__ import annotations

import bisect
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .cantor import (
    TAIL_HI,
    TAIL_LO,
    CantorPoint,
    DEFAULT_CONFIG,
    DigitConfig,
    embedded_tp,
)
from .errors import (
    DegenerateNodesError,
    OutOfDomainError,
    ResourceLimitError,
    SelectorError,
)
from .herbrand import enumerate_base
from .logic import Program

CHAOS_BURN_IN = 100
DETERMINISTIC_POINT_CAP = 500_000


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleSet:
    """All 2^level pairs (x, embedded_tp(x)) for level-long digit prefixes,
    ascending in x."""

    program: Program = field(compare=False)
    level: int = 0
    truncation: int = 0
    depth: int = 0
    pairs: tuple = ()
    config: DigitConfig = DEFAULT_CONFIG

    def __len__(self) -> int:
        return len(self.pairs)

    def nodes(self) -> list:
        """(x, y-midpoint) rational pairs."""
        return [(x.exact_value(), y.midpoint()) for x, y in self.pairs]

    def max_y_radius(self) -> Fraction:
        return max((y.radius() for _, y in self.pairs), default=Fraction(0))


def sample_embedded_tp(
    p: Program,
    level: int,
    m: Optional[int] = None,
    depth: int = 12,
    config: DigitConfig = DEFAULT_CONFIG,
) -> SampleSet:
    """Evaluate the embedded operator on every level-long all-lo-tail
    prefix; m defaults to level + 2 so the shifted image digits stay
    visible for acyclic programs."""
    if level < 1:
        raise ValueError("level must be >= 1")
    if m is None:
        m = level + 2
    if m < level:
        raise ValueError("m must be >= level")
    lm = enumerate_base(p, max(m, level))
    if lm.size < level:
        raise OutOfDomainError(
            f"base has only {lm.size} atoms; cannot form level-{level} prefixes"
        )
    pairs = []
    for bits in range(1 << level):
        x = CantorPoint.from_bits(
            ((bits >> (level - 1 - j)) & 1 for j in range(level)), TAIL_LO, config
        )
        y = embedded_tp(p, x, m, depth, config=config, lm=lm)
        pairs.append((x, y))
    return SampleSet(p, level, m, depth, tuple(pairs), config)


# ---------------------------------------------------------------------------
# Iterated function systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """One plane map w(x, y) = (a x + e, c x + d y + f), exact coefficients."""

    a: Fraction
    e: Fraction
    c: Fraction
    d: Fraction
    f: Fraction

    def apply(self, x: Fraction, y: Fraction) -> tuple:
        return (self.a * x + self.e, self.c * x + self.d * y + self.f)

    def floats(self) -> tuple:
        return (float(self.a), float(self.e), float(self.c), float(self.d), float(self.f))


@dataclass(frozen=True)
class Ifs:
    maps: tuple
    nodes: tuple  # ((x, y) rational pairs, ascending x)
    d_max: Fraction
    frame: tuple  # (x_lo, x_hi, y_lo, y_hi) floats, invariant rectangle

    def __post_init__(self):
        object.__setattr__(
            self, "_float_maps", tuple(m.floats() for m in self.maps)
        )
        object.__setattr__(self, "_node_xf", tuple(float(x) for x, _ in self.nodes))
        object.__setattr__(self, "_node_yf", tuple(float(y) for _, y in self.nodes))

    @property
    def map_count(self) -> int:
        return len(self.maps)

    @property
    def frame_height(self) -> float:
        return self.frame[3] - self.frame[2]

    def contraction_factor(self) -> float:
        return max(
            max(abs(fm[0]) for fm in self._float_maps),
            float(abs(self.d_max)),
        )

    def apply_float(self, j: int, x: float, y: float) -> tuple:
        a, e, c, d, f = self._float_maps[j]
        return (a * x + e, c * x + d * y + f)


def fif_from_nodes(nodes: Sequence, d=Fraction(0)) -> Ifs:
    """Barnsley fractal-interpolation IFS through the given nodes with a
    uniform vertical scaling d, |d| < 1."""
    d = Fraction(d)
    if abs(d) >= 1:
        raise ValueError("vertical scaling must satisfy |d| < 1")
    pts = [(Fraction(x), Fraction(y)) for x, y in nodes]
    if len(pts) < 3:
        raise DegenerateNodesError("need at least 3 interpolation nodes")
    xs = [x for x, _ in pts]
    for u, v in zip(xs, xs[1:]):
        if u >= v:
            raise DegenerateNodesError("node x values must be strictly increasing")
    x0, y0 = pts[0]
    xn, yn = pts[-1]
    span = xn - x0
    maps = []
    for (xp, yp), (xj, yj) in zip(pts, pts[1:]):
        a = (xj - xp) / span
        e = (xn * xp - x0 * xj) / span
        c = (yj - yp - d * (yn - y0)) / span
        f = (xn * yp - x0 * yj - d * (xn * y0 - x0 * yn)) / span
        maps.append(AffineMap(a, e, c, d, f))
    frame = _invariant_frame(maps, pts)
    return Ifs(tuple(maps), tuple(pts), abs(d), frame)


def build_fif_ifs(s: SampleSet, d=Fraction(0), augment_endpoints: bool = False) -> Ifs:
    """IFS through the sample nodes; optionally appends the all-hi point
    (x = 1) with one extra operator evaluation so the domain spans [0, 1]."""
    nodes = s.nodes()
    if augment_endpoints:
        lm = enumerate_base(s.program, max(s.truncation, s.level))
        hi_tail = TAIL_LO if lm.exhausted and lm.size <= s.level else TAIL_HI
        x_hi = CantorPoint.from_bits([True] * s.level, hi_tail, s.config)
        x_val = x_hi.exact_value()
        if x_val > nodes[-1][0]:
            y_hi = embedded_tp(
                s.program, x_hi, s.truncation, s.depth, config=s.config, lm=lm
            )
            nodes.append((x_val, y_hi.midpoint()))
    return fif_from_nodes(nodes, d)


def _invariant_frame(maps: list, nodes: list) -> tuple:
    x_lo = float(nodes[0][0])
    x_hi = float(nodes[-1][0])
    ys = [float(y) for _, y in nodes]
    y_lo, y_hi = min(ys), max(ys)
    fmaps = [m.floats() for m in maps]
    d_max = max(abs(fm[3]) for fm in fmaps)
    for _ in range(200):
        new_lo, new_hi = y_lo, y_hi
        for a, e, c, d, f in fmaps:
            for x in (x_lo, x_hi):
                for y in (y_lo, y_hi):
                    v = c * x + d * y + f
                    new_lo = min(new_lo, v)
                    new_hi = max(new_hi, v)
        if new_lo == y_lo and new_hi == y_hi:
            break
        y_lo, y_hi = new_lo, new_hi
        if d_max == 0.0:
            break
    pad = 1e-9 * max(1.0, y_hi - y_lo)
    return (x_lo, x_hi, y_lo - pad, y_hi + pad)


# ---------------------------------------------------------------------------
# Attractor generation and evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointCloud:
    points: tuple
    mode: str
    iters: int
    seed: Optional[int] = None
    choices: tuple = field(default=(), compare=False)


def chaos_orbit(ifs: Ifs, steps: int, seed: int, start: Optional[tuple] = None):
    """Seeded random orbit and the map choices that drove it.

    Returns (trajectory, choices); trajectory[0] is the start state and
    trajectory[t+1] = w_{choices[t]}(trajectory[t]), all in float
    arithmetic shared with the recurrent-network encoding.
    """
    rng = random.Random(seed)
    state = start if start is not None else (
        float(ifs.nodes[0][0]),
        float(ifs.nodes[0][1]),
    )
    trajectory = [state]
    choices = []
    n = ifs.map_count
    for _ in range(steps):
        j = rng.randrange(n)
        choices.append(j)
        state = ifs.apply_float(j, state[0], state[1])
        trajectory.append(state)
    return trajectory, choices


def attractor_points(
    ifs: Ifs, mode: str = "chaos", iters: int = 10_000, seed: int = 0
) -> PointCloud:
    """Sample the attractor.

    chaos: seeded random orbit, uniform map choice, first CHAOS_BURN_IN
    points discarded, `iters` points emitted.  deterministic: `iters`
    rounds of the set map A -> union_j w_j(A) starting from the nodes.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if mode == "chaos":
        trajectory, choices = chaos_orbit(ifs, CHAOS_BURN_IN + iters, seed)
        return PointCloud(
            tuple(trajectory[CHAOS_BURN_IN + 1 :]),
            "chaos",
            iters,
            seed,
            tuple(choices),
        )
    if mode == "deterministic":
        points = [(float(x), float(y)) for x, y in ifs.nodes]
        for _ in range(iters):
            if len(points) * ifs.map_count > DETERMINISTIC_POINT_CAP:
                raise ResourceLimitError(
                    f"deterministic attractor would exceed {DETERMINISTIC_POINT_CAP} points"
                )
            points = [
                ifs.apply_float(j, x, y)
                for j in range(ifs.map_count)
                for x, y in points
            ]
        return PointCloud(tuple(points), "deterministic", iters, None)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class FifValue:
    y: float
    bound: float  # certified |y - true attractor value| bound


def eval_fif(ifs: Ifs, x: float, depth: int = 32) -> FifValue:
    """Follow x's address through the x-inverses of the maps, composing the
    affine y-parts; the residual error is d_max^depth times the frame
    height, zero when the vertical scaling is zero."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    xs = ifs._node_xf
    lo, hi = xs[0], xs[-1]
    slack = 1e-12 * max(1.0, abs(hi))
    if x < lo - slack or x > hi + slack:
        raise OutOfDomainError(f"x={x} outside [{lo}, {hi}]")
    u = min(max(x, lo), hi)
    scale = 1.0
    offset = 0.0
    for _ in range(depth):
        j = bisect.bisect_right(xs, u) - 1
        j = min(max(j, 0), ifs.map_count - 1)
        a, e, c, d, f = ifs._float_maps[j]
        u = (u - e) / a
        u = min(max(u, lo), hi)
        offset += scale * (c * u + f)
        scale *= d
        if scale == 0.0:
            break
    base = _chord_value(ifs, u)
    residual = abs(scale) * ifs.frame_height
    return FifValue(offset + scale * base, residual)


def _chord_value(ifs: Ifs, u: float) -> float:
    xs, ys = ifs._node_xf, ifs._node_yf
    j = bisect.bisect_right(xs, u) - 1
    j = min(max(j, 0), len(xs) - 2)
    x0, x1 = xs[j], xs[j + 1]
    y0, y1 = ys[j], ys[j + 1]
    return y0 + (u - x0) * (y1 - y0) / (x1 - x0)


# ---------------------------------------------------------------------------
# Uniform-convergence measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    epsilon: float
    runtime_ms: float


def convergence_report(
    p: Program,
    levels: Sequence[int],
    ref_level: int,
    d=Fraction(0),
    m: int = 12,
    depth: int = 12,
    config: DigitConfig = DEFAULT_CONFIG,
) -> list:
    """Per level, the interval-safe sup deviation of the level's FIF from
    the reference operator samples at all 2^ref_level prefixes."""
    if not levels:
        raise ValueError("need at least one sampling level")
    if ref_level <= max(levels):
        raise ValueError("ref_level must exceed every sampled level")
    refs = sample_embedded_tp(p, ref_level, m, depth, config)
    ref_pts = [
        (float(x.exact_value()), float(y.midpoint()), float(y.radius()))
        for x, y in refs.pairs
    ]
    rows = []
    for level in sorted(levels):
        t0 = time.perf_counter()
        s = sample_embedded_tp(p, level, m, depth, config)
        ifs = build_fif_ifs(s, d, augment_endpoints=True)
        eps = 0.0
        for xf, ymid, yrad in ref_pts:
            v = eval_fif(ifs, xf)
            eps = max(eps, abs(v.y - ymid) + yrad + v.bound)
        rows.append(
            ConvergenceRow(level, eps, (time.perf_counter() - t0) * 1000.0)
        )
    return rows


# ---------------------------------------------------------------------------
# Recurrent-network encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecurrentNet:
    """Selector-gated recurrent net with state (x, y): one linear
    subnetwork per map (weights a, c, d; biases e, f), a one-hot selector
    choosing exactly one subnetwork per step."""

    weights: tuple  # per subnetwork: ((a, 0.0), (c, d))
    biases: tuple  # per subnetwork: (e, f)

    @property
    def selector_width(self) -> int:
        return len(self.weights)

    def step(self, state: tuple, selector: Sequence[float]) -> tuple:
        ones = [k for k, s in enumerate(selector) if s == 1]
        zeros_ok = all(s in (0, 1) for s in selector)
        if len(selector) != self.selector_width or len(ones) != 1 or not zeros_ok:
            raise SelectorError(
                f"selector must be one-hot of width {self.selector_width}, got {tuple(selector)}"
            )
        j = ones[0]
        (a, zero), (c, d) = self.weights[j]
        e, f = self.biases[j]
        x, y = state
        return (a * x + zero * y + e, c * x + d * y + f)

    def run(self, start: tuple, selectors: Iterable[Sequence[float]]) -> list:
        trajectory = [tuple(start)]
        state = tuple(start)
        for sel in selectors:
            state = self.step(state, sel)
            trajectory.append(state)
        return trajectory


def encode_ifs_as_recurrent_net(ifs: Ifs) -> RecurrentNet:
    """Transcribe the maps into subnetwork weights; running the net with a
    one-hot selector sequence reproduces the chaos-game orbit in the same
    float arithmetic."""
    weights = []
    biases = []
    for a, e, c, d, f in ifs._float_maps:
        weights.append(((a, 0.0), (c, d)))
        biases.append((e, f))
    return RecurrentNet(tuple(weights), tuple(biases))


def one_hot(index: int, width: int) -> tuple:
    sel = [0.0] * width
    sel[index] = 1.0
    return tuple(sel)


# ---------------------------------------------------------------------------
# Estimator facade
# ---------------------------------------------------------------------------


class FractalInterpolator(RegressorMixin, BaseEstimator):
    """Fractal interpolation regressor over 1-d inputs.

    fit(X, y) builds the exact-coefficient IFS through the (x, y) points;
    predict evaluates the interpolation function.  With the default
    vertical_scaling of 0 this is the piecewise linear interpolant; other
    values in (-1, 1) interpolate the same nodes with self-affine detail.
    """

    def __init__(self, vertical_scaling: float = 0.0, eval_depth: int = 32):
        self.vertical_scaling = vertical_scaling
        self.eval_depth = eval_depth

    def fit(self, X, y):
        xs = _as_1d(X, "X")
        ys = _as_1d(y, "y")
        if xs.shape[0] != ys.shape[0]:
            raise ValueError("X and y must have the same length")
        order = np.argsort(xs, kind="stable")
        nodes = [
            (Fraction(float(xs[i])), Fraction(float(ys[i]))) for i in order
        ]
        self.ifs_ = fif_from_nodes(nodes, Fraction(self.vertical_scaling))
        return self

    def predict(self, X):
        if not hasattr(self, "ifs_"):
            raise NotFittedError("call fit before predict")
        xs = _as_1d(X, "X")
        return np.array(
            [eval_fif(self.ifs_, float(v), self.eval_depth).y for v in xs]
        )


def _as_1d(arr, name: str) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if a.ndim == 2 and a.shape[1] == 1:
        a = a[:, 0]
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-d or a single-column 2-d array")
    return a
