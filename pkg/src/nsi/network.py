"""Network witnesses for the embedded operator.

Two constructions live here.  A 3-layer feedforward net (1 input, H
logistic hidden units, 1 linear output) trained by full-batch gradient
descent gives a desk-scale constructive witness that the embedded operator
is uniformly approximable; existence of an approximator says nothing about
finding one, so training is seed-pinned and reported, never claimed
optimal.  For
propositional programs a recurrent threshold network computes the
consequence operator exactly in one forward pass: one hidden unit per
clause firing iff its body is satisfied, one output unit per atom firing
iff any of its clauses fired.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .errors import DivergenceError, NotPropositionalError
from .fractal import SampleSet
from .herbrand import Interpretation, enumerate_base
from .logic import Atom, Program, is_propositional


def logistic(z):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


# ---------------------------------------------------------------------------
# Feedforward approximator
# ---------------------------------------------------------------------------


@dataclass
class FeedforwardNet:
    """1 -> H -> 1 net with logistic hidden units and a linear output."""

    w: np.ndarray  # hidden input weights, shape (H,)
    b: np.ndarray  # hidden biases, shape (H,)
    v: np.ndarray  # output weights, shape (H,)
    b_out: float

    @property
    def hidden(self) -> int:
        return int(self.w.shape[0])

    def copy(self) -> "FeedforwardNet":
        return FeedforwardNet(self.w.copy(), self.b.copy(), self.v.copy(), float(self.b_out))

    def params(self) -> np.ndarray:
        return np.concatenate([self.w, self.b, self.v, [self.b_out]])

    @classmethod
    def from_params(cls, theta: np.ndarray, hidden: int) -> "FeedforwardNet":
        h = hidden
        return cls(
            theta[:h].copy(), theta[h : 2 * h].copy(), theta[2 * h : 3 * h].copy(),
            float(theta[3 * h]),
        )


@dataclass(frozen=True)
class TrainReport:
    mse: float
    sup_error: float
    epochs: int
    seed: int
    learning_rate: float
    hidden: int


def eval_ffn(net: FeedforwardNet, x):
    """sum_h v_h sigma(w_h x + b_h) + b_out, scalar or vectorized."""
    x_arr = np.asarray(x, dtype=float)
    flat = x_arr.reshape(-1)
    hidden = logistic(np.outer(net.w, flat) + net.b[:, None])
    out = net.v @ hidden + net.b_out
    return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)


def _loss_and_grads(net: FeedforwardNet, xs: np.ndarray, ys: np.ndarray):
    n = xs.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        z = np.outer(net.w, xs) + net.b[:, None]  # (H, n)
        h = logistic(z)
        pred = net.v @ h + net.b_out  # (n,)
        err = pred - ys
        loss = float(np.mean(err**2))
        coeff = 2.0 / n
        g_v = coeff * (h @ err)
        g_bout = coeff * float(np.sum(err))
        back = (net.v[:, None] * h * (1.0 - h)) * err[None, :]  # (H, n)
        g_w = coeff * (back @ xs)
        g_b = coeff * np.sum(back, axis=1)
    return loss, (g_w, g_b, g_v, g_bout), pred


def init_ffn(hidden: int, seed: int) -> FeedforwardNet:
    """Fixed draw order (w, b, v, b_out) so runs are bit-reproducible."""
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 4.0, hidden)
    b = rng.normal(0.0, 2.0, hidden)
    v = rng.normal(0.0, 0.5, hidden)
    b_out = float(rng.normal(0.0, 0.1))
    return FeedforwardNet(w, b, v, b_out)


def _samples_to_arrays(samples) -> tuple:
    if isinstance(samples, SampleSet):
        xs = np.array([float(x.exact_value()) for x, _ in samples.pairs])
        ys = np.array([float(y.midpoint()) for _, y in samples.pairs])
        return xs, ys
    xs, ys = samples
    return np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)


def train_ffn(
    samples: Union[SampleSet, tuple],
    hidden: int,
    epochs: int,
    lr: float,
    seed: int,
) -> tuple:
    """Full-batch gradient descent on MSE over the sample midpoints.

    Deterministic given (samples, hidden, epochs, lr, seed); raises
    DivergenceError if the loss leaves the floats.
    """
    xs, ys = _samples_to_arrays(samples)
    if xs.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if hidden < 1:
        raise ValueError("hidden must be >= 1")
    net = init_ffn(hidden, seed)
    for epoch in range(epochs):
        loss, (g_w, g_b, g_v, g_bout), _ = _loss_and_grads(net, xs, ys)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss became non-finite at epoch {epoch}")
        net.w = net.w - lr * g_w
        net.b = net.b - lr * g_b
        net.v = net.v - lr * g_v
        net.b_out = net.b_out - lr * g_bout
    loss, _, pred = _loss_and_grads(net, xs, ys)
    if not np.isfinite(loss):
        raise DivergenceError("loss became non-finite after the final update")
    report = TrainReport(
        mse=loss,
        sup_error=float(np.max(np.abs(pred - ys))),
        epochs=epochs,
        seed=seed,
        learning_rate=lr,
        hidden=hidden,
    )
    return net, report


def gradient_check(net: FeedforwardNet, sample: tuple, step: float = 1e-6) -> float:
    """Max deviation of the analytic MSE gradient from central finite
    differences over all parameters, relative where the gradient is not
    tiny and absolute below that."""
    x, y = sample
    xs = np.array([float(x)])
    ys = np.array([float(y)])
    _, (g_w, g_b, g_v, g_bout), _ = _loss_and_grads(net, xs, ys)
    analytic = np.concatenate([g_w, g_b, g_v, [g_bout]])
    theta = net.params()
    numeric = np.empty_like(theta)
    for i in range(theta.shape[0]):
        plus = theta.copy()
        plus[i] += step
        minus = theta.copy()
        minus[i] -= step
        lp, _, _ = _loss_and_grads(FeedforwardNet.from_params(plus, net.hidden), xs, ys)
        lmn, _, _ = _loss_and_grads(FeedforwardNet.from_params(minus, net.hidden), xs, ys)
        numeric[i] = (lp - lmn) / (2.0 * step)
    worst = 0.0
    for ga, gn in zip(analytic, numeric):
        denom = max(abs(ga), abs(gn))
        dev = abs(ga - gn) / denom if denom > 1e-4 else abs(ga - gn)
        worst = max(worst, dev)
    return worst


def recur_ffn(net: FeedforwardNet, x0: float, steps: int) -> list:
    """Clamped feedback iteration x <- clamp_[0,1](net(x))."""
    trajectory = [float(x0)]
    x = float(x0)
    for _ in range(steps):
        x = min(1.0, max(0.0, eval_ffn(net, x)))
        trajectory.append(x)
    return trajectory


class SquashingNetRegressor(RegressorMixin, BaseEstimator):
    """sklearn facade over train_ffn/eval_ffn for 1-d regression."""

    def __init__(
        self,
        hidden: int = 8,
        epochs: int = 20_000,
        learning_rate: float = 0.5,
        seed: int = 0,
    ):
        self.hidden = hidden
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y):
        xs = np.asarray(X, dtype=float).reshape(-1)
        ys = np.asarray(y, dtype=float).reshape(-1)
        self.net_, self.report_ = train_ffn(
            (xs, ys), self.hidden, self.epochs, self.learning_rate, self.seed
        )
        return self

    def predict(self, X):
        if not hasattr(self, "net_"):
            raise NotFittedError("call fit before predict")
        return eval_ffn(self.net_, np.asarray(X, dtype=float).reshape(-1))


# ---------------------------------------------------------------------------
# Propositional threshold core
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdNet:
    """Recurrent threshold network computing the consequence operator of a
    propositional program in one forward pass.

    Hidden unit per clause: weight +1 per positive body literal, -1 per
    negative one, threshold = number of positive literals, firing on the
    closed comparison sum >= threshold.  Output unit per atom: fires iff
    any clause unit with that head fired (threshold 1/2).
    """

    atoms: tuple
    clause_heads: tuple  # atom index per clause
    weights: tuple  # per clause: weight vector over atoms
    thresholds: tuple  # per clause

    def __post_init__(self):
        object.__setattr__(self, "_atom_index", {a: i for i, a in enumerate(self.atoms)})
        object.__setattr__(
            self, "_w",
            np.array(self.weights, dtype=int).reshape(len(self.weights), len(self.atoms)),
        )
        object.__setattr__(self, "_thr", np.array(self.thresholds, dtype=int))
        head = np.zeros((len(self.atoms), len(self.weights)), dtype=int)
        for c, h in enumerate(self.clause_heads):
            head[h, c] = 1
        object.__setattr__(self, "_head", head)

    @property
    def unit_count(self) -> int:
        return 2 * len(self.atoms) + len(self.weights)

    def forward_bits(self, bits: Sequence[bool]) -> tuple:
        x = np.asarray(bits, dtype=int)
        if x.shape != (len(self.atoms),):
            raise ValueError(f"expected {len(self.atoms)} input bits")
        fired = (self._w @ x) >= self._thr if len(self.weights) else np.zeros(0, dtype=bool)
        out = (self._head @ fired.astype(int)) >= 1 if len(self.weights) else np.zeros(
            len(self.atoms), dtype=bool
        )
        return tuple(bool(o) for o in out)

    def forward_many(self, states: np.ndarray) -> np.ndarray:
        """Forward pass over a batch of interpretations, shape (n, atoms)."""
        if len(self.weights) == 0:
            return np.zeros_like(states, dtype=bool)
        fired = (states @ self._w.T) >= self._thr[None, :]
        return (fired.astype(int) @ self._head.T) >= 1

    def forward_atoms(self, true_atoms: Iterable[Atom]) -> frozenset:
        trues = set(true_atoms)
        bits = [a in trues for a in self.atoms]
        out = self.forward_bits(bits)
        return frozenset(a for a, t in zip(self.atoms, out) if t)


def build_core_network(p: Program) -> ThresholdNet:
    """Translate a propositional program into its threshold network."""
    if not is_propositional(p):
        raise NotPropositionalError(
            "the threshold-core construction needs a propositional program"
        )
    lm = enumerate_base(p, 10**6)
    atoms = lm.atoms
    index = {a: i for i, a in enumerate(atoms)}
    heads = []
    weights = []
    thresholds = []
    for clause in p.clauses:
        heads.append(index[clause.head])
        row = [0] * len(atoms)
        positives = 0
        for lit in clause.body:
            if lit.negative:
                row[index[lit.atom]] -= 1
            else:
                row[index[lit.atom]] += 1
                positives += 1
        weights.append(tuple(row))
        thresholds.append(positives)
    return ThresholdNet(atoms, tuple(heads), tuple(weights), tuple(thresholds))


@dataclass(frozen=True)
class CoreTrace:
    states: tuple  # tuples of bools, one per step, first is the start state
    fixpoint_reached: bool
    cycle_detected: bool

    def true_sets(self, net: ThresholdNet) -> list:
        return [
            frozenset(a for a, t in zip(net.atoms, s) if t) for s in self.states
        ]


def run_core_network(
    net: ThresholdNet,
    start: Union[Interpretation, Iterable[Atom], Sequence[bool]],
    steps: int,
) -> CoreTrace:
    """Iterate forward passes, feeding output back as input; stops early on
    any repeated state, flagging fixpoints and longer cycles."""
    bits = _start_bits(net, start)
    states = [bits]
    seen = {bits: 0}
    fixpoint = False
    cycle = False
    for _ in range(steps):
        nxt = net.forward_bits(states[-1])
        states.append(nxt)
        if nxt == states[-2]:
            fixpoint = True
            break
        if nxt in seen:
            cycle = True
            break
        seen[nxt] = len(states) - 1
    return CoreTrace(tuple(states), fixpoint, cycle)


def _start_bits(net: ThresholdNet, start) -> tuple:
    if isinstance(start, Interpretation):
        if start.true_atoms is not None:
            trues = start.true_atoms
            return tuple(a in trues for a in net.atoms)
        bits = list(start.digits) + [start.tail == "true"] * (
            len(net.atoms) - len(start.digits)
        )
        return tuple(bool(b) for b in bits[: len(net.atoms)])
    start = list(start)
    if all(isinstance(s, Atom) for s in start):
        trues = set(start)
        return tuple(a in trues for a in net.atoms)
    return tuple(bool(s) for s in start)
