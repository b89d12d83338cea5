import itertools
import random
from fractions import Fraction

import pytest

from nsi.consequence import (
    apply_tp,
    check_acyclic,
    estimate_lipschitz,
    iterate_tp,
    required_depth,
)
from nsi.errors import InsufficientDepthError
from nsi.herbrand import Interpretation, enumerate_base, enumerate_base_covering
from nsi.logic import ground_program, parse_program

from oracles import (
    brute_tp,
    brute_tp_iterate,
    naive_tp_first_order,
    random_first_order_program,
    random_propositional_program,
)
from test_herbrand import even_atom


def trueset_of(interp, lm):
    return interp.true_atom_set(lm)


def test_apply_tp_even_from_empty(even_program):
    lm = enumerate_base(even_program, 5)
    out = apply_tp(even_program, Interpretation.empty(), 5, 5, lm=lm)
    assert out.digits == (True, False, False, False, False)
    assert out.tail == "false"  # certified: facts only can fire


def test_apply_tp_even_one_step(even_program):
    lm = enumerate_base(even_program, 5)
    i = Interpretation.from_true_atoms([even_atom(0)])
    out = apply_tp(even_program, i, 5, 5, lm=lm)
    assert trueset_of(out, lm) == {even_atom(0), even_atom(2)}


def test_apply_tp_prop_example(prop_program):
    lm = enumerate_base(prop_program, 4)
    i = Interpretation.from_true_atoms(
        [a for a in lm.atoms if str(a) in ("p", "q")]
    )
    out = apply_tp(prop_program, i, 4, 1, lm=lm)
    assert sorted(str(a) for a in trueset_of(out, lm)) == ["p", "q", "r"]


def test_apply_tp_agrees_with_brute_force_exhaustively(prop_program):
    lm = enumerate_base(prop_program, 4)
    clauses = list(prop_program.clauses)
    for bits in itertools.product([False, True], repeat=4):
        i = Interpretation.from_prefix(bits)
        got = trueset_of(apply_tp(prop_program, i, 4, 1, lm=lm), lm)
        want = brute_tp(clauses, frozenset(a for a, b in zip(lm.atoms, bits) if b))
        assert got == want


def test_apply_tp_oracle_equivalence_random_programs():
    rng = random.Random(99)
    for _ in range(25):
        text, _ = random_propositional_program(rng, max_atoms=6, max_clauses=12)
        p = parse_program(text)
        lm = enumerate_base(p, 10**6)
        n = lm.size
        for bits in itertools.product([False, True], repeat=n):
            i = Interpretation.from_prefix(bits)
            got = trueset_of(apply_tp(p, i, n, 1, lm=lm), lm)
            want = brute_tp(
                list(p.clauses), frozenset(a for a, b in zip(lm.atoms, bits) if b)
            )
            assert got == want


def test_apply_tp_insufficient_depth(even_program):
    with pytest.raises(InsufficientDepthError) as exc:
        apply_tp(even_program, Interpretation.empty(), 5, 4)
    assert exc.value.needed == 5
    # and the certified-sufficient depth works
    apply_tp(even_program, Interpretation.empty(), 5, 5)


def test_required_depth_scales_with_prefix(even_program):
    lm = enumerate_base(even_program, 12)
    assert required_depth(even_program, Interpretation.empty(), 3, lm) == 3
    assert required_depth(even_program, Interpretation.empty(), 12, lm) == 12


def test_iterate_tp_even(even_program):
    trace = iterate_tp(even_program, Interpretation.empty(), 4, 8, 8)
    lm = enumerate_base(even_program, 8)
    for j, entry in enumerate(trace.entries):
        want = frozenset(even_atom(2 * t) for t in range(j) if 2 * t + 1 <= 8)
        assert trueset_of(entry, lm) == want
    assert not trace.fixpoint_reached


def test_iterate_tp_matches_brute_iteration(prop_program):
    lm = enumerate_base(prop_program, 4)
    trace = iterate_tp(prop_program, Interpretation.empty(), 10, 4, 1)
    want = brute_tp_iterate(list(prop_program.clauses), frozenset(), 4)
    got = [trueset_of(e, lm) for e in trace.entries]
    assert got == want[: len(got)]
    assert [sorted(map(str, s)) for s in got] == [
        [], ["q"], ["p", "q"], ["p", "q", "r"], ["p", "q", "r"],
    ]
    assert trace.fixpoint_reached


def test_iterate_tp_from_fixpoint(prop_program):
    lm = enumerate_base(prop_program, 4)
    fix = Interpretation.from_true_atoms(
        [a for a in lm.atoms if str(a) in ("p", "q", "r")]
    )
    trace = iterate_tp(prop_program, fix, 10, 4, 1)
    assert len(trace.entries) == 2
    assert trace.fixpoint_reached


def test_iterate_changed_sets(prop_program):
    trace = iterate_tp(prop_program, Interpretation.empty(), 10, 4, 1)
    assert [sorted(map(str, c)) for c in trace.changed] == [
        ["q"], ["p"], ["r"], [],
    ]


def test_locality_under_acyclicity(even_program):
    # inputs agreeing on levels 1..n give outputs agreeing wherever all
    # body levels are <= n; for this program output level k uses body k-2
    lm = enumerate_base(even_program, 10)
    rng = random.Random(5)
    for _ in range(20):
        shared = [rng.random() < 0.5 for _ in range(6)]
        suffix_i = [rng.random() < 0.5 for _ in range(4)]
        suffix_j = [rng.random() < 0.5 for _ in range(4)]
        i = Interpretation.from_prefix(shared + suffix_i)
        j = Interpretation.from_prefix(shared + suffix_j)
        oi = apply_tp(even_program, i, 10, 12, lm=lm)
        oj = apply_tp(even_program, j, 10, 12, lm=lm)
        assert oi.digits[:8] == oj.digits[:8]


def test_acyclicity_even(even_program):
    g = ground_program(even_program, 7)
    lm = enumerate_base_covering(
        even_program,
        [gi.clause.head for gi in g]
        + [l.atom for gi in g for l in gi.clause.body],
    )
    assert check_acyclic(g, lm).acyclic


def test_acyclicity_self_loop():
    p = parse_program("p :- p.")
    report = check_acyclic(ground_program(p, 1), enumerate_base(p, 1))
    assert not report.acyclic
    assert str(report.witness) == "p :- p."


def test_acyclicity_negative_violation():
    p = parse_program("p :- not q. q.")
    report = check_acyclic(ground_program(p, 1), enumerate_base(p, 2))
    assert not report.acyclic
    assert str(report.witness) == "p :- not q."


def test_level_k_stable_after_k_iterations(even_program):
    m = 10
    trace = iterate_tp(even_program, Interpretation.empty(), m + 2, m, m + 2)
    for k in range(1, m + 1):
        start = min(k, len(trace.entries) - 1)
        settled = {e.digits[k - 1] for e in trace.entries[start:]}
        assert len(settled) == 1


def test_lipschitz_even(even_program):
    est = estimate_lipschitz(even_program, 200, seed=11, m=10, depth=12)
    assert est.l_hat <= Fraction(1, 3)
    for level, ratio in est.flip_ratios:
        if level <= 8:  # shifted output digit still within the truncation
            assert ratio == Fraction(1, 9)


def test_lipschitz_matches_exhaustive_small(even_program):
    # every pair of level-6 prefixes, exact arithmetic
    from nsi.cantor import CantorPoint, embedded_tp

    m = 6
    lm = enumerate_base(even_program, m)
    mids = {}
    for bits in range(64):
        x = CantorPoint.from_bits(((bits >> (5 - j)) & 1 for j in range(6)), "lo")
        mids[bits] = (
            x.exact_value(),
            embedded_tp(even_program, x, m, 8, lm=lm).midpoint(),
        )
    best = Fraction(0)
    for a, b in itertools.combinations(range(64), 2):
        xa, ya = mids[a]
        xb, yb = mids[b]
        best = max(best, abs(ya - yb) / abs(xa - xb))
    assert best <= Fraction(1, 3)
    est = estimate_lipschitz(even_program, 500, seed=3, m=m, depth=8)
    assert est.l_hat <= best  # sampling never exceeds the exhaustive maximum


def test_lipschitz_negation_flip():
    p = parse_program("p :- not p.")
    est = estimate_lipschitz(p, 0, seed=1, m=4, depth=1)
    assert est.l_hat == 1
    assert est.flip_ratios[0][1] == 1


def test_lipschitz_empty_program():
    p = parse_program("")
    est = estimate_lipschitz(p, 100, seed=1, m=5, depth=1)
    assert est.l_hat == 0
    assert est.pair_count == 0


def test_lipschitz_monotone_in_pairs(even_program):
    small = estimate_lipschitz(even_program, 50, seed=42, m=8, depth=10)
    large = estimate_lipschitz(even_program, 500, seed=42, m=8, depth=10)
    assert large.l_hat >= small.l_hat


def test_lipschitz_deterministic(even_program):
    a = estimate_lipschitz(even_program, 300, seed=9, m=8, depth=10)
    b = estimate_lipschitz(even_program, 300, seed=9, m=8, depth=10)
    assert a.l_hat == b.l_hat and a.pair_count == b.pair_count


def test_iterate_zero_steps(prop_program):
    trace = iterate_tp(prop_program, Interpretation.empty(), 0, 4, 1)
    assert len(trace.entries) == 1
    assert not trace.fixpoint_reached


def test_apply_tp_unbounded_depth_is_an_error():
    # a body-only variable in a positive literal under an infinite input:
    # no finite grounding depth can be certified
    p = parse_program("p :- q(X). q(0). q(s(X)) :- q(X).")
    lm = enumerate_base(p, 3)
    infinite = Interpretation.from_prefix([True], tail="true")
    with pytest.raises(InsufficientDepthError) as exc:
        apply_tp(p, infinite, 1, 50, lm=lm)
    assert exc.value.needed is None
    # the same clause is fine under a finite input
    finite = Interpretation.from_true_atoms([a for a in lm.atoms if str(a) == "q(0)"])
    out = apply_tp(p, finite, 1, 2, lm=lm)
    assert out.digits == (True,)


def test_apply_tp_first_order_differential():
    # random rule programs with variables (including body-only ones),
    # checked against a naive oracle grounded strictly deeper; agreement
    # also vouches for the conservative depth arithmetic
    rng = random.Random(424242)
    m, depth, oracle_depth = 6, 9, 12
    checked = 0
    for _ in range(20):
        p = parse_program(random_first_order_program(rng))
        lm = enumerate_base(p, m)
        universe = [lm.atoms[k] for k in range(lm.size)]
        for _ in range(5):
            trues = frozenset(a for a in universe if rng.random() < 0.4)
            i = Interpretation.from_true_atoms(trues)
            try:
                got = apply_tp(p, i, m, depth, lm=lm)
            except InsufficientDepthError:
                continue
            want = naive_tp_first_order(p, trues, oracle_depth)
            for level in range(1, min(m, lm.size) + 1):
                assert got.digits[level - 1] == (lm.atoms[level - 1] in want)
            checked += 1
    assert checked >= 50  # the depth guard must not eat the test


def test_apply_tp_all_true_tail_on_finite_base(prop_program):
    # with the base exhausted, an all-true tail is still a finite true set
    lm = enumerate_base(prop_program, 100)
    all_true = Interpretation.from_prefix([], tail="true")
    out = apply_tp(prop_program, all_true, 4, 1, lm=lm)
    # p :- q fires, q fires, r :- p, not s is blocked by s
    assert out.digits == (True, True, False, False)
    assert out.tail == "false"
