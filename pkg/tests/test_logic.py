import random

import pytest

from nsi.errors import ArityConflictError, ProgramSyntaxError, ResourceLimitError
from nsi.logic import (
    Atom,
    Compound,
    Variable,
    ground_program,
    is_propositional,
    parse_program,
)

from oracles import (
    clause_key,
    is_instance_of,
    naive_ground_instances,
    random_propositional_program,
)


def test_parse_even(even_program):
    assert len(even_program.clauses) == 2
    assert even_program.signature.functors == (("0", 0), ("s", 1))
    assert even_program.signature.predicates == (("even", 1),)
    fact, rule = even_program.clauses
    assert fact.head == Atom("even", (Compound("0"),))
    assert fact.body == ()
    assert rule.body[0].atom == Atom("even", (Variable("X"),))


def test_parse_negation():
    p = parse_program("p :- q, not r.")
    (clause,) = p.clauses
    assert str(clause.head) == "p"
    assert [(l.negative, str(l.atom)) for l in clause.body] == [(False, "q"), (True, "r")]


def test_parse_dangling_comma_is_syntax_error():
    with pytest.raises(ProgramSyntaxError) as exc:
        parse_program("p(X) :- q(X,).")
    assert exc.value.line == 1
    assert exc.value.column == 13


def test_parse_reports_line_and_column():
    with pytest.raises(ProgramSyntaxError) as exc:
        parse_program("p.\nq :- .\n")
    assert exc.value.line == 2


def test_arity_conflict_names_symbol():
    with pytest.raises(ArityConflictError) as exc:
        parse_program("p(a). p(a,b).")
    assert "p" in str(exc.value)
    with pytest.raises(ArityConflictError):
        parse_program("q(f(a)). r(f(a,a)).")


def test_comments_and_whitespace():
    p = parse_program("% leading comment\n  p   :-\n q. % trailing\nq.")
    assert len(p.clauses) == 2


def test_numerals_are_constants():
    p = parse_program("succ(0,1). succ(1,2).")
    assert ("0", 0) in p.signature.functors
    assert ("2", 0) in p.signature.functors


def test_reserved_constant_injected_when_no_constants():
    p = parse_program("p(X) :- q(X).")
    assert ("a", 0) in p.signature.functors
    q = parse_program("p(a(X)) :- q(X).")  # 'a' taken at arity 1
    assert ("a_", 0) in q.signature.functors


def test_roundtrip_fixed_programs(even_program, prop_program, conj_program):
    for p in (even_program, prop_program, conj_program):
        assert parse_program(str(p)) == p


def test_roundtrip_random_programs():
    rng = random.Random(20240817)
    for _ in range(50):
        text, _ = random_propositional_program(rng)
        once = parse_program(text)
        assert parse_program(str(once)) == once


def test_ground_even_depth5_matches_exhaustive_oracle(even_program):
    got = {clause_key(gi.clause) for gi in ground_program(even_program, 5)}
    want = naive_ground_instances(even_program, 5)
    assert got == want
    # four instances: the fact plus X in {0, s(0), s(s(0))}
    assert len(got) == 4


def test_ground_depth_monotone(even_program, conj_program):
    for p in (even_program, conj_program):
        for depth in range(1, 7):
            small = {clause_key(gi.clause) for gi in ground_program(p, depth)}
            large = {clause_key(gi.clause) for gi in ground_program(p, depth + 1)}
            assert small <= large


def test_ground_instances_are_ground_and_match_source(even_program):
    for gi in ground_program(even_program, 6):
        source = even_program.clauses[gi.clause_index]
        assert is_instance_of(gi.clause, source)


def test_ground_matches_oracle_on_random_depths(conj_program):
    for depth in (1, 2, 3, 4):
        got = {clause_key(gi.clause) for gi in ground_program(conj_program, depth)}
        assert got == naive_ground_instances(conj_program, depth)


def test_ground_propositional_is_identity(prop_program):
    for depth in (1, 3, 10):
        g = ground_program(prop_program, depth)
        assert [gi.clause for gi in g] == list(prop_program.clauses)


def test_ground_too_shallow_gives_no_instances_not_error(even_program):
    g = ground_program(even_program, 2)
    # only the fact fits; the rule's smallest instance has a size-3 head arg
    assert [str(gi.clause) for gi in g] == ["even(0)."]


def test_ground_deterministic_order(even_program):
    a = [str(gi.clause) for gi in ground_program(even_program, 7)]
    b = [str(gi.clause) for gi in ground_program(even_program, 7)]
    assert a == b
    indices = [gi.clause_index for gi in ground_program(even_program, 7)]
    assert indices == sorted(indices)


def test_ground_cap():
    p = parse_program("p(X,Y,Z) :- q(X), q(Y), q(Z). q(0). q(s(X)) :- q(X).")
    with pytest.raises(ResourceLimitError):
        ground_program(p, 12, cap=1000)


def test_is_propositional(even_program, prop_program):
    assert is_propositional(prop_program)
    assert not is_propositional(even_program)
    assert not is_propositional(parse_program("p(a)."))
