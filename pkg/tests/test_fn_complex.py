from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PAIR, SINGLE, instance
from fnduality.fn_complex import (
    Chain,
    FncParseError,
    WindowInfeasible,
    boundary_apply,
    chain_from_terms,
    chain_gen,
    chain_zero,
    ell,
    filtered_member,
    opposite,
    parse_chain,
    parse_fnc,
    rebase,
    reduce_mod_filtration,
    validate,
    write_chain,
    write_fnc,
)
from fnduality.novikov_arith import NEG_INF, ExactValue


def test_zero_boundary_is_valid(single):
    assert validate(single).ok


def test_pair_complex_is_valid(pair):
    assert validate(pair).ok


def test_filtration_violation_reports_entry():
    spec = parse_fnc(PAIR.replace("gen v grading 0 action 1 0", "gen v grading 0 action 4 0"), check=False)
    rep = validate(spec)
    assert not rep.ok
    assert rep.violations[0].kind == "filtration"


def test_d_squared_violation():
    text = SINGLE.replace("gen p grading 0 action 2 0", "") + (
        "gen a grading 2 action 5 0\ngen b grading 1 action 3 0\ngen c grading 0 action 1 0\n"
        "bnd a b : 1@0 0\nbnd b c : 1@0 0\n"
    )
    rep = validate(parse_fnc(text, check=False))
    assert [v.kind for v in rep.violations] == ["d-squared"]


def test_level_examples(single):
    assert ell(single, chain_gen(single, "p")) == 2
    assert ell(single, chain_gen(single, "p", (1, 0))) == 1
    assert ell(single, chain_zero(single, 0)) == NEG_INF


def test_boundary_of_pair(pair):
    assert boundary_apply(pair, chain_gen(pair, "u")) == chain_gen(pair, "v")


@settings(max_examples=15)
@given(st.integers(0, 40), st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-3, 3)), max_size=4))
def test_boundary_squares_to_zero_and_is_linear(i, coeffs):
    spec = instance(3, i, "dense").spec
    R = spec.ring
    for k in spec.degrees:
        n = spec.size(k)
        if not n:
            continue
        vec = [R.zero()] * n
        for a, b, c in coeffs:
            vec[(a + b) % n] = vec[(a + b) % n] + R.monomial((a, b), c)
        x = Chain(k, tuple(vec))
        assert boundary_apply(spec, boundary_apply(spec, x)).is_zero()
        lam = R.from_terms({(1, -1): 2, (0, 0): 1})
        assert boundary_apply(spec, x.scale(lam)) == boundary_apply(spec, x).scale(lam)


def test_opposite_of_pair(pair):
    op = opposite(pair)
    assert boundary_apply(op, chain_gen(op, "v")) == chain_gen(op, "u")
    assert [(o.grading, o.action) for o in op.orbits] == [(-1, ExactValue(-3)), (0, ExactValue(-1))]


def test_opposite_of_zero_differential(single):
    op = opposite(single)
    assert not op.boundary
    assert op.orbits[0].grading == 0 and op.orbits[0].action == -2


@pytest.mark.parametrize("i", range(20))
def test_opposite_is_an_involution(i):
    spec = instance(3, i, "mixed", "mixed").spec
    assert opposite(opposite(spec)) == spec
    assert validate(opposite(spec)).ok


def test_filtered_member_examples(single):
    p = chain_gen(single, "p")
    assert filtered_member(single, p, ExactValue(3))
    assert not filtered_member(single, p, ExactValue(2))
    assert filtered_member(single, p, ExactValue(2), strict=False)
    assert filtered_member(single, chain_zero(single, 0), ExactValue(-100))


def test_reduce_mod_filtration_examples(single):
    c = chain_from_terms(single, 0, [("p", (0, 0), 1), ("p", (1, 0), 1)])
    assert reduce_mod_filtration(single, c, ExactValue(Fraction(3, 2))) == chain_gen(single, "p")
    assert reduce_mod_filtration(single, c, ExactValue(-5)) == c
    assert reduce_mod_filtration(single, c, ExactValue(2)).is_zero()


def test_rebase_dense_window():
    spec = parse_fnc(SINGLE.replace("action 2 0", "action 5 0"))
    new, rec = rebase(spec, 0, ExactValue(0), ExactValue(Fraction(1, 4)))
    t = new.actions(0)[0]
    assert ExactValue(0) <= t < ExactValue(Fraction(1, 4))
    assert spec.config.omega_of(rec.shifts[0]) == 5 - t


def test_rebase_identity_when_inside(single):
    _, rec = rebase(single, 0, ExactValue(2), ExactValue(1))
    assert rec.shifts == ((0, 0),)


def test_rebase_discrete_unique_representative():
    text = "field Q\nvalue_basis 1 1\ngamma0_rank 1\nomega 1\ngen p grading 0 action 7/2\ngen q grading 0 action -3\n"
    spec = parse_fnc(text)
    new, _ = rebase(spec, 0, ExactValue(0), ExactValue(1))
    assert new.actions(0) == [ExactValue(Fraction(1, 2)), ExactValue(0)]
    with pytest.raises(WindowInfeasible):
        rebase(spec, 0, ExactValue(0), ExactValue(Fraction(1, 4)))


def test_rebase_preserves_axioms_and_chains(pair):
    new, rec = rebase(pair, 1, ExactValue(Fraction(1, 7)), ExactValue(Fraction(1, 5)))
    assert validate(new).ok
    R = pair.ring
    u = chain_gen(pair, "u")
    assert ell(new, rec.chain_to_new(u, R)) == ell(pair, u)
    assert rec.chain_to_old(rec.chain_to_new(u, R), R) == u


@pytest.mark.parametrize("i", range(15))
def test_write_parse_round_trip(i):
    spec = instance(5, i, "mixed", "mixed").spec
    again = parse_fnc(write_fnc(spec))
    assert again == spec
    assert write_fnc(again) == write_fnc(spec)


def test_chain_round_trip(pair):
    c = chain_from_terms(pair, 1, [("u", (1, 0), 2), ("u", (0, -1), Fraction(-1, 3))])
    assert parse_chain(pair, write_chain(pair, c)) == c


@pytest.mark.parametrize(
    "text, line",
    [
        ("field Q\nvalue_basis 2 1 sqrt2\ngamma0_rank 2\nomega 1 0\nomega 0 1\ngen p grading x action 1 0\n", 6),
        ("field Q\nvalue_basis 2 1 sqrt2\ngamma0_rank 2\nomega 1 0\nomega 2 0\n", 5),
        (PAIR + "bnd u w : 1@0 0\n", 9),
        (PAIR + "bnd u v : 1@0\n", 9),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(FncParseError) as exc:
        parse_fnc(text)
    assert exc.value.line == line


def test_parse_rejects_filtration_violation_with_line():
    with pytest.raises(FncParseError) as exc:
        parse_fnc(PAIR.replace("action 1 0", "action 4 0"))
    assert exc.value.line == 8
