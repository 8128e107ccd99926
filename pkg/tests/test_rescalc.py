import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdiscord.rescalc import (
    CBIT,
    EBIT,
    QUBIT,
    STATE,
    TELEPORTATION,
    ResourceInequality,
    ResourceSyntaxError,
    ResourceTerm,
    compose,
    derive_qsm,
    format_inequality,
    parse_inequality,
)
from qdiscord.entropy import conditional_entropy
from qdiscord.states import bell, ghz, purify, random_density, werner


def test_parse_teleportation():
    t = parse_inequality("1 [qq] + 2 [c->c] >=! 1 [q->q]")
    assert t.exact
    assert t.lhs == (ResourceTerm(EBIT, 1.0), ResourceTerm(CBIT, 2.0))
    assert t.rhs == (ResourceTerm(QUBIT, 1.0),)
    assert t == TELEPORTATION


def test_parse_defaults_and_states():
    t = parse_inequality("<psi> + 0.5[q->q] >= [qq]")
    assert not t.exact
    assert t.lhs[0] == ResourceTerm(STATE, 1.0, "psi")
    assert t.rhs == (ResourceTerm(EBIT, 1.0),)
    assert parse_inequality("[qq] >= 0").rhs == ()
    assert parse_inequality("2.5e-1 [c->c] >= 0").lhs[0].rate == 0.25


@pytest.mark.parametrize(
    "text",
    [
        "[qq]",
        "x [qq]",
        "[qq] >= [c->c] >= [q->q]",
        "[qq] + >= [c->c]",
        "[xx] >= 0",
        "-1 [qq] >= 0",
        ">= [qq]",
        "[qq] >= ",
        "[qq] [c->c] >= 0",
        "<> >= 0",
        "2 >= [qq]",
        "[qq] >= 0 ?",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ResourceSyntaxError) as err:
        parse_inequality(text)
    assert 0 <= err.value.pos <= len(text)


def test_error_position_points_at_problem():
    with pytest.raises(ResourceSyntaxError) as err:
        parse_inequality("[qq] >= [zz]")
    assert err.value.pos == 8


def test_term_validation():
    with pytest.raises(ValueError):
        ResourceTerm(QUBIT, -1.0)
    with pytest.raises(ValueError):
        ResourceTerm(STATE, 1.0)
    with pytest.raises(ValueError):
        ResourceTerm("photon", 1.0)


def test_print_format():
    assert str(TELEPORTATION) == "1 [qq] + 2 [c->c] >=! 1 [q->q]"
    assert format_inequality(parse_inequality("[qq] >= 0")) == "1 [qq] >= 0"


rates = st.floats(0, 10, allow_nan=False, allow_infinity=False)
terms = st.one_of(
    st.builds(ResourceTerm, st.sampled_from([QUBIT, CBIT, EBIT]), rates),
    st.builds(ResourceTerm, st.just(STATE), rates, st.sampled_from(["psi", "W:Psi", "id_B"])),
)
inequalities = st.builds(
    ResourceInequality,
    st.lists(terms, max_size=4).map(tuple),
    st.lists(terms, max_size=4).map(tuple),
    st.booleans(),
)


@settings(max_examples=200)
@given(inequalities)
def test_print_parse_identity(ineq):
    assert parse_inequality(str(ineq)) == ineq
    assert str(parse_inequality(str(ineq))) == str(ineq)


def test_compose_cancels_shared_resources():
    a = parse_inequality("<psi> + 1 [q->q] >= 1 [qq]")
    out = compose(a, TELEPORTATION)
    # the ebit cancels, the qubit nets to zero
    assert out.net(EBIT) == 0
    assert out.net(QUBIT) == 0
    assert out.net(CBIT) == 2
    assert not out.exact


def test_compose_moves_remainder_across():
    a = parse_inequality("1 [q->q] >= 0.25 [qq]")
    out = compose(a, TELEPORTATION, scale=0.25)
    assert out.net(QUBIT) == pytest.approx(0.75)
    out = compose(a, TELEPORTATION, scale=2)
    assert out.net(QUBIT) == pytest.approx(-1)
    assert out.net(EBIT) == pytest.approx(1.75)
    assert all(t.rate >= 0 for t in out.lhs + out.rhs)


def test_compose_vacuous():
    empty = ResourceInequality((), (), exact=True)
    assert compose(TELEPORTATION, empty) == TELEPORTATION
    assert compose(empty, TELEPORTATION) == TELEPORTATION
    assert compose(TELEPORTATION, TELEPORTATION, scale=0) == TELEPORTATION
    with pytest.raises(ValueError):
        compose(TELEPORTATION, TELEPORTATION, scale=-1)


@pytest.mark.parametrize("a_exact,b_exact,swap", list(itertools.product([True, False], repeat=3)))
def test_strength_truth_table(a_exact, b_exact, swap):
    a = parse_inequality("1 [qq] >= 0" if not a_exact else "1 [qq] >=! 0")
    b = parse_inequality("2 [c->c] >= 0" if not b_exact else "2 [c->c] >=! 0")
    out = compose(b, a) if swap else compose(a, b)
    assert out.exact == (a_exact and b_exact)
    assert out.strength == ("exact" if a_exact and b_exact else "asymptotic")


@settings(max_examples=100)
@given(inequalities, inequalities, inequalities)
def test_compose_associative(a, b, c):
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    keys = {t.key for t in left.lhs + left.rhs + right.lhs + right.rhs}
    for k in keys:
        assert left.net(*k) == pytest.approx(right.net(*k), abs=1e-9)
    assert left.exact == right.exact


def test_derive_qsm_bell():
    d = derive_qsm(purify(bell()))
    assert d.qubit_cost == pytest.approx(-1, abs=1e-9)
    assert d.cbit_cost == pytest.approx(2, abs=1e-9)


def test_derive_qsm_ghz():
    d = derive_qsm(ghz(3, ("A", "B", "R")))
    assert d.qubit_cost == pytest.approx(0, abs=1e-12)
    assert d.cbit_cost == pytest.approx(1)
    assert d.result.net(STATE, "W_S_AB:Psi") == 1
    assert d.result.net(STATE, "id_S_Bhat:Psi") == -1


@pytest.mark.parametrize("seed", range(5))
def test_derive_qsm_matches_conditional_entropy(seed):
    rho = random_density(4, 2, seed, layout=[("A", 2), ("B", 2)])
    d = derive_qsm(purify(rho))
    assert d.qubit_cost == pytest.approx(conditional_entropy(rho, "A", "B"), abs=1e-9)


def test_derive_qsm_werner():
    rho = werner(0.7)
    d = derive_qsm(purify(rho))
    assert d.qubit_cost == pytest.approx(conditional_entropy(rho, "A", "B"), abs=1e-9)
    assert not d.result.exact


def test_derive_qsm_rejects_mixed():
    with pytest.raises(ValueError):
        derive_qsm(werner(0.5))
