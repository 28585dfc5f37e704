import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tritopos.lattice import (
    FiniteHeytingAlgebra,
    InvalidLattice,
    LatticeHom,
    chain,
    check_heyting,
    check_hom,
    diamond,
    heyting_implication,
    iff,
    left_adjoint_of,
    parse_algebra,
    print_algebra,
    right_adjoint_of,
)

ALGEBRAS = {"chain2": chain(2), "chain3": chain(3), "chain5": chain(5), "diamond": diamond()}


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_builtin_algebras_are_heyting(name):
    rep = check_heyting(ALGEBRAS[name])
    assert rep.ok, rep.failures


def pairs(h):
    return [(x, y) for x in h.elements for y in h.elements]


@given(st.sampled_from(sorted(ALGEBRAS)), st.data())
@settings(max_examples=60, deadline=None)
def test_residuation(name, data):
    h = ALGEBRAS[name]
    x = data.draw(st.sampled_from(h.elements))
    a = data.draw(st.sampled_from(h.elements))
    b = data.draw(st.sampled_from(h.elements))
    assert h.leq(h.meet(x, a), b) == h.leq(x, h.implication(a, b))


@given(st.sampled_from(sorted(ALGEBRAS)), st.data())
@settings(max_examples=60, deadline=None)
def test_distributivity(name, data):
    h = ALGEBRAS[name]
    x = data.draw(st.sampled_from(h.elements))
    y = data.draw(st.sampled_from(h.elements))
    z = data.draw(st.sampled_from(h.elements))
    assert h.meet(x, h.join(y, z)) == h.join(h.meet(x, y), h.meet(x, z))


def test_chain3_implication_table():
    h = chain(3)
    # downward implication steps to the consequent, upward is top
    assert h.implication("2", "1") == "1"
    assert h.implication("2", "0") == "0"
    assert h.implication("1", "0") == "0"
    assert h.implication("0", "2") == "2"
    assert h.implication("1", "2") == "2"
    assert h.implication("1", "1") == "2"


def test_diamond_middle_elements():
    h = diamond()
    assert h.meet("u", "v") == "0"
    assert h.join("u", "v") == "1"
    assert h.implication("u", "v") == "v"
    assert h.implication("v", "u") == "u"
    assert iff(h, "u", "v") == "0"
    assert iff(h, "u", "u") == "1"


def test_heyting_implication_recomputes_builtin():
    h = diamond()
    for x in h.elements:
        for y in h.elements:
            assert heyting_implication(h, x, y) == h.implication(x, y)


def test_parse_roundtrip():
    text = print_algebra(diamond())
    h = parse_algebra(text)
    assert print_algebra(h) == text


def test_parse_generators_only():
    h = parse_algebra(
        "elements: 0 u v 1\n"
        "leq: 0 u\nleq: 0 v\nleq: u 1\nleq: v 1\n"
        "bottom: 0\ntop: 1\n"
    )
    assert h.meet("u", "v") == "0"
    assert check_heyting(h).ok


def test_parse_rejects_non_residuated_order():
    # three incomparable middle elements make a modular, non-distributive
    # lattice; there is no relative pseudocomplement for the atoms
    m3 = (
        "elements: 0 a b c 1\n"
        "leq: 0 a\nleq: 0 b\nleq: 0 c\n"
        "leq: a 1\nleq: b 1\nleq: c 1\n"
        "bottom: 0\ntop: 1\n"
    )
    with pytest.raises(InvalidLattice) as e:
        parse_algebra(m3)
    assert "not residuated" in str(e.value)


def test_parse_rejects_partial_table():
    with pytest.raises(InvalidLattice):
        parse_algebra(
            "elements: 0 1\nleq: 0 1\nbottom: 0\ntop: 1\nimp: 1 0 1\n"
        )


def test_check_heyting_reports_broken_residuation():
    h = chain(3)
    bad_imp = {
        (x, y): ("1" if (x, y) == ("2", "0") else h.implication(x, y))
        for x in h.elements
        for y in h.elements
    }
    broken = FiniteHeytingAlgebra(
        h.poset, bottom=h.bottom, top=h.top,
        implication_table=bad_imp, validate=False,
    )
    rep = check_heyting(broken)
    assert not rep.ok
    assert any(w[0] == "residuation" and w[1:3] == ("2", "0") for w in rep.failures)


def test_galois_adjoints_of_inclusion():
    small, big = chain(2), chain(3)
    # send 0 to 0 and 1 to 2: a meet-and-join preserving embedding
    f = LatticeHom(small, big, lambda v: {"0": "0", "1": "2"}[v], "embed")
    assert check_hom(f, heyting=False).ok
    left = left_adjoint_of(f)
    right = right_adjoint_of(f)
    # the adjoints collapse the middle element in opposite directions
    assert left("1") == "1" and right("1") == "0"
    assert left("2") == "1" and right("2") == "1"
    assert left("0") == "0" and right("0") == "0"


@given(st.sampled_from(sorted(ALGEBRAS)), st.data())
@settings(max_examples=40, deadline=None)
def test_iff_symmetric_and_reflexive(name, data):
    h = ALGEBRAS[name]
    x = data.draw(st.sampled_from(h.elements))
    y = data.draw(st.sampled_from(h.elements))
    assert iff(h, x, y) == iff(h, y, x)
    assert iff(h, x, x) == h.top
