import pytest

from tritopos.doctrine import (
    Formula,
    NoGraph,
    check_adjunction,
    check_beck_chevalley,
    compose_relations,
    converse_relation,
    doctrine_battery,
    enumerate_functional,
    find_graph_morphism,
    graph_formula,
    has_strong_power_objects,
    is_equivalence_relation,
    is_functional,
    substitution_squares,
    verify_comprehension,
    verify_quotient,
    weak_power_classify,
)
from tritopos.models import seed_objects
from tritopos.report import all_ok

from conftest import build_model


@pytest.fixture(scope="module")
def subset():
    t = build_model("subset")
    return t, seed_objects(t.base)


@pytest.fixture(scope="module")
def chain3():
    t = build_model("chain3")
    return t, seed_objects(t.base)


def test_battery_subset(subset):
    t, seeds = subset
    reports = doctrine_battery(t, seeds[:2])
    assert all_ok(reports), [r.summary() for r in reports if not r.ok]


def test_battery_chain3(chain3):
    t, seeds = chain3
    reports = doctrine_battery(t, seeds[:2])
    assert all_ok(reports), [r.summary() for r in reports if not r.ok]


def test_subset_equality_is_diagonal(subset):
    t, seeds = subset
    two = seeds[1]
    assert t.equality(two).value == frozenset({("b1", "b1"), ("b2", "b2")})


def test_chain3_equality_is_diagonal(chain3):
    t, seeds = chain3
    two = seeds[1]
    # product points enumerate row-major: (b1,b1) (b1,b2) (b2,b1) (b2,b2)
    assert t.equality(two).value == ("2", "0", "0", "2")


def test_quantifiers_along_terminal_map(subset):
    t, seeds = subset
    one, two = seeds[0], seeds[1]
    bang = t.base.make_mor(two, one, ("a1", "a1"))
    assert t.exists_value(bang, frozenset({"b1"})) == frozenset({"a1"})
    assert t.exists_value(bang, frozenset()) == frozenset()
    assert t.forall_value(bang, frozenset({"b1"})) == frozenset()
    assert t.forall_value(bang, frozenset({"b1", "b2"})) == frozenset({"a1"})


def test_chain3_quantifiers_join_and_meet(chain3):
    t, seeds = chain3
    one, two = seeds[0], seeds[1]
    bang = t.base.make_mor(two, one, ("a1", "a1"))
    assert t.exists_value(bang, ("1", "2")) == ("2",)
    assert t.forall_value(bang, ("1", "2")) == ("1",)


def test_adjunction_and_beck_chevalley_spot(chain3):
    t, seeds = chain3
    two, three = seeds[1], seeds[2]
    f = t.base.make_mor(two, three, ("c1", "c3"))
    assert check_adjunction(t, f).ok
    for sq in substitution_squares(t.base, f, seeds[0]):
        assert check_beck_chevalley(t, sq).ok


def test_graph_roundtrip(subset):
    t, seeds = subset
    two, three = seeds[1], seeds[2]
    for f in t.base.hom(two, three):
        F = graph_formula(t, f)
        assert is_functional(t, F)
        assert find_graph_morphism(t, F) == f


def test_graph_of_composite_is_relational_composite(subset):
    t, seeds = subset
    one, two, three = seeds
    f = t.base.make_mor(one, two, ("b2",))
    g = t.base.make_mor(two, three, ("c1", "c3"))
    lhs = graph_formula(t, t.base.compose(g, f))
    rhs = compose_relations(t, graph_formula(t, f), graph_formula(t, g))
    assert lhs.value == rhs.value


def test_converse_is_involutive(subset):
    t, seeds = subset
    two, three = seeds[1], seeds[2]
    f = t.base.make_mor(two, three, ("c2", "c2"))
    F = graph_formula(t, f)
    back = converse_relation(t, converse_relation(t, F, pair=(two, three)), pair=(three, two))
    assert back.value == F.value


def test_equivalence_relation_predicate(subset):
    t, seeds = subset
    two = seeds[1]
    cone = t.base.product(two, two)
    diag = t.equality(two)
    total = Formula(cone.obj, t.fiber(cone.obj).top)
    lop = Formula(cone.obj, frozenset({("b1", "b1"), ("b2", "b2"), ("b1", "b2")}))
    assert is_equivalence_relation(t, diag)
    assert is_equivalence_relation(t, total)
    assert not is_equivalence_relation(t, lop)  # not symmetric


def test_classification_bijection_subset(subset):
    t, seeds = subset
    one, two = seeds[0], seeds[1]
    px, _ = t.weak_power(one)
    cone = t.base.product(one, two)
    fib = t.fiber(cone.obj)
    classifiers = set()
    for v in fib.iter_elements():
        chi = weak_power_classify(t, Formula(cone.obj, v))
        assert chi.dom == two and chi.cod == px
        classifiers.add(chi)
    assert len(classifiers) == fib.size
    assert len(list(t.base.hom(two, px))) == fib.size


def test_strong_powers_by_model(subset, chain3):
    ts, seeds_s = subset
    tc, seeds_c = chain3
    assert has_strong_power_objects(ts, seeds_s[1])
    # h-valued predicates distinct as tuples can be extensionally equal,
    # so the raw weak power is not strong
    assert not has_strong_power_objects(tc, seeds_c[1])


def test_diamond_raw_power_not_strong():
    t = build_model("diamond")
    seeds = seed_objects(t.base)
    assert not has_strong_power_objects(t, seeds[1])


def test_enumerate_functional_matches_homs(subset):
    t, seeds = subset
    two, three = seeds[1], seeds[2]
    funcs = enumerate_functional(t, two, three)
    graphs = {graph_formula(t, f).value for f in t.base.hom(two, three)}
    assert {F.value for F in funcs} == graphs
    assert len(funcs) == 9


def test_no_graph_for_partial_relation(subset):
    t, seeds = subset
    one, two = seeds[0], seeds[1]
    cone = t.base.product(one, two)
    empty = Formula(cone.obj, frozenset())
    with pytest.raises(NoGraph):
        find_graph_morphism(t, empty, pair=(one, two))


def test_native_comprehension_subset(subset):
    t, seeds = subset
    two = seeds[1]
    alpha = Formula(two, frozenset({"b1"}))
    rep = verify_comprehension(t, alpha, seeds)
    assert rep.ok, rep.failures
    assert t.comprehension(alpha).dom.payload == ("b1",)


def test_native_quotient_subset(subset):
    t, seeds = subset
    two = seeds[1]
    cone = t.base.product(two, two)
    total = Formula(cone.obj, t.fiber(cone.obj).top)
    rep = verify_quotient(t, total, seeds)
    assert rep.ok, rep.failures
    assert len(t.quotient(total).cod.payload) == 1
