import pytest

from tritopos.category import (
    FinSetCategory,
    NotEnumerable,
    Unsupported,
    check_category_laws,
    is_mono,
    verify_pullback_square,
)
from tritopos.models import seed_objects


@pytest.fixture()
def cat():
    return FinSetCategory()


def test_category_laws_on_fragment(cat):
    rep = check_category_laws(cat, seed_objects(cat))
    assert rep.ok, rep.failures


def test_hom_counts(cat):
    one, two, three = seed_objects(cat)
    assert len(list(cat.hom(two, three))) == 9
    assert len(list(cat.hom(three, two))) == 8
    assert len(list(cat.hom(three, one))) == 1
    assert cat.hom_size_bound(three, three) == 27


def test_product_projections_and_pair(cat):
    one, two, three = seed_objects(cat)
    cone = cat.product(two, three)
    assert len(cone.obj.payload) == 6
    for f in cat.hom(one, two):
        for g in cat.hom(one, three):
            m = cat.pair(f, g)
            assert cat.mor_equal(cat.compose(cone.p1, m), f)
            assert cat.mor_equal(cat.compose(cone.p2, m), g)


def test_product_mediator_unique(cat):
    one, two, three = seed_objects(cat)
    cone = cat.product(two, three)
    f = next(iter(cat.hom(one, two)))
    g = next(iter(cat.hom(one, three)))
    m = cat.pair(f, g)
    others = [
        k
        for k in cat.hom(one, cone.obj)
        if cat.mor_equal(cat.compose(cone.p1, k), f)
        and cat.mor_equal(cat.compose(cone.p2, k), g)
    ]
    assert others == [m]


def test_product3_nests_left(cat):
    one, two, three = seed_objects(cat)
    obj, p1, p2, p3 = cat.product3(one, two, three)
    assert obj == cat.product(cat.product(one, two).obj, three).obj
    assert p1.cod == one and p2.cod == two and p3.cod == three


def test_factors_roundtrip(cat):
    two, three = seed_objects(cat)[1:]
    cone = cat.product(two, three)
    assert cat.factors(cone.obj) == (two, three)
    with pytest.raises(Unsupported):
        cat.factors(two)


def test_is_mono(cat):
    one, two, three = seed_objects(cat)
    inject = cat.make_mor(two, three, ("c1", "c2"))
    collapse = cat.make_mor(two, one, ("a1", "a1"))
    objs = [one, two, three]
    assert is_mono(cat, inject, objs)
    assert not is_mono(cat, collapse, objs)


def test_budget_guard_on_products():
    cat = FinSetCategory(budget=10)
    a = cat.make_obj(tuple("p%d" % i for i in range(4)))
    with pytest.raises(NotEnumerable):
        cat.product(a, a)


def test_equalizer_carves_agreement(cat):
    one, two, three = seed_objects(cat)
    f = cat.make_mor(three, two, ("b1", "b1", "b2"))
    g = cat.make_mor(three, two, ("b1", "b2", "b2"))
    m = cat.equalizer(f, g)
    assert m.dom.payload == ("c1", "c3")
    assert cat.mor_equal(cat.compose(f, m), cat.compose(g, m))


def test_pullback_square_verifies(cat):
    one, two, three = seed_objects(cat)
    f = cat.make_mor(three, two, ("b1", "b1", "b2"))
    g = cat.make_mor(one, two, ("b1",))
    sq = cat.pullback(f, g)
    # the apex picks out the fiber over b1
    assert len(sq.apex.payload) == 2
    rep = verify_pullback_square(cat, sq, [one, two, three])
    assert rep.ok, rep.failures
