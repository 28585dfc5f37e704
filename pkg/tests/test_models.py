import os

import pytest

from tritopos.category import FinSetCategory
from tritopos.lattice import LatticeHom, chain
from tritopos.models import (
    HValuedTripos,
    SubobjectDoctrine,
    SubsetTripos,
    doctrine_isomorphism_check,
    load_model,
    seed_objects,
)

SPECS = os.path.join(os.path.dirname(__file__), os.pardir, "modelspecs")


def test_seed_objects_sizes():
    cat = FinSetCategory()
    assert [len(a.payload) for a in seed_objects(cat)] == [1, 2, 3]
    assert [len(a.payload) for a in seed_objects(cat, 4)] == [1, 2, 3, 4]


def test_subset_isomorphic_to_chain2_valued():
    cat = FinSetCategory()
    d1 = SubsetTripos(cat)
    d2 = HValuedTripos(cat, chain(2))

    def fiber_iso(a):
        # a subset corresponds to its characteristic tuple
        return LatticeHom(
            d1.fiber(a),
            d2.fiber(a),
            lambda v: tuple("1" if p in v else "0" for p in a.payload),
            "chi",
        )

    rep = doctrine_isomorphism_check(d1, d2, seed_objects(cat)[:2], fiber_iso)
    assert rep.ok, rep.failures


def test_subset_isomorphic_to_subobject_doctrine():
    cat = FinSetCategory()
    d1 = SubsetTripos(cat)
    d2 = SubobjectDoctrine(cat)
    rep = doctrine_isomorphism_check(d1, d2, seed_objects(cat)[:2])
    assert rep.ok, rep.failures


def test_isomorphism_check_rejects_different_cardinalities():
    cat = FinSetCategory()
    d1 = SubsetTripos(cat)
    d2 = HValuedTripos(cat, chain(3))
    rep = doctrine_isomorphism_check(d1, d2, seed_objects(cat)[:2])
    assert not rep.ok
    assert rep.failures[0][0] == "fiber_cardinality"


def test_load_builtin_models():
    for name in ("finset", "chain2", "chain3", "diamond", "subobject"):
        bundle = load_model("builtin:%s" % name)
        assert bundle.seeds and not bundle.pinned


def test_load_unknown_builtin():
    with pytest.raises(ValueError):
        load_model("builtin:nonesuch")


def test_load_dict_spec_with_budget():
    bundle = load_model({"kind": "h-valued", "algebra": "chain:2"}, budget=777)
    assert bundle.base.budget == 777
    assert bundle.name == "h-valued(2)"


def test_load_document_with_algebra_file():
    bundle = load_model(os.path.join(SPECS, "diamond.json"))
    assert bundle.name == "diamond"
    assert bundle.pinned
    assert [len(a.payload) for a in bundle.seeds] == [1, 2]
    assert bundle.doctrine.h.size == 4
