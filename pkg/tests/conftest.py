import pytest

from tritopos.category import FinSetCategory
from tritopos.completions import tripos_to_topos
from tritopos.lattice import chain, diamond
from tritopos.models import HValuedTripos, SubsetTripos, seed_objects


def build_model(name, budget=None):
    cat = FinSetCategory() if budget is None else FinSetCategory(budget=budget)
    if name == "subset":
        return SubsetTripos(cat)
    if name == "chain2":
        return HValuedTripos(cat, chain(2))
    if name == "chain3":
        return HValuedTripos(cat, chain(3))
    if name == "diamond":
        return HValuedTripos(cat, diamond())
    raise ValueError(name)


def build_pipeline(name, max_size, stages=("c", "q", "e", "l")):
    t = build_model(name)
    seeds = seed_objects(t.base, max_size)
    return t, seeds, tripos_to_topos(t, seeds, stages=stages)


# pipelines are pure and their caches append-only, so a session scope is safe
@pytest.fixture(scope="session")
def subset_pipe():
    return build_pipeline("subset", 2)


@pytest.fixture(scope="session")
def chain2_pipe():
    return build_pipeline("chain2", 2)


@pytest.fixture(scope="session")
def chain3_pipe():
    return build_pipeline("chain3", 2)


@pytest.fixture(scope="session")
def diamond_pipe():
    return build_pipeline("diamond", 2)
