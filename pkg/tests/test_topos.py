"""Checks on the completed pipeline output.

The four-stage result must carry terminal object, equalizers, power
objects and effective quotients at desk scale, and check_topos must
refuse a pre-collapse stage instead of half-building the structure.
"""

import pytest

from tritopos.category import NotEnumerable
from tritopos.doctrine import Formula
from tritopos.topos import (
    check_topos,
    equalizer,
    internal_surjectivity_check,
    strong_power_object,
    terminal_object,
    topos_census,
    verify_equalizer,
    verify_power_object,
    verify_terminal,
)


@pytest.fixture(scope="module")
def chain2_topos(chain2_pipe):
    _, _, pipe = chain2_pipe
    ts, reports = check_topos(pipe.final, pipe.final_seeds)
    return pipe, ts, reports


def by_name(reports, name):
    return [r for r in reports if r.check == name]


def test_full_battery_passes(chain2_topos):
    _, ts, reports = chain2_topos
    assert ts is not None
    for rep in reports:
        assert rep.ok, (rep.check, rep.failures[:3])
    names = {r.check for r in reports}
    assert names >= {
        "extensional",
        "cauchy_complete",
        "terminal",
        "terminal_stable",
        "equalizers",
        "pullbacks",
        "power_object",
        "power_pullbacks",
        "mono_comprehension",
        "internal_surjectivity",
        "quotient_agreement",
        "subobject_fibers",
    }
    # no silent skips on the boolean 2-point fragment
    for rep in reports:
        assert "skipped" not in rep.domain or rep.domain["skipped"] in (0, "0")


def test_terminal_is_a_unit(chain2_topos):
    pipe, ts, _ = chain2_topos
    d = pipe.final
    assert verify_terminal(d, ts.terminal, pipe.final_seeds).ok
    for a in pipe.final_seeds:
        assert len(d.base.hom(a, ts.terminal)) == 1
    assert len(d.base.hom(ts.terminal, ts.terminal)) == 1


def test_equalizer_spot(chain2_topos):
    pipe, ts, _ = chain2_topos
    d = pipe.final
    two = pipe.final_seeds[1]
    homs = d.base.hom(two, two)
    assert len(homs) == 4
    for f in homs:
        for g in homs:
            m = ts.equalizer(f, g)
            assert verify_equalizer(d, f, g, m, pipe.final_seeds).ok
    # the identity pair equalises everything: as many points as two itself
    ident = d.base.identity(two)
    m = equalizer(d, ident, ident)
    assert len(d.base.hom(ts.terminal, m.dom)) == 2


def test_power_objects_and_census(chain2_topos):
    pipe, ts, _ = chain2_topos
    d = pipe.final
    for a in pipe.final_seeds:
        assert verify_power_object(d, ts.power(a), pipe.final_seeds).ok
    census = topos_census(ts, pipe.final_seeds)
    assert isinstance(census["terminal"], str)
    rows = census["objects"]
    assert [r["global_points"] for r in rows] == [1, 2]
    assert [r["fiber_size"] for r in rows] == [2, 4]
    # predicates on 1 and 2 boolean points
    assert [r["power_global_points"] for r in rows] == [2, 4]


def test_classification_counts(chain2_topos):
    pipe, ts, _ = chain2_topos
    d = pipe.final
    one, two = pipe.final_seeds
    p2 = ts.power(two).carrier
    assert len(d.base.hom(one, p2)) == 4
    cone = d.base.product(two, two)
    assert len(d.base.hom(two, p2)) == d.fiber(cone.obj).size == 16


def test_quotients_are_internally_surjective(chain2_topos):
    pipe, _, _ = chain2_topos
    d = pipe.final
    two = pipe.final_seeds[1]
    cone = d.base.product(two, two)
    fib = d.fiber(cone.obj)
    for v in (d.equality(two).value, fib.top):
        assert internal_surjectivity_check(d, Formula(cone.obj, v))


def test_pre_collapse_stage_is_refused(chain2_pipe):
    _, _, pipe = chain2_pipe
    st = pipe.stage("q")
    ts, reports = check_topos(st.doctrine, st.seeds)
    assert ts is None
    ext = by_name(reports, "extensional")
    assert ext and not ext[0].ok


def test_chain3_power_of_a_point_has_three_points(chain3_pipe):
    _, _, pipe = chain3_pipe
    d = pipe.final
    one = pipe.final_seeds[0]
    term = terminal_object(d, pipe.final_seeds)
    sp = strong_power_object(d, one)
    # subterminals of a point = elements of the 3-chain
    assert len(d.base.hom(term, sp.carrier)) == 3


def test_chain3_two_point_power_is_refused(chain3_pipe):
    _, _, pipe = chain3_pipe
    with pytest.raises(NotEnumerable):
        strong_power_object(pipe.final, pipe.final_seeds[1])


def test_diamond_homs_grow_at_the_last_stage(diamond_pipe):
    t, seeds, pipe = diamond_pipe
    counts = [len(t.base.hom(seeds[0], seeds[1]))]
    a, b = seeds
    for st in pipe.stages:
        a, b = st.unit.obj_map(a), st.unit.obj_map(b)
        counts.append(len(st.doctrine.base.hom(a, b)))
    # the cauchy stage realises the two non-crisp functional formulas
    assert counts == [2, 2, 2, 2, 4]
