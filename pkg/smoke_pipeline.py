import sys, time
sys.path.insert(0, "src")

from tritopos.lattice import chain
from tritopos.models import SubsetTripos, HValuedTripos, seed_objects
from tritopos.category import FinSetCategory
from tritopos.completions import tripos_to_topos, extend_along_unit
from tritopos.doctrine import (
    doctrine_battery, check_logical_morphism, verify_comprehension,
    verify_quotient, check_extensional, check_cauchy_complete,
    has_strong_power_objects, doctrine_morphisms_agree, safe_hom,
    is_equivalence_relation,
)
from tritopos.category import check_category_laws, NotEnumerable
from tritopos.report import all_ok, first_failure


def show(tag, reports):
    if not isinstance(reports, list):
        reports = [reports]
    bad = first_failure(reports)
    n = len(reports)
    if bad is None:
        print(f"  OK   {tag} ({n} checks)")
    else:
        print(f"  FAIL {tag}: {bad.law} @ {bad.domain}: {bad.failures[:2]}")
        raise SystemExit(1)


def run(name, model, nseeds, sizes):
    print(f"== {name} ==")
    t0 = time.time()
    seeds = [model.base.make_obj(tuple(f"{c}{i+1}" for i in range(k)))
             for c, k in zip("abcde", sizes)][:nseeds]
    pipe = tripos_to_topos(model, seeds)
    print(f"  built pipeline in {time.time()-t0:.1f}s")

    prev_seeds = pipe.model_seeds
    for st in pipe.stages:
        d = st.doctrine
        t1 = time.time()
        show(f"stage {st.kind}: category laws",
             check_category_laws(d.base, st.seeds, budget=20000))
        show(f"stage {st.kind}: battery",
             doctrine_battery(d, st.seeds, budget=20000))
        show(f"stage {st.kind}: unit is logical",
             check_logical_morphism(st.unit, prev_seeds, budget=20000))
        print(f"  stage {st.kind} checked in {time.time()-t1:.1f}s")
        prev_seeds = st.seeds

    # stage-specific guarantees
    dc = pipe.stage("c").doctrine
    sc = pipe.stage("c").seeds
    reps = []
    for a in sc:
        fib = dc.fiber(a)
        for v in fib.iter_elements():
            reps += [verify_comprehension(dc, dc.formula(a, v), sc, budget=20000)]
    show("stage c: comprehension UP", reps)

    dq = pipe.stage("q").doctrine
    sq = pipe.stage("q").seeds
    reps = []
    nrel = 0
    for a in sq:
        sq2 = dq.base.product(a, a).obj
        fib = dq.fiber(sq2)
        for v in fib.iter_elements():
            rho = dq.formula(sq2, v)
            if not is_equivalence_relation(dq, rho):
                continue
            nrel += 1
            reps += [verify_quotient(dq, rho, sq, budget=20000)]
            if nrel >= 6:
                break
        if nrel >= 6:
            break
    show(f"stage q: quotient UP ({nrel} relations)", reps)

    de = pipe.stage("e").doctrine
    show("stage e: extensional", check_extensional(de, pipe.stage("e").seeds, budget=20000))

    dl = pipe.final
    show("stage l: cauchy complete", check_cauchy_complete(dl, pipe.final_seeds, budget=20000))
    show("stage l: extensional", check_extensional(dl, pipe.final_seeds, budget=20000))

    # extension along units: transport each inner seed, check triangle
    for st in pipe.stages:
        inner_unit = st.unit
        ext = extend_along_unit(st.kind, inner_unit, st.doctrine)
        # triangle: ext . unit == unit  (on objects it is the same map here;
        # the real content is that ext is defined on all completed objects)
        for a in st.seeds:
            ext.obj_map(a)
    print("  extension functors constructed at every stage")

    print(f"  total {time.time()-t0:.1f}s")
    print()
    return pipe


pipe_s = run("subset model", SubsetTripos(FinSetCategory()), 2, [1, 2, 3])
pipe_3 = run("3-chain h-valued", HValuedTripos(FinSetCategory(), chain(3)), 2, [1, 2, 3])

# strong powers: raw models lack them (except subset), final stage must have them
print("== strong power objects ==")
for nm, pipe in (("subset", pipe_s), ("chain3", pipe_3)):
    d0 = pipe.model
    dl = pipe.final
    def probe(d, objs):
        out = []
        for a in objs:
            try:
                out.append(has_strong_power_objects(d, a))
            except NotEnumerable:
                out.append("skip")
        return out
    print(f"  {nm}: raw={probe(d0, pipe.model_seeds)} final={probe(dl, pipe.final_seeds)}")

# hom growth oracle: terminal-object candidate via transport of a 1-point object
print("== terminal transport ==")
for nm, pipe, model in (("subset", pipe_s, None),
                        ("chain3", pipe_3, None)):
    one = pipe.model.base.make_obj(("*",))
    t = pipe.transport(one)
    dl = pipe.final
    counts = []
    for x in pipe.final_seeds:
        ms = safe_hom(dl.base, x, t, 20000)
        counts.append(None if ms is None else len(ms))
    print(f"  {nm}: hom(x, T) counts = {counts}")
print("done")
