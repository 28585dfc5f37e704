import time

from tritopos.category import FinSetCategory
from tritopos.lattice import chain, diamond
from tritopos.models import SubsetTripos, HValuedTripos, seed_objects
from tritopos.completions import tripos_to_topos
from tritopos.topos import check_topos, topos_census
from tritopos.report import all_ok, first_failure


def build(name, max_size):
    cat = FinSetCategory()
    if name == "subset":
        t = SubsetTripos(cat)
    elif name == "chain2":
        t = HValuedTripos(cat, chain(2))
    elif name == "chain3":
        t = HValuedTripos(cat, chain(3))
    elif name == "diamond":
        t = HValuedTripos(cat, diamond())
    seeds = [a for a in seed_objects(cat) if len(a.payload) <= max_size]
    return tripos_to_topos(t, seeds)


def run(label, name, max_size):
    t0 = time.time()
    pipe = build(name, max_size)
    d = pipe.final
    seeds = pipe.final_seeds
    ts, reports = check_topos(d, seeds)
    ok = ts is not None and all_ok(reports)
    print("%-14s topos=%s ok=%s %.1fs" % (label, ts is not None, ok, time.time() - t0))
    if not ok:
        ff = first_failure(reports)
        if ff is not None:
            print("  FIRST FAILURE:", ff.summary())
            for f in ff.failures[:4]:
                print("   ", f)
        for r in reports:
            if not r.ok:
                print("  bad:", r.check, r.failure_count)
    return ts, d, seeds


ts2, d2, s2 = run("chain2 2pt", "chain2", 2)
ts3, d3, s3 = run("chain3 2pt", "chain3", 2)
tss, ds, ss = run("subset 2pt", "subset", 2)

# frozen oracles: global points of power objects
from tritopos.category import NotEnumerable
from tritopos.doctrine import safe_hom


def power_points(ts, d, seeds, label):
    pts = []
    for a in seeds:
        try:
            p = ts.power(a)
            g = safe_hom(d.base, ts.terminal, p.carrier, d.base.budget)
            pts.append(None if g is None else len(g))
        except NotEnumerable:
            pts.append("refused")
    print(label, "power global points by seed size:", pts)


if ts3 is not None:
    power_points(ts3, d3, s3, "chain3")
if ts2 is not None:
    power_points(ts2, d2, s2, "chain2")
if tss is not None:
    power_points(tss, ds, ss, "subset")
