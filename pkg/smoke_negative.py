import time

from tritopos.category import FinSetCategory
from tritopos.lattice import chain, diamond
from tritopos.models import HValuedTripos, seed_objects
from tritopos.completions import tripos_to_topos
from tritopos.topos import check_topos
from tritopos.report import all_ok

# refusal: a pipeline stopped before the collapse stages is not extensional,
# so the topos checker must hand back no structure and a failing report
cat = FinSetCategory()
t = HValuedTripos(cat, chain(3))
seeds = [a for a in seed_objects(cat) if len(a.payload) <= 2]
pipe = tripos_to_topos(t, seeds, stages=("c", "q"))
ts, reports = check_topos(pipe.final, pipe.final_seeds)
print("pre-collapse: topos=%s ok=%s" % (ts is not None, all_ok(reports)))
for r in reports:
    if not r.ok:
        print("  refusal report:", r.check, "failures:", r.failure_count)
        for f in r.failures[:2]:
            print("   ", f)

# diamond: full pipeline, 2-point seeds, expect skips but a verdict
t0 = time.time()
cat2 = FinSetCategory()
td = HValuedTripos(cat2, diamond())
seeds2 = [a for a in seed_objects(cat2) if len(a.payload) <= 2]
piped = tripos_to_topos(td, seeds2)
ts2, reports2 = check_topos(piped.final, piped.final_seeds)
print("diamond 2pt: topos=%s ok=%s %.1fs" % (ts2 is not None, all_ok(reports2), time.time() - t0))
for r in reports2:
    if not r.ok:
        print("  bad:", r.check, r.failure_count, r.failures[:2])
    if "skipped" in r.domain:
        print("  skips:", r.check, r.domain["skipped"])
