"""Concrete triposes over finite sets, plus the model-spec loader.

Three flavours:

  * SubsetTripos: fibers are powersets of the underlying points, with
    native comprehension, quotient and classifier capabilities.
  * HValuedTripos: fibers are H-valued predicate tuples for an
    arbitrary finite Heyting algebra H; no native capabilities, so the
    generic completion machinery does all the work.
  * SubobjectDoctrine: fibers are canonical subobject representatives,
    reindexing is computed by actual pullbacks and the quantifiers are
    found by Galois adjoint search.  Deliberately the slow road; it
    exists to cross-check the direct models.

Model specs are small JSON documents (or "builtin:" shorthands) naming
the kind, the truth-value algebra and the seed objects.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field

from .category import FinSetCategory, Mor
from .doctrine import (
    DoctrineMorphism,
    Formula,
    PointwiseData,
    Tripos,
    check_logical_morphism,
)
from .lattice import (
    LatticeHom,
    PowerHeyting,
    PowersetHeyting,
    chain,
    diamond,
    left_adjoint_of,
    parse_algebra,
    right_adjoint_of,
)
from .report import ValidationReport


class SubsetTripos(Tripos):
    """Subsets-of-points tripos over finite sets.

    A predicate over A is a frozenset of points; reindexing is preimage,
    exists is image, forall is the universal image.  Comprehension,
    quotient and classifier all have native constructions here, so the
    completion stages can transport them.
    """

    def __init__(self, base):
        super().__init__(base)
        two = chain(2)
        self.pointwise = PointwiseData(
            h=two,
            points=base.points,
            value_at=lambda a, v, p: two.top if p in v else two.bottom,
            build=lambda a, fn: frozenset(
                p for p in base.points(a) if fn(p) != two.bottom
            ),
        )

    def _make_fiber(self, a):
        return PowersetHeyting(self.base.points(a))

    def _reindex_value(self, f, v):
        return frozenset(x for x, y in zip(f.dom.payload, f.payload) if y in v)

    def exists_value(self, f, v):
        return frozenset(y for x, y in zip(f.dom.payload, f.payload) if x in v)

    def forall_value(self, f, v):
        pre = {y: [] for y in f.cod.payload}
        for x, y in zip(f.dom.payload, f.payload):
            pre[y].append(x)
        return frozenset(y for y in f.cod.payload if all(x in v for x in pre[y]))

    def _make_weak_power(self, a):
        fib = self.fiber(a)
        px = self.base.make_obj(tuple(fib.iter_elements()))
        cone = self.base.product(a, px)
        mem = frozenset((x, s) for (x, s) in cone.obj.payload if x in s)
        return px, Formula(cone.obj, mem)

    def classify(self, gamma):
        x, y = self.base.factors(gamma.over)
        px, _ = self.weak_power(x)
        images = tuple(
            frozenset(p for p in x.payload if (p, q) in gamma.value) for q in y.payload
        )
        return self.base.make_mor(y, px, images)

    # -- native capabilities -------------------------------------------------
    def comprehension(self, alpha):
        sub = self.base.make_obj(tuple(p for p in alpha.over.payload if p in alpha.value))
        return Mor(self.base.kind, sub, alpha.over, sub.payload)

    def comprehension_factor(self, f, alpha):
        m = self.comprehension(alpha)
        return Mor(self.base.kind, f.dom, m.dom, f.payload)

    def quotient(self, rho):
        a, _ = self.base.factors(rho.over)
        classes = []
        table = []
        for x in a.payload:
            cls = frozenset(y for y in a.payload if (x, y) in rho.value)
            if cls not in classes:
                classes.append(cls)
            table.append(cls)
        q = self.base.make_obj(tuple(classes))
        return Mor(self.base.kind, a, q, tuple(table))

    def quotient_factor(self, rho, f):
        qm = self.quotient(rho)
        lookup = dict(zip(qm.dom.payload, f.payload))
        images = tuple(lookup[min(cls, key=qm.dom.payload.index)] for cls in qm.cod.payload)
        return Mor(self.base.kind, qm.cod, f.cod, images)


class HValuedTripos(Tripos):
    """H-valued predicates over finite sets for a finite Heyting algebra H.

    A predicate over A is a tuple of H-values indexed by the point order
    of A.  Reindexing is precomposition; exists and forall are the join
    and meet over preimages.  There are no native capability methods, by
    design: this model exercises every generic construction.
    """

    def __init__(self, base, h):
        super().__init__(base)
        self.h = h
        self._positions = {}
        self._reidx_tables = {}
        self._group_tables = {}
        self.pointwise = PointwiseData(
            h=h,
            points=base.points,
            value_at=lambda a, v, p: v[self._pos(a)[p]],
            build=lambda a, fn: tuple(fn(p) for p in base.points(a)),
        )

    def _pos(self, a):
        got = self._positions.get(a)
        if got is None:
            got = {p: i for i, p in enumerate(a.payload)}
            self._positions[a] = got
        return got

    def _make_fiber(self, a):
        return PowerHeyting(self.h, a.payload)

    def _reindex_value(self, f, v):
        idx = self._reidx_tables.get(f)
        if idx is None:
            pos = self._pos(f.cod)
            idx = tuple(pos[y] for y in f.payload)
            self._reidx_tables[f] = idx
        return tuple(v[i] for i in idx)

    def _groups(self, f):
        got = self._group_tables.get(f)
        if got is None:
            pre = {y: [] for y in f.cod.payload}
            for i, y in enumerate(f.payload):
                pre[y].append(i)
            got = tuple(tuple(pre[y]) for y in f.cod.payload)
            self._group_tables[f] = got
        return got

    def exists_value(self, f, v):
        h = self.h
        out = []
        for grp in self._groups(f):
            acc = h.bottom
            for i in grp:
                acc = h.join(acc, v[i])
            out.append(acc)
        return tuple(out)

    def forall_value(self, f, v):
        h = self.h
        out = []
        for grp in self._groups(f):
            acc = h.top
            for i in grp:
                acc = h.meet(acc, v[i])
            out.append(acc)
        return tuple(out)

    def _make_weak_power(self, a):
        helems = tuple(self.h.iter_elements())
        tuples = tuple(itertools.product(helems, repeat=len(a.payload)))
        px = self.base.make_obj(tuples)
        cone = self.base.product(a, px)
        pos = self._pos(a)
        mem = tuple(t[pos[x]] for (x, t) in cone.obj.payload)
        return px, Formula(cone.obj, mem)

    def classify(self, gamma):
        x, y = self.base.factors(gamma.over)
        px, _ = self.weak_power(x)
        cone = self.base.product(x, y)
        pos = self._pos(cone.obj)
        images = tuple(
            tuple(gamma.value[pos[(p, q)]] for p in x.payload) for q in y.payload
        )
        return self.base.make_mor(y, px, images)


class SubobjectDoctrine(Tripos):
    """Subobject tripos over finite sets, computed the categorical way.

    Fiber elements are the canonical representatives of subobject
    classes (point subsets standing for their inclusion monos).
    Reindexing pulls the representative mono back along the map with the
    category's own pullback; the quantifiers are the Galois adjoints of
    reindexing found by order search, not by any set formula.  Slow on
    purpose: it cross-checks SubsetTripos through
    doctrine_isomorphism_check.
    """

    def __init__(self, base):
        super().__init__(base)
        self._adjoints = {}
        self._reindex_memo = {}

    def _make_fiber(self, a):
        return PowersetHeyting(self.base.points(a))

    def _mono_of(self, a, v):
        sub = self.base.make_obj(tuple(p for p in a.payload if p in v))
        return Mor(self.base.kind, sub, a, sub.payload)

    def _reindex_value(self, f, v):
        memo = self._reindex_memo.setdefault(f, {})
        got = memo.get(v)
        if got is None:
            sq = self.base.pullback(f, self._mono_of(f.cod, v))
            got = frozenset(sq.to_f.payload)
            memo[v] = got
        return got

    def _adjoint(self, f, side):
        key = (f, side)
        got = self._adjoints.get(key)
        if got is None:
            r = self.reindex(f)
            got = left_adjoint_of(r) if side == "left" else right_adjoint_of(r)
            self._adjoints[key] = got
        return got

    def exists_value(self, f, v):
        return self._adjoint(f, "left")(v)

    def forall_value(self, f, v):
        return self._adjoint(f, "right")(v)

    def _make_weak_power(self, a):
        fib = self.fiber(a)
        px = self.base.make_obj(tuple(fib.iter_elements()))
        cone = self.base.product(a, px)
        mem = frozenset((x, s) for (x, s) in cone.obj.payload if x in s)
        return px, Formula(cone.obj, mem)

    def classify(self, gamma):
        x, y = self.base.factors(gamma.over)
        px, _ = self.weak_power(x)
        images = tuple(
            frozenset(p for p in x.payload if (p, q) in gamma.value) for q in y.payload
        )
        return self.base.make_mor(y, px, images)


def seed_objects(cat, max_size=3):
    """The standard desk-scale fragment: one carrier per size from one
    point up to max_size points."""
    out = []
    for n in range(1, max_size + 1):
        tag = chr(ord("a") + (n - 1) % 26)
        out.append(cat.make_obj(tuple("%s%d" % (tag, i + 1) for i in range(n))))
    return out


def doctrine_isomorphism_check(d1, d2, objs, fiber_iso=None, budget=None):
    """Is the given fiberwise map an isomorphism of doctrines over the
    shared base?  Cardinality first (cheap negative), then bijectivity,
    then the full logical-morphism battery on the induced morphism.
    """
    budget = budget or d1.base.budget
    rep = ValidationReport(
        "doctrine_isomorphism",
        "fiberwise bijection forming a logical morphism over the same base",
        {"objects": len(objs)},
    )
    if d1.base is not d2.base:
        rep.fail("different_base", d1.base.kind, d2.base.kind)
        return rep
    if fiber_iso is None:
        fiber_iso = lambda a: LatticeHom(d1.fiber(a), d2.fiber(a), lambda v: v, "id")
    for a in objs:
        f1, f2 = d1.fiber(a), d2.fiber(a)
        if f1.size_bound != f2.size_bound:
            rep.fail("fiber_cardinality", a, f1.size_bound, f2.size_bound)
            return rep
        if f1.size_bound > budget:
            continue
        iso = fiber_iso(a)
        seen = set()
        for v in f1.iter_elements():
            w = iso(v)
            if not f2.contains(w):
                rep.fail("not_into", a, v, w)
            seen.add(w)
        if len(seen) != f1.size_bound:
            rep.fail("not_bijective", a, len(seen), f1.size_bound)
    m = DoctrineMorphism(
        d1, d2, lambda a: a, lambda f: f, fiber_iso, name="iso-candidate"
    )
    rep.merge(check_logical_morphism(m, objs, budget=budget))
    return rep


# ---------------------------------------------------------------------------
# model specs


@dataclass
class ModelBundle:
    name: str
    doctrine: Tripos
    base: FinSetCategory
    seeds: list = field(default_factory=list)
    pinned: bool = False  # seeds came from the model document, not the default fragment


BUILTIN_SPECS = {
    "finset": {"kind": "finset-subset"},
    "chain2": {"kind": "h-valued", "algebra": "chain:2"},
    "chain3": {"kind": "h-valued", "algebra": "chain:3"},
    "diamond": {"kind": "h-valued", "algebra": "diamond"},
    "subobject": {"kind": "subobject"},
}


def _load_algebra(spec, base_dir):
    if isinstance(spec, str):
        if spec.startswith("chain:"):
            return chain(int(spec.split(":", 1)[1]))
        if spec == "diamond":
            return diamond()
        raise ValueError("unknown algebra shorthand %r" % spec)
    if isinstance(spec, dict):
        if "text" in spec:
            return parse_algebra(spec["text"])
        if "path" in spec:
            path = spec["path"]
            if base_dir and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            with open(path, "r", encoding="utf-8") as fh:
                return parse_algebra(fh.read())
    raise ValueError("algebra wants 'chain:N', 'diamond', {'text': ...} or {'path': ...}")


def load_model(spec, budget=None, base_dir=None):
    """Build a ModelBundle from a spec dict, a JSON file path or a
    "builtin:<name>" shorthand."""
    if isinstance(spec, str):
        if spec.startswith("builtin:"):
            name = spec.split(":", 1)[1]
            if name not in BUILTIN_SPECS:
                raise ValueError(
                    "unknown builtin %r (have: %s)" % (name, ", ".join(sorted(BUILTIN_SPECS)))
                )
            doc = dict(BUILTIN_SPECS[name])
            doc.setdefault("name", name)
            return load_model(doc, budget=budget)
        base_dir = os.path.dirname(os.path.abspath(spec))
        with open(spec, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return load_model(doc, budget=budget, base_dir=base_dir)
    if not isinstance(spec, dict):
        raise ValueError("model spec must be a dict, a path or builtin:<name>")
    kind = spec.get("kind")
    kwargs = {} if budget is None and "budget" not in spec else {
        "budget": budget if budget is not None else spec["budget"]
    }
    base = FinSetCategory(**kwargs)
    if kind == "finset-subset":
        doctrine = SubsetTripos(base)
        default_name = "finset-subset"
    elif kind == "h-valued":
        h = _load_algebra(spec.get("algebra"), base_dir)
        doctrine = HValuedTripos(base, h)
        default_name = "h-valued(%d)" % h.size
    elif kind == "subobject":
        doctrine = SubobjectDoctrine(base)
        default_name = "subobject"
    else:
        raise ValueError("unknown model kind %r" % kind)
    if "seeds" in spec:
        seeds = [base.make_obj(tuple(points)) for points in spec["seeds"]]
        pinned = True
    else:
        seeds = seed_objects(base)
        pinned = False
    return ModelBundle(spec.get("name", default_name), doctrine, base, seeds, pinned)
