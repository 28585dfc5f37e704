"""The four free completions and the staged pipeline built from them.

Each stage wraps the previous doctrine in a new category plus a new
doctrine over it:

  * comprehension stage ("c"): objects carry a predicate, fibers become
    downsets of it; every predicate acquires a comprehension mono.
  * quotient stage ("q"): objects carry an internal equivalence
    relation, fibers shrink to descent-closed predicates; every
    equivalence relation acquires an effective quotient.
  * extensional collapse ("e"): morphisms are identified when the
    doctrine proves them equal, making internal and external equality
    coincide; equalizers and pullbacks appear here.
  * cauchy stage ("l"): morphisms become functional formulas, so every
    total single-valued relation is the graph of exactly one morphism.

Units are logical doctrine morphisms; each completion also supports
extending a morphism along its unit when the target has the capability
the stage freely adds.  Composing all four over a tripos yields the
category whose topos structure topos.py extracts and verifies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .category import CompCategory, Mor, Obj, ProductCone, PullbackSquare, Unsupported
from .doctrine import (
    DoctrineMorphism,
    Formula,
    PointwiseData,
    Tripos,
    compose_doctrine_morphisms,
    compose_relations,
    converse_relation,
    enumerate_functional,
    find_graph_morphism,
    graph_formula,
    has_comprehensions,
    has_quotients,
    is_equivalence_relation,
    power_iff_formula,
    product_mor,
)
from .lattice import LatticeHom, SubHeyting


def _lift_pointwise(inner, unwrap):
    pw = inner.pointwise
    if pw is None:
        return None
    return PointwiseData(
        h=pw.h,
        points=lambda a: pw.points(unwrap(a)),
        value_at=lambda a, v, p: pw.value_at(unwrap(a), v, p),
        build=lambda a, fn: pw.build(unwrap(a), fn),
    )


class LazyValue:
    """Fiber element that is computed on first use.

    Product relations at the quotient stage live over the square of the
    product carrier; for the spans the cauchy stage builds around power
    objects that square runs into millions of entries while the relation
    itself is almost never consulted.  Objects whose relation is lazy
    compare and hash by identity, which is sound because product cones
    are cached per factor pair; everything that actually reads the
    relation goes through QuotCategory.relation and materialises it.
    """

    __slots__ = ("_fn", "_value", "_ready", "_tag")
    _counter = itertools.count(1)

    def __init__(self, fn):
        self._fn = fn
        self._value = None
        self._ready = False
        self._tag = next(LazyValue._counter)

    def get(self):
        if not self._ready:
            self._value = self._fn()
            self._ready = True
            self._fn = None
        return self._value

    def short(self):
        # creation order is canonical under fixed enumeration, so the tag
        # keeps object ids deterministic without forcing the value
        return "lazy#%d" % self._tag

    def __repr__(self):
        return self.short()


# relations with at most this many entries are built eagerly, which keeps
# them plain fiber values that unify in the object registry
LAZY_RELATION_CUTOFF = 250_000


# ---------------------------------------------------------------------------
# comprehension stage


class ComprCategory(CompCategory):
    """Objects (A, alpha): an inner object with a predicate over it.
    Morphisms are inner morphisms mapping the one predicate into the
    other (alpha <= f* beta)."""

    kind = "compr"

    def __init__(self, inner_doctrine):
        super().__init__(budget=inner_doctrine.base.budget)
        self.d = inner_doctrine
        self.inner = inner_doctrine.base

    def make_obj(self, inner_obj, value):
        if not self.d.fiber(inner_obj).contains(value):
            raise ValueError("predicate not in the fiber over %s" % inner_obj.short())
        return self.register(Obj(self.kind, (inner_obj, value)))

    def unwrap(self, a):
        return a.payload[0]

    def predicate(self, a):
        return a.payload[1]

    def _wrap_mor(self, dom, cod, fi):
        return Mor(self.kind, dom, cod, fi)

    def identity(self, a):
        return self._wrap_mor(a, a, self.inner.identity(self.unwrap(a)))

    def compose(self, g, f):
        self._check_compose(g, f)
        return self._wrap_mor(f.dom, g.cod, self.inner.compose(g.payload, f.payload))

    def mor_equal(self, f, g):
        return (
            f.dom == g.dom and f.cod == g.cod and self.inner.mor_equal(f.payload, g.payload)
        )

    def hom_size_bound(self, a, b):
        return self.inner.hom_size_bound(self.unwrap(a), self.unwrap(b))

    def allows(self, fi, a, b):
        alpha, beta = self.predicate(a), self.predicate(b)
        return self.d.fiber(self.unwrap(a)).leq(alpha, self.d._reindex_value(fi, beta))

    def hom_iter(self, a, b):
        for fi in self.inner.hom_iter(self.unwrap(a), self.unwrap(b)):
            if self.allows(fi, a, b):
                yield self._wrap_mor(a, b, fi)

    def _make_product(self, a, b):
        cone = self.inner.product(self.unwrap(a), self.unwrap(b))
        fib = self.d.fiber(cone.obj)
        alpha, beta = self.predicate(a), self.predicate(b)
        if alpha == self.d.fiber(self.unwrap(a)).top and beta == self.d.fiber(
            self.unwrap(b)
        ).top:
            pred = fib.top
        else:
            pred = fib.meet(
                self.d._reindex_value(cone.p1, alpha),
                self.d._reindex_value(cone.p2, beta),
            )
        obj = self.make_obj(cone.obj, pred)
        return ProductCone(
            obj, self._wrap_mor(obj, a, cone.p1), self._wrap_mor(obj, b, cone.p2)
        )

    def pair(self, f, g):
        if f.dom != g.dom:
            raise ValueError("pair: different domains")
        cone = self.product(f.cod, g.cod)
        return self._wrap_mor(f.dom, cone.obj, self.inner.pair(f.payload, g.payload))


class ComprDoctrine(Tripos):
    """Fibers are downsets of the object predicate; reindexing meets
    with it, exists passes through, forall relativises the body."""

    def __init__(self, inner, base=None):
        cat = base or ComprCategory(inner)
        super().__init__(cat)
        self.inner = inner
        self.is_tripos = inner.is_tripos
        self.pointwise = _lift_pointwise(inner, cat.unwrap)

    def _make_fiber(self, a):
        parent = self.inner.fiber(self.base.unwrap(a))
        alpha = self.base.predicate(a)
        imp = None
        if parent.is_heyting:
            imp = lambda u, v: parent.meet(parent.implication(u, v), alpha)
        return SubHeyting(
            parent, lambda v: parent.leq(v, alpha), top=alpha, implication=imp
        )

    def _reindex_value(self, f, v):
        parent = self.inner.fiber(self.base.unwrap(f.dom))
        alpha = self.base.predicate(f.dom)
        got = self.inner._reindex_value(f.payload, v)
        if alpha == parent.top:
            return got
        return parent.meet(got, alpha)

    def exists_value(self, f, v):
        return self.inner.exists_value(f.payload, v)

    def forall_value(self, f, v):
        parent = self.inner.fiber(self.base.unwrap(f.dom))
        fibb = self.inner.fiber(self.base.unwrap(f.cod))
        alpha = self.base.predicate(f.dom)
        beta = self.base.predicate(f.cod)
        body = v if alpha == parent.top else parent.implication(alpha, v)
        got = self.inner.forall_value(f.payload, body)
        if beta == fibb.top:
            return got
        return fibb.meet(got, beta)

    def _make_weak_power(self, a):
        ai = self.base.unwrap(a)
        alpha = self.base.predicate(a)
        pxi, memi = self.inner.weak_power(ai)
        cone = self.inner.base.product(ai, pxi)
        fibc = self.inner.fiber(cone.obj)
        w = self.inner.forall_value(
            cone.p2,
            fibc.implication(memi.value, self.inner._reindex_value(cone.p1, alpha)),
        )
        pxc = self.base.make_obj(pxi, w)
        prod = self.base.product(a, pxc)
        memc = fibc.meet(memi.value, self.base.predicate(prod.obj))
        return pxc, Formula(prod.obj, memc)

    def classify(self, gamma):
        a, y = self.base.factors(gamma.over)
        pxc, _ = self.weak_power(a)
        inner_prod = self.base.unwrap(gamma.over)
        mi = self.inner.classify(Formula(inner_prod, gamma.value))
        return Mor(self.base.kind, y, pxc, mi)

    # -- capabilities --------------------------------------------------------
    def comprehension(self, alpha):
        sub = self.base.make_obj(self.base.unwrap(alpha.over), alpha.value)
        return Mor(
            self.base.kind,
            sub,
            alpha.over,
            self.inner.base.identity(self.base.unwrap(alpha.over)),
        )

    def comprehension_factor(self, f, alpha):
        m = self.comprehension(alpha)
        return Mor(self.base.kind, f.dom, m.dom, f.payload)


def comprehension_completion(d):
    """The comprehension stage plus its unit A |-> (A, top)."""
    dc = ComprDoctrine(d)
    cat = dc.base

    def obj_map(a):
        return cat.make_obj(a, d.fiber(a).top)

    return dc, DoctrineMorphism(
        d,
        dc,
        obj_map,
        lambda f: Mor(cat.kind, obj_map(f.dom), obj_map(f.cod), f),
        lambda a: LatticeHom(d.fiber(a), dc.fiber(obj_map(a)), lambda v: v, "unit"),
        name="comprehension-unit",
    )


# ---------------------------------------------------------------------------
# quotient stage


class QuotCategory(CompCategory):
    """Objects (A, rho): an inner object with an internal equivalence
    relation.  Morphisms are inner morphisms respecting the relations
    (rho <= (f x f)* sigma); nothing is identified yet."""

    kind = "quot"

    def __init__(self, inner_doctrine, validate_objects=True):
        super().__init__(budget=inner_doctrine.base.budget)
        self.d = inner_doctrine
        self.inner = inner_doctrine.base
        self.validate_objects = validate_objects

    def make_obj(self, inner_obj, rho, validate=None):
        got = self._registry.get((inner_obj, rho))
        if got is not None:
            return got
        if validate if validate is not None else self.validate_objects:
            cone = self.inner.product(inner_obj, inner_obj)
            rep = is_equivalence_relation(
                self.d, Formula(cone.obj, rho), report=True
            )
            if not rep.ok:
                raise ValueError(
                    "not an equivalence relation over %s: %s"
                    % (inner_obj.short(), rep.failures[0])
                )
        return self.register(Obj(self.kind, (inner_obj, rho)))

    def unwrap(self, a):
        return a.payload[0]

    def relation(self, a):
        rho = a.payload[1]
        return rho.get() if isinstance(rho, LazyValue) else rho

    def _wrap_mor(self, dom, cod, fi):
        return Mor(self.kind, dom, cod, fi)

    def identity(self, a):
        return self._wrap_mor(a, a, self.inner.identity(self.unwrap(a)))

    def compose(self, g, f):
        self._check_compose(g, f)
        return self._wrap_mor(f.dom, g.cod, self.inner.compose(g.payload, f.payload))

    def mor_equal(self, f, g):
        return (
            f.dom == g.dom and f.cod == g.cod and self.inner.mor_equal(f.payload, g.payload)
        )

    def hom_size_bound(self, a, b):
        return self.inner.hom_size_bound(self.unwrap(a), self.unwrap(b))

    def allows(self, fi, a, b):
        cone = self.inner.product(self.unwrap(a), self.unwrap(a))
        ff = product_mor(self.inner, fi, fi)
        return self.d.fiber(cone.obj).leq(
            self.relation(a), self.d._reindex_value(ff, self.relation(b))
        )

    def hom_iter(self, a, b):
        for fi in self.inner.hom_iter(self.unwrap(a), self.unwrap(b)):
            if self.allows(fi, a, b):
                yield self._wrap_mor(a, b, fi)

    def _make_product(self, a, b):
        cone = self.inner.product(self.unwrap(a), self.unwrap(b))

        def build():
            c2 = self.inner.product(cone.obj, cone.obj)
            fib = self.d.fiber(c2.obj)
            return fib.meet(
                self.d._reindex_value(
                    product_mor(self.inner, cone.p1, cone.p1), self.relation(a)
                ),
                self.d._reindex_value(
                    product_mor(self.inner, cone.p2, cone.p2), self.relation(b)
                ),
            )

        pw = self.d.pointwise
        lazy = pw is not None and len(pw.points(cone.obj)) ** 2 > LAZY_RELATION_CUTOFF
        rel = LazyValue(build) if lazy else build()
        obj = self.make_obj(cone.obj, rel, validate=False)
        return ProductCone(
            obj, self._wrap_mor(obj, a, cone.p1), self._wrap_mor(obj, b, cone.p2)
        )

    def pair(self, f, g):
        if f.dom != g.dom:
            raise ValueError("pair: different domains")
        cone = self.product(f.cod, g.cod)
        return self._wrap_mor(f.dom, cone.obj, self.inner.pair(f.payload, g.payload))


class QuotDoctrine(Tripos):
    """Fibers shrink to descent-closed predicates; the quantifiers
    saturate along the codomain relation so they land back inside."""

    def __init__(self, inner, base=None):
        cat = base or QuotCategory(inner)
        super().__init__(cat)
        self.inner = inner
        self.is_tripos = inner.is_tripos
        self.pointwise = _lift_pointwise(inner, cat.unwrap)

    def _make_fiber(self, a):
        ai = self.base.unwrap(a)
        parent = self.inner.fiber(ai)
        d = self.inner

        # relation and the square product are only needed when membership
        # is actually tested; keep fiber construction cheap for the big
        # span objects whose relation stays lazy
        def descent_closed(v):
            rho = self.base.relation(a)
            cone = d.base.product(ai, ai)
            fib2 = d.fiber(cone.obj)
            lhs = fib2.meet(d._reindex_value(cone.p1, v), rho)
            return fib2.leq(lhs, d._reindex_value(cone.p2, v))

        return SubHeyting(parent, descent_closed)

    def _reindex_value(self, f, v):
        return self.inner._reindex_value(f.payload, v)

    def _span(self, f):
        """The product A x B with its two projections, for f: (A,rho) -> (B,sigma)."""
        return self.inner.base.product(
            self.base.unwrap(f.dom), self.base.unwrap(f.cod)
        )

    def exists_value(self, f, v):
        d = self.inner
        cone = self._span(f)
        fib = d.fiber(cone.obj)
        guard = d._reindex_value(
            d.base.pair(d.base.compose(f.payload, cone.p1), cone.p2),
            self.base.relation(f.cod),
        )
        return d.exists_value(cone.p2, fib.meet(guard, d._reindex_value(cone.p1, v)))

    def forall_value(self, f, v):
        d = self.inner
        cone = self._span(f)
        fib = d.fiber(cone.obj)
        guard = d._reindex_value(
            d.base.pair(d.base.compose(f.payload, cone.p1), cone.p2),
            self.base.relation(f.cod),
        )
        return d.forall_value(
            cone.p2, fib.implication(guard, d._reindex_value(cone.p1, v))
        )

    def equality(self, a):
        got = self._delta_cache.get(a)
        if got is None:
            cone = self.base.product(a, a)
            got = Formula(cone.obj, self.base.relation(a))
            self._delta_cache[a] = got
        return got

    def _make_weak_power(self, a):
        d = self.inner
        ai = self.base.unwrap(a)
        rho = self.base.relation(a)
        pxi, memi = d.weak_power(ai)
        iffv = power_iff_formula(d, ai)
        pxq = self.base.make_obj(pxi, iffv.value)
        prod = self.base.product(a, pxq)
        cap = d.base.product(ai, pxi)
        t2 = d.base.product(cap.obj, ai)
        fib_t2 = d.fiber(t2.obj)
        rho_part = d._reindex_value(
            d.base.pair(d.base.compose(cap.p1, t2.p1), t2.p2), rho
        )
        mem_part = d._reindex_value(
            d.base.pair(t2.p2, d.base.compose(cap.p2, t2.p1)), memi.value
        )
        sat = d.forall_value(t2.p1, fib_t2.implication(rho_part, mem_part))
        memq = d.fiber(cap.obj).meet(memi.value, sat)
        return pxq, Formula(prod.obj, memq)

    def classify(self, gamma):
        a, y = self.base.factors(gamma.over)
        pxq, _ = self.weak_power(a)
        mi = self.inner.classify(Formula(self.base.unwrap(gamma.over), gamma.value))
        return Mor(self.base.kind, y, pxq, mi)

    # -- capabilities --------------------------------------------------------
    def comprehension(self, phi):
        ai = self.base.unwrap(phi.over)
        rho = self.base.relation(phi.over)
        mi = self.inner.comprehension(Formula(ai, phi.value))
        mm = product_mor(self.inner.base, mi, mi)
        sub = self.base.make_obj(
            mi.dom, self.inner._reindex_value(mm, rho), validate=False
        )
        return Mor(self.base.kind, sub, phi.over, mi)

    def comprehension_factor(self, f, phi):
        m = self.comprehension(phi)
        hi = self.inner.comprehension_factor(
            f.payload, Formula(self.base.unwrap(phi.over), phi.value)
        )
        return Mor(self.base.kind, f.dom, m.dom, hi)

    def quotient(self, sigma):
        a, _ = self.base.factors(sigma.over)
        ai = self.base.unwrap(a)
        target = self.base.make_obj(ai, sigma.value)
        return Mor(self.base.kind, a, target, self.inner.base.identity(ai))

    def quotient_factor(self, sigma, f):
        q = self.quotient(sigma)
        return Mor(self.base.kind, q.cod, f.cod, f.payload)


def quotient_completion(d):
    """The quotient stage plus its unit A |-> (A, internal equality)."""
    if not has_comprehensions(d):
        raise Unsupported("quotient completion wants comprehensions in its input")
    dq = QuotDoctrine(d)
    cat = dq.base

    def obj_map(a):
        return cat.make_obj(a, d.equality(a).value, validate=False)

    return dq, DoctrineMorphism(
        d,
        dq,
        obj_map,
        lambda f: Mor(cat.kind, obj_map(f.dom), obj_map(f.cod), f),
        lambda a: LatticeHom(d.fiber(a), dq.fiber(obj_map(a)), lambda v: v, "unit"),
        name="quotient-unit",
    )


# ---------------------------------------------------------------------------
# extensional collapse


class _EqualizerPullbacks:
    """Mixin: pullback of a cospan as an equalizer of a product span."""

    def pullback(self, f, g):
        if f.cod != g.cod:
            raise ValueError("pullback wants a cospan")
        cone = self.product(f.dom, g.dom)
        m = self.equalizer(self.compose(f, cone.p1), self.compose(g, cone.p2))
        return PullbackSquare(
            m.dom, self.compose(cone.p1, m), self.compose(cone.p2, m), f, g
        )


class CollapseCategory(_EqualizerPullbacks, CompCategory):
    """Same objects as the stage below; morphisms are identified exactly
    when the doctrine proves them equal, so hom enumeration dedups by
    that internal test.  Never compare collapsed morphisms with ==."""

    kind = "extn"
    dedup_hom = True

    def __init__(self, inner_doctrine):
        super().__init__(budget=inner_doctrine.base.budget)
        self.d = inner_doctrine
        self.inner = inner_doctrine.base

    def make_obj(self, inner_obj):
        return self.register(Obj(self.kind, inner_obj))

    def unwrap(self, a):
        return a.payload

    def _wrap_mor(self, dom, cod, fi):
        return Mor(self.kind, dom, cod, fi)

    def identity(self, a):
        return self._wrap_mor(a, a, self.inner.identity(self.unwrap(a)))

    def compose(self, g, f):
        self._check_compose(g, f)
        return self._wrap_mor(f.dom, g.cod, self.inner.compose(g.payload, f.payload))

    def mor_equal(self, f, g):
        if f.dom != g.dom or f.cod != g.cod:
            return False
        if self.inner.mor_equal(f.payload, g.payload):
            return True
        d = self.d
        probe = self.inner.pair(f.payload, g.payload)
        fib = d.fiber(self.unwrap(f.dom))
        return fib.leq(
            fib.top, d._reindex_value(probe, d.equality(self.unwrap(f.cod)).value)
        )

    def hom_size_bound(self, a, b):
        return self.inner.hom_size_bound(self.unwrap(a), self.unwrap(b))

    def hom_iter(self, a, b):
        for fi in self.inner.hom_iter(self.unwrap(a), self.unwrap(b)):
            yield self._wrap_mor(a, b, fi)

    def _make_product(self, a, b):
        cone = self.inner.product(self.unwrap(a), self.unwrap(b))
        obj = self.make_obj(cone.obj)
        return ProductCone(
            obj, self._wrap_mor(obj, a, cone.p1), self._wrap_mor(obj, b, cone.p2)
        )

    def pair(self, f, g):
        if f.dom != g.dom:
            raise ValueError("pair: different domains")
        cone = self.product(f.cod, g.cod)
        return self._wrap_mor(f.dom, cone.obj, self.inner.pair(f.payload, g.payload))

    def equalizer(self, f, g):
        if f.dom != g.dom or f.cod != g.cod:
            raise ValueError("equalizer wants a parallel pair")
        d = self.d
        probe = self.inner.pair(f.payload, g.payload)
        agree = d._reindex_value(probe, d.equality(self.unwrap(f.cod)).value)
        mi = d.comprehension(Formula(self.unwrap(f.dom), agree))
        return self._wrap_mor(self.make_obj(mi.dom), f.dom, mi)


class CollapseDoctrine(Tripos):
    """Operations delegate to chosen representatives; the stage below
    guarantees they are invariant under internal equality."""

    def __init__(self, inner, base=None):
        cat = base or CollapseCategory(inner)
        super().__init__(cat)
        self.inner = inner
        self.is_tripos = inner.is_tripos
        self.pointwise = _lift_pointwise(inner, cat.unwrap)

    def _make_fiber(self, a):
        return self.inner.fiber(self.base.unwrap(a))

    def _reindex_value(self, f, v):
        return self.inner._reindex_value(f.payload, v)

    def exists_value(self, f, v):
        return self.inner.exists_value(f.payload, v)

    def forall_value(self, f, v):
        return self.inner.forall_value(f.payload, v)

    def equality(self, a):
        got = self._delta_cache.get(a)
        if got is None:
            cone = self.base.product(a, a)
            got = Formula(cone.obj, self.inner.equality(self.base.unwrap(a)).value)
            self._delta_cache[a] = got
        return got

    def _make_weak_power(self, a):
        pxi, memi = self.inner.weak_power(self.base.unwrap(a))
        pxe = self.base.make_obj(pxi)
        prod = self.base.product(a, pxe)
        return pxe, Formula(prod.obj, memi.value)

    def classify(self, gamma):
        a, y = self.base.factors(gamma.over)
        pxe, _ = self.weak_power(a)
        mi = self.inner.classify(Formula(self.base.unwrap(gamma.over), gamma.value))
        return Mor(self.base.kind, y, pxe, mi)

    def comprehension(self, phi):
        mi = self.inner.comprehension(Formula(self.base.unwrap(phi.over), phi.value))
        return Mor(self.base.kind, self.base.make_obj(mi.dom), phi.over, mi)

    def comprehension_factor(self, f, phi):
        m = self.comprehension(phi)
        hi = self.inner.comprehension_factor(
            f.payload, Formula(self.base.unwrap(phi.over), phi.value)
        )
        return Mor(self.base.kind, f.dom, m.dom, hi)

    def quotient(self, sigma):
        a, _ = self.base.factors(sigma.over)
        qi = self.inner.quotient(Formula(self.base.unwrap(sigma.over), sigma.value))
        return Mor(self.base.kind, a, self.base.make_obj(qi.cod), qi)

    def quotient_factor(self, sigma, f):
        hi = self.inner.quotient_factor(
            Formula(self.base.unwrap(sigma.over), sigma.value), f.payload
        )
        q = self.quotient(sigma)
        return Mor(self.base.kind, q.cod, f.cod, hi)


def extensional_collapse(d):
    """The collapse stage plus its identity-on-objects unit."""
    de = CollapseDoctrine(d)
    cat = de.base

    def obj_map(a):
        return cat.make_obj(a)

    return de, DoctrineMorphism(
        d,
        de,
        obj_map,
        lambda f: Mor(cat.kind, obj_map(f.dom), obj_map(f.cod), f),
        lambda a: LatticeHom(d.fiber(a), de.fiber(obj_map(a)), lambda v: v, "unit"),
        name="collapse-unit",
    )


# ---------------------------------------------------------------------------
# cauchy stage


class CauchyCategory(_EqualizerPullbacks, CompCategory):
    """Morphisms are functional formulas: total single-valued relations.
    Identity is internal equality, composition is relational."""

    kind = "cchy"

    def __init__(self, inner_doctrine):
        super().__init__(budget=inner_doctrine.base.budget)
        self.d = inner_doctrine
        self.inner = inner_doctrine.base
        # payload -> inner morphism, for morphisms known to be graphs
        self._graphs = {}

    def make_obj(self, inner_obj):
        return self.register(Obj(self.kind, inner_obj))

    def unwrap(self, a):
        return a.payload

    def graph_of(self, f):
        """The stage morphism whose payload is the graph of an inner morphism."""
        g = graph_formula(self.d, f)
        m = Mor(self.kind, self.make_obj(f.dom), self.make_obj(f.cod), g.value)
        self._graphs.setdefault((m.dom, m.cod, m.payload), f)
        return m

    def inner_of(self, f):
        """The inner morphism whose graph this is, when one is on record."""
        return self._graphs.get((f.dom, f.cod, f.payload))

    def formula_of(self, f):
        cone = self.inner.product(self.unwrap(f.dom), self.unwrap(f.cod))
        return Formula(cone.obj, f.payload)

    def identity(self, a):
        m = Mor(self.kind, a, a, self.d.equality(self.unwrap(a)).value)
        self._graphs.setdefault(
            (m.dom, m.cod, m.payload), self.inner.identity(self.unwrap(a))
        )
        return m

    def compose(self, g, f):
        self._check_compose(g, f)
        # graphs compose as their inner morphisms do, so skip the
        # relational route when both factors are on record
        if self.d.pointwise is not None:
            fi, gi = self.inner_of(f), self.inner_of(g)
            if fi is not None and gi is not None:
                return self.graph_of(self.inner.compose(gi, fi))
        ends = (self.unwrap(f.dom), self.unwrap(f.cod), self.unwrap(g.cod))
        out = compose_relations(self.d, self.formula_of(f), self.formula_of(g), ends=ends)
        return Mor(self.kind, f.dom, g.cod, out.value)

    def mor_equal(self, f, g):
        return f == g

    def hom_size_bound(self, a, b):
        pw = self.d.pointwise
        ai, bi = self.unwrap(a), self.unwrap(b)
        if pw is not None:
            rows = pw.h.size ** len(pw.points(bi))
            return rows * max(len(pw.points(ai)), 1)
        return self.d.fiber(self.inner.product(ai, bi).obj).size_bound

    def hom_iter(self, a, b):
        for F in enumerate_functional(self.d, self.unwrap(a), self.unwrap(b)):
            yield Mor(self.kind, a, b, F.value)

    def _make_product(self, a, b):
        cone = self.inner.product(self.unwrap(a), self.unwrap(b))
        obj = self.make_obj(cone.obj)
        p1 = self.graph_of(cone.p1)
        p2 = self.graph_of(cone.p2)
        return ProductCone(
            obj,
            Mor(self.kind, obj, a, p1.payload),
            Mor(self.kind, obj, b, p2.payload),
        )

    def pair(self, f, g):
        if f.dom != g.dom:
            raise ValueError("pair: different domains")
        if self.d.pointwise is not None:
            fi, gi = self.inner_of(f), self.inner_of(g)
            if fi is not None and gi is not None:
                return self.graph_of(self.inner.pair(fi, gi))
        d = self.d
        cone = self.product(f.cod, g.cod)
        yi = self.unwrap(f.dom)
        abi = self.unwrap(cone.obj)
        ab_cone = self.inner.product(self.unwrap(f.cod), self.unwrap(g.cod))
        big = self.inner.product(yi, abi)
        fib = d.fiber(big.obj)
        r1 = self.inner.pair(big.p1, self.inner.compose(ab_cone.p1, big.p2))
        r2 = self.inner.pair(big.p1, self.inner.compose(ab_cone.p2, big.p2))
        value = fib.meet(
            d._reindex_value(r1, f.payload), d._reindex_value(r2, g.payload)
        )
        return Mor(self.kind, f.dom, cone.obj, value)

    def equalizer(self, f, g):
        if f.dom != g.dom or f.cod != g.cod:
            raise ValueError("equalizer wants a parallel pair")
        d = self.d
        yi = self.unwrap(f.dom)
        cone = self.inner.product(yi, self.unwrap(f.cod))
        fib = d.fiber(cone.obj)
        agree = d.exists_value(cone.p1, fib.meet(f.payload, g.payload))
        mi = d.comprehension(Formula(yi, agree))
        gm = graph_formula(d, mi)
        return Mor(self.kind, self.make_obj(mi.dom), f.dom, gm.value)


class CauchyDoctrine(Tripos):
    """Reindexing along a functional formula is relational substitution;
    the quantifiers follow the graph."""

    def __init__(self, inner, base=None):
        cat = base or CauchyCategory(inner)
        super().__init__(cat)
        self.inner = inner
        self.is_tripos = inner.is_tripos
        self.pointwise = _lift_pointwise(inner, cat.unwrap)

    def _make_fiber(self, a):
        return self.inner.fiber(self.base.unwrap(a))

    def _span(self, f):
        return self.inner.base.product(
            self.base.unwrap(f.dom), self.base.unwrap(f.cod)
        )

    def _reindex_value(self, f, v):
        d = self.inner
        fi = self._recorded(f)
        if fi is not None:
            return d._reindex_value(fi, v)
        cone = self._span(f)
        fib = d.fiber(cone.obj)
        return d.exists_value(
            cone.p1, fib.meet(f.payload, d._reindex_value(cone.p2, v))
        )

    def exists_value(self, f, v):
        d = self.inner
        fi = self._recorded(f)
        if fi is not None:
            return d.exists_value(fi, v)
        cone = self._span(f)
        fib = d.fiber(cone.obj)
        return d.exists_value(
            cone.p2, fib.meet(f.payload, d._reindex_value(cone.p1, v))
        )

    def forall_value(self, f, v):
        d = self.inner
        fi = self._recorded(f)
        if fi is not None:
            return d.forall_value(fi, v)
        cone = self._span(f)
        fib = d.fiber(cone.obj)
        return d.forall_value(
            cone.p2, fib.implication(f.payload, d._reindex_value(cone.p1, v))
        )

    def _recorded(self, f):
        """Substitution along the graph of g is substitution along g, and
        the quantifiers follow suit; worth a lookup before the span route."""
        if self.pointwise is None:
            return None
        return self.base.inner_of(f)

    def equality(self, a):
        got = self._delta_cache.get(a)
        if got is None:
            cone = self.base.product(a, a)
            got = Formula(cone.obj, self.inner.equality(self.base.unwrap(a)).value)
            self._delta_cache[a] = got
        return got

    def _make_weak_power(self, a):
        pxi, memi = self.inner.weak_power(self.base.unwrap(a))
        pxl = self.base.make_obj(pxi)
        prod = self.base.product(a, pxl)
        return pxl, Formula(prod.obj, memi.value)

    def classify(self, gamma):
        a, y = self.base.factors(gamma.over)
        pxl, _ = self.weak_power(a)
        mi = self.inner.classify(Formula(self.base.unwrap(gamma.over), gamma.value))
        g = self.base.graph_of(mi)
        return Mor(self.base.kind, y, pxl, g.payload)

    def comprehension(self, phi):
        mi = self.inner.comprehension(Formula(self.base.unwrap(phi.over), phi.value))
        g = self.base.graph_of(mi)
        return Mor(self.base.kind, g.dom, phi.over, g.payload)

    def comprehension_factor(self, f, phi):
        d = self.inner
        mi = d.comprehension(Formula(self.base.unwrap(phi.over), phi.value))
        restrict = product_mor(
            d.base, d.base.identity(self.base.unwrap(f.dom)), mi
        )
        value = d._reindex_value(restrict, f.payload)
        return Mor(self.base.kind, f.dom, self.base.make_obj(mi.dom), value)

    def quotient(self, sigma):
        a, _ = self.base.factors(sigma.over)
        qi = self.inner.quotient(Formula(self.base.unwrap(sigma.over), sigma.value))
        g = self.base.graph_of(qi)
        return Mor(self.base.kind, a, g.cod, g.payload)

    def quotient_factor(self, sigma, f):
        d = self.inner
        un = self.base.unwrap
        q = self.quotient(sigma)
        gq = self.base.formula_of(q)
        value = compose_relations(
            d,
            converse_relation(d, gq, pair=(un(q.dom), un(q.cod))),
            self.base.formula_of(f),
            ends=(un(q.cod), un(q.dom), un(f.cod)),
        ).value
        return Mor(self.base.kind, q.cod, f.cod, value)


def cauchy_completion(d):
    """The cauchy stage plus its graph unit."""
    dl = CauchyDoctrine(d)
    cat = dl.base

    def obj_map(a):
        return cat.make_obj(a)

    return dl, DoctrineMorphism(
        d,
        dl,
        obj_map,
        cat.graph_of,
        lambda a: LatticeHom(d.fiber(a), dl.fiber(obj_map(a)), lambda v: v, "unit"),
        name="cauchy-unit",
    )


# ---------------------------------------------------------------------------
# extensions along units


def extend_along_unit(kind, m, completed):
    """Extend m: D -> D' along the unit of the given completion of D.

    ``completed`` is the stage doctrine built over D.  The target D'
    must already have what the stage freely adds: comprehensions for
    "c", quotients for "q", extensionality for "e" and enumeration of
    graphs for "l".  The triangle (extension after unit agrees with m)
    is checked by the caller with doctrine_morphisms_agree.
    """
    tgt = m.target
    if kind == "c":
        if not has_comprehensions(tgt):
            raise Unsupported("extension target has no comprehensions")
        monos = {}

        def mono(ac):
            got = monos.get(ac)
            if got is None:
                ai = completed.base.unwrap(ac)
                got = tgt.comprehension(
                    Formula(m.obj_map(ai), m.fiber_map(ai)(completed.base.predicate(ac)))
                )
                monos[ac] = got
            return got

        def obj_map(ac):
            return mono(ac).dom

        def mor_map(fc):
            beta = Formula(
                m.obj_map(completed.base.unwrap(fc.cod)),
                m.fiber_map(completed.base.unwrap(fc.cod))(
                    completed.base.predicate(fc.cod)
                ),
            )
            comp = tgt.base.compose(m.mor_map(fc.payload), mono(fc.dom))
            return tgt.comprehension_factor(comp, beta)

        def fiber_map(ac):
            ai = completed.base.unwrap(ac)
            return LatticeHom(
                completed.fiber(ac),
                tgt.fiber(obj_map(ac)),
                lambda v: tgt._reindex_value(mono(ac), m.fiber_map(ai)(v)),
                "extension",
            )

        return DoctrineMorphism(completed, tgt, obj_map, mor_map, fiber_map,
                                name="extend-c(%s)" % m.name)
    if kind == "q":
        if not has_quotients(tgt):
            raise Unsupported("extension target has no quotients")
        rhos = {}
        quots = {}

        def mapped_rho(aq):
            got = rhos.get(aq)
            if got is None:
                ai = completed.base.unwrap(aq)
                cone = completed.inner.base.product(ai, ai)
                tcone = tgt.base.product(m.obj_map(ai), m.obj_map(ai))
                _, cinv = m.comparison(ai, ai)
                value = tgt._reindex_value(
                    cinv, m.fiber_map(cone.obj)(completed.base.relation(aq))
                )
                got = Formula(tcone.obj, value)
                rhos[aq] = got
            return got

        def quot(aq):
            got = quots.get(aq)
            if got is None:
                got = tgt.quotient(mapped_rho(aq))
                quots[aq] = got
            return got

        def obj_map(aq):
            return quot(aq).cod

        def mor_map(fq):
            comp = tgt.base.compose(quot(fq.cod), m.mor_map(fq.payload))
            return tgt.quotient_factor(mapped_rho(fq.dom), comp)

        def fiber_map(aq):
            ai = completed.base.unwrap(aq)
            return LatticeHom(
                completed.fiber(aq),
                tgt.fiber(obj_map(aq)),
                lambda v: tgt.exists_value(quot(aq), m.fiber_map(ai)(v)),
                "extension",
            )

        return DoctrineMorphism(completed, tgt, obj_map, mor_map, fiber_map,
                                name="extend-q(%s)" % m.name)
    if kind == "e":

        def obj_map(ae):
            return m.obj_map(completed.base.unwrap(ae))

        return DoctrineMorphism(
            completed,
            tgt,
            obj_map,
            lambda fe: m.mor_map(fe.payload),
            lambda ae: m.fiber_map(completed.base.unwrap(ae)),
            name="extend-e(%s)" % m.name,
        )
    if kind == "l":

        def obj_map(al):
            return m.obj_map(completed.base.unwrap(al))

        def mor_map(fl):
            ai = completed.base.unwrap(fl.dom)
            bi = completed.base.unwrap(fl.cod)
            cone = completed.inner.base.product(ai, bi)
            mapped = m.fiber_map(cone.obj)(fl.payload)
            _, cinv = m.comparison(ai, bi)
            tcone = tgt.base.product(m.obj_map(ai), m.obj_map(bi))
            value = tgt._reindex_value(cinv, mapped)
            return find_graph_morphism(
                tgt, Formula(tcone.obj, value), pair=(m.obj_map(ai), m.obj_map(bi))
            )

        return DoctrineMorphism(
            completed,
            tgt,
            obj_map,
            mor_map,
            lambda al: m.fiber_map(completed.base.unwrap(al)),
            name="extend-l(%s)" % m.name,
        )
    raise ValueError("unknown completion kind %r" % kind)


# ---------------------------------------------------------------------------
# the staged pipeline


STAGE_ORDER = ("c", "q", "e", "l")

STAGE_BUILDERS = {
    "c": comprehension_completion,
    "q": quotient_completion,
    "e": extensional_collapse,
    "l": cauchy_completion,
}


@dataclass
class PipelineStage:
    kind: str
    doctrine: Tripos
    unit: DoctrineMorphism
    seeds: list = field(default_factory=list)


@dataclass
class Pipeline:
    model: Tripos
    model_seeds: list
    stages: list

    @property
    def final(self):
        return self.stages[-1].doctrine if self.stages else self.model

    @property
    def final_seeds(self):
        return self.stages[-1].seeds if self.stages else self.model_seeds

    def stage(self, kind):
        for st in self.stages:
            if st.kind == kind:
                return st
        raise KeyError("pipeline has no stage %r" % kind)

    def composed_unit(self):
        if not self.stages:
            raise ValueError("empty pipeline has no unit")
        out = self.stages[0].unit
        for st in self.stages[1:]:
            out = compose_doctrine_morphisms(st.unit, out, name="pipeline-unit")
        return out

    def transport(self, a):
        """Carry a model object to the last stage along the units."""
        for st in self.stages:
            a = st.unit.obj_map(a)
        return a


def tripos_to_topos(model, seeds, stages=STAGE_ORDER):
    """Run the staged construction.  ``stages`` must be a prefix of
    c, q, e, l; the full chain turns a tripos into the category the
    topos checks run against."""
    stages = tuple(stages)
    if stages != STAGE_ORDER[: len(stages)]:
        raise ValueError(
            "stages must be a prefix of %s, got %s" % (STAGE_ORDER, stages)
        )
    cur, cur_seeds = model, list(seeds)
    built = []
    for k in stages:
        dnew, unit = STAGE_BUILDERS[k](cur)
        cur_seeds = [unit.obj_map(a) for a in cur_seeds]
        built.append(PipelineStage(k, dnew, unit, cur_seeds))
        cur = dnew
    return Pipeline(model, list(seeds), built)
