"""Computable finite categories with chosen binary products.

Objects and morphisms are immutable records whose payloads determine
identity (except where a category overrides ``mor_equal``, as the
extensional collapse does).  Every category keeps an append-only
registry of the objects it has built, a deterministic product cache,
and an enumeration budget: any operation that would scan more
candidates than the budget refuses with NotEnumerable instead of
silently grinding.

Composition is written ``compose(g, f)`` for g after f, matching the
order in "g . f".
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Any

from .lattice import BudgetExceeded
from .report import ValidationReport, render_value

DEFAULT_BUDGET = 10 ** 6


class Unsupported(Exception):
    """The category does not provide this capability."""


class DomainMismatch(Exception):
    pass


class NotEnumerable(BudgetExceeded):
    """A hom-set scan would exceed the enumeration budget."""


@dataclass(frozen=True)
class Obj:
    kind: str
    payload: Any

    def __hash__(self):
        # payloads can be long tuples; hash once, reuse forever
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.kind, self.payload))
            object.__setattr__(self, "_hash", h)
        return h

    def short(self):
        digest = hashlib.sha1(render_value(self.payload).encode()).hexdigest()[:8]
        return "%s:%s" % (self.kind, digest)

    def __repr__(self):
        return "Obj(%s)" % self.short()


@dataclass(frozen=True)
class Mor:
    kind: str
    dom: Obj
    cod: Obj
    payload: Any

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.kind, self.dom, self.cod, self.payload))
            object.__setattr__(self, "_hash", h)
        return h

    def short(self):
        digest = hashlib.sha1(render_value(self.payload).encode()).hexdigest()[:8]
        return "%s-mor:%s" % (self.kind, digest)

    def __repr__(self):
        return "Mor(%s: %s -> %s)" % (self.short(), self.dom.short(), self.cod.short())


@dataclass(frozen=True)
class ProductCone:
    obj: Obj
    p1: Mor
    p2: Mor


@dataclass(frozen=True)
class PullbackSquare:
    """Commuting square p_left . ? ... legs satisfy f.to_f = g.to_g.

    apex --to_f--> dom(f) --f--> cod
    apex --to_g--> dom(g) --g--> cod
    """

    apex: Obj
    to_f: Mor
    to_g: Mor
    f: Mor
    g: Mor


class CompCategory:
    """Base class: registry, budget, derived helpers.

    Subclasses implement identity/compose/mor_equal/hom_iter/
    hom_size_bound/product/pair and may add equalizer, pullback and
    points.  ``hom`` wraps hom_iter with the budget guard and (for
    kinds whose morphism equality is coarser than payload equality) a
    quadratic dedup.
    """

    kind = "abstract"
    dedup_hom = False

    def __init__(self, budget=DEFAULT_BUDGET):
        self.budget = budget
        self._registry = {}
        self._order = []
        self._products = {}
        self._factors = {}

    # -- registry ----------------------------------------------------------
    def register(self, obj):
        if obj.kind != self.kind:
            raise DomainMismatch("object kind %r in %r category" % (obj.kind, self.kind))
        got = self._registry.get(obj.payload)
        if got is None:
            self._registry[obj.payload] = obj
            self._order.append(obj)
            got = obj
        return got

    def registered(self):
        return tuple(self._order)

    # -- core ops (subclass responsibility) ---------------------------------
    def identity(self, a):
        raise NotImplementedError

    def compose(self, g, f):
        raise NotImplementedError

    def mor_equal(self, f, g):
        raise NotImplementedError

    def hom_iter(self, a, b):
        raise NotImplementedError

    def hom_size_bound(self, a, b):
        raise NotImplementedError

    def product(self, a, b):
        """Chosen product, cached; factor decompositions are remembered so
        formulas over products can recover their factors."""
        key = (a, b)
        got = self._products.get(key)
        if got is None:
            got = self._make_product(a, b)
            self._products[key] = got
            self._factors.setdefault(got.obj, []).append((a, b, got))
        return got

    def _make_product(self, a, b):
        raise NotImplementedError

    def _decomposition(self, obj):
        # degenerate carriers can be the chosen product of several pairs;
        # a lookup is only safe when the decomposition is unique
        got = self._factors.get(obj)
        if not got:
            raise Unsupported("%s was not built as a product" % obj.short())
        if len(got) > 1:
            raise Unsupported(
                "%s is the product of %d factor pairs; pass the decomposition"
                % (obj.short(), len(got))
            )
        return got[0]

    def factors(self, obj):
        got = self._decomposition(obj)
        return got[0], got[1]

    def cone_of(self, obj):
        got = self._decomposition(obj)
        return got[2]

    def pair(self, f, g):
        raise NotImplementedError

    def equalizer(self, f, g):
        raise Unsupported("%s category has no equalizers" % self.kind)

    def pullback(self, f, g):
        raise Unsupported("%s category has no pullbacks" % self.kind)

    # -- derived -------------------------------------------------------------
    def _check_compose(self, g, f):
        if f.cod != g.dom:
            raise DomainMismatch("compose: cod %r vs dom %r" % (f.cod.short(), g.dom.short()))

    def hom(self, a, b):
        bound = self.hom_size_bound(a, b)
        if bound > self.budget:
            raise NotEnumerable("hom(%s,%s)" % (a.short(), b.short()), bound, self.budget)
        out = []
        for m in self.hom_iter(a, b):
            if self.dedup_hom:
                if any(self.mor_equal(m, n) for n in out):
                    continue
            out.append(m)
        return out

    def product3(self, a, b, c):
        """Left-nested triple product with the three derived projections."""
        ab = self.product(a, b)
        abc = self.product(ab.obj, c)
        p1 = self.compose(ab.p1, abc.p1)
        p2 = self.compose(ab.p2, abc.p1)
        return abc.obj, p1, p2, abc.p2

    def pair3(self, f, g, h):
        return self.pair(self.pair(f, g), h)

    def square_from_pullback(self, f, g):
        """PullbackSquare for the cospan f: A -> C <- B :g via self.pullback."""
        return self.pullback(f, g)


class FinSetCategory(CompCategory):
    """Finite sets and all functions between them.

    Object payloads are ordered point tuples; a morphism payload is the
    tuple of image points in domain order.  Product points are ordered
    pairs in row-major order of the factor orders, so product-element
    ids are canonical and nest left.
    """

    kind = "finset"

    def make_obj(self, points):
        return self.register(Obj(self.kind, tuple(points)))

    def points(self, a):
        return a.payload

    def make_mor(self, dom, cod, images):
        images = tuple(images)
        cp = set(cod.payload)
        if len(images) != len(dom.payload) or any(y not in cp for y in images):
            raise DomainMismatch("bad function table")
        return Mor(self.kind, dom, cod, images)

    def apply(self, f, x):
        return f.payload[f.dom.payload.index(x)]

    def identity(self, a):
        return Mor(self.kind, a, a, tuple(a.payload))

    def compose(self, g, f):
        self._check_compose(g, f)
        gi = {x: y for x, y in zip(g.dom.payload, g.payload)}
        return Mor(self.kind, f.dom, g.cod, tuple(gi[y] for y in f.payload))

    def mor_equal(self, f, g):
        return f == g

    def hom_size_bound(self, a, b):
        n, m = len(a.payload), len(b.payload)
        if n == 0:
            return 1
        if m == 0:
            return 0
        return m ** n

    def hom_iter(self, a, b):
        n = len(a.payload)
        if n == 0:
            yield Mor(self.kind, a, b, ())
            return
        for images in itertools.product(b.payload, repeat=n):
            yield Mor(self.kind, a, b, images)

    def _make_product(self, a, b):
        need = len(a.payload) * len(b.payload)
        if need > self.budget:
            raise NotEnumerable(
                "product(%s,%s)" % (a.short(), b.short()), need, self.budget
            )
        pts = tuple((x, y) for x in a.payload for y in b.payload)
        obj = self.register(Obj(self.kind, pts))
        p1 = Mor(self.kind, obj, a, tuple(x for (x, _) in pts))
        p2 = Mor(self.kind, obj, b, tuple(y for (_, y) in pts))
        return ProductCone(obj, p1, p2)

    def pair(self, f, g):
        if f.dom != g.dom:
            raise DomainMismatch("pair: different domains")
        cone = self.product(f.cod, g.cod)
        return Mor(self.kind, f.dom, cone.obj, tuple(zip(f.payload, g.payload)))

    def equalizer(self, f, g):
        if f.dom != g.dom or f.cod != g.cod:
            raise DomainMismatch("equalizer wants a parallel pair")
        pts = tuple(x for x, fy, gy in zip(f.dom.payload, f.payload, g.payload) if fy == gy)
        sub = self.make_obj(pts)
        return Mor(self.kind, sub, f.dom, pts)

    def pullback(self, f, g):
        if f.cod != g.cod:
            raise DomainMismatch("pullback wants a cospan")
        cone = self.product(f.dom, g.dom)
        fi = {x: y for x, y in zip(f.dom.payload, f.payload)}
        gi = {x: y for x, y in zip(g.dom.payload, g.payload)}
        pts = tuple((x, y) for (x, y) in cone.obj.payload if fi[x] == gi[y])
        apex = self.make_obj(pts)
        to_f = Mor(self.kind, apex, f.dom, tuple(x for (x, _) in pts))
        to_g = Mor(self.kind, apex, g.dom, tuple(y for (_, y) in pts))
        return PullbackSquare(apex, to_f, to_g, f, g)


def _safe_hom(cat, a, b, budget):
    try:
        if cat.hom_size_bound(a, b) > budget:
            return None
        return cat.hom(a, b)
    except NotEnumerable:
        return None


def is_mono(cat, f, test_objs, budget=None):
    """Left-cancellation test over the given probe objects."""
    budget = budget or cat.budget
    for z in test_objs:
        bound = cat.hom_size_bound(z, f.dom)
        if bound > budget:
            raise NotEnumerable("mono probe hom", bound, budget)
        candidates = cat.hom(z, f.dom)
        for i, u in enumerate(candidates):
            for v in candidates[i + 1:]:
                if cat.mor_equal(u, v):
                    continue
                if cat.mor_equal(cat.compose(f, u), cat.compose(f, v)):
                    return False
    return True


def check_category_laws(cat, objs, budget=None, max_homs=2000):
    """Identity, associativity and product universal property, enumerated.

    ``objs`` bounds the fragment; morphism lists are truncated at
    max_homs composable arrows to keep the cubic associativity scan at
    desk scale (the truncation is recorded in the report domain).
    """
    budget = budget or cat.budget
    rep = ValidationReport(
        "category_laws",
        "id.f = f = f.id; h.(g.f) = (h.g).f; product universal property",
        {"objects": len(objs)},
    )
    mors = []
    for a in objs:
        for b in objs:
            homs = _safe_hom(cat, a, b, budget)
            if homs is None:
                continue
            mors.extend(homs)
            if len(mors) > max_homs:
                break
        if len(mors) > max_homs:
            break
    mors = mors[:max_homs]
    rep.domain["morphisms"] = len(mors)
    for f in mors:
        if not cat.mor_equal(cat.compose(cat.identity(f.cod), f), f):
            rep.fail("left_identity", f)
        if not cat.mor_equal(cat.compose(f, cat.identity(f.dom)), f):
            rep.fail("right_identity", f)
    by_dom = {}
    for m in mors:
        by_dom.setdefault(m.dom, []).append(m)
    for f in mors:
        for g in by_dom.get(f.cod, ()):
            gf = cat.compose(g, f)
            for h in by_dom.get(g.cod, ()):
                lhs = cat.compose(h, gf)
                rhs = cat.compose(cat.compose(h, g), f)
                if not cat.mor_equal(lhs, rhs):
                    rep.fail("associativity", f, g, h)
    # product universal property over the object sample
    for a in objs:
        for b in objs:
            cone = cat.product(a, b)
            for x in objs:
                into = _safe_hom(cat, x, cone.obj, budget)
                ha = _safe_hom(cat, x, a, budget)
                hb = _safe_hom(cat, x, b, budget)
                if into is None or ha is None or hb is None:
                    continue
                for f in ha:
                    for g in hb:
                        m = cat.pair(f, g)
                        if not cat.mor_equal(cat.compose(cone.p1, m), f) or not cat.mor_equal(
                            cat.compose(cone.p2, m), g
                        ):
                            rep.fail("pair_projections", f, g)
                            continue
                        others = [
                            h
                            for h in into
                            if cat.mor_equal(cat.compose(cone.p1, h), f)
                            and cat.mor_equal(cat.compose(cone.p2, h), g)
                            and not cat.mor_equal(h, m)
                        ]
                        if others:
                            rep.fail("pair_uniqueness", f, g, others[0])
    return rep


def verify_pullback_square(cat, sq, objs, budget=None):
    """Universal-property oracle for a claimed pullback square."""
    budget = budget or cat.budget
    rep = ValidationReport(
        "pullback_square",
        "square commutes; every commuting cone factors uniquely",
        {"probes": len(objs)},
    )
    if not cat.mor_equal(cat.compose(sq.f, sq.to_f), cat.compose(sq.g, sq.to_g)):
        rep.fail("commutes", sq)
        return rep
    for z in objs:
        into = _safe_hom(cat, z, sq.apex, budget)
        hf = _safe_hom(cat, z, sq.f.dom, budget)
        hg = _safe_hom(cat, z, sq.g.dom, budget)
        if into is None or hf is None or hg is None:
            continue
        # hoisted out of the cone loop: the legs of every candidate
        # mediator, and the g-composite of every right cone leg
        legs = [(cat.compose(sq.to_f, m), cat.compose(sq.to_g, m)) for m in into]
        gv = [cat.compose(sq.g, v) for v in hg]
        for u in hf:
            fu = cat.compose(sq.f, u)
            for j, v in enumerate(hg):
                if not cat.mor_equal(fu, gv[j]):
                    continue
                mediators = [
                    m
                    for i, m in enumerate(into)
                    if cat.mor_equal(legs[i][0], u)
                    and cat.mor_equal(legs[i][1], v)
                ]
                if len(mediators) != 1:
                    rep.fail("mediator_count", u, v, len(mediators))
    return rep


# ---------------------------------------------------------------------------
# fragment export


def fragment_dict(cat, objs, budget=None, with_morphisms=True):
    """JSON-ready snapshot of a category fragment, deterministically ordered."""
    budget = budget or cat.budget
    names = {}
    objects = []
    for i, a in enumerate(objs):
        names[a] = "X%d" % i
        entry = {"name": names[a], "id": a.short()}
        pts = getattr(cat, "points", None)
        if callable(pts):
            try:
                entry["points"] = len(pts(a))
            except Exception:
                pass
        objects.append(entry)
    homs = []
    for a in objs:
        for b in objs:
            bound = cat.hom_size_bound(a, b)
            row = {"dom": names[a], "cod": names[b]}
            ms = None if bound > budget else _safe_hom(cat, a, b, budget)
            if ms is None:
                row["count"] = None
                row["bound"] = bound
            else:
                row["count"] = len(ms)
                if with_morphisms and len(ms) <= 64:
                    row["morphisms"] = [m.short() for m in ms]
            homs.append(row)
    return {"kind": cat.kind, "objects": objects, "homs": homs}


def fragment_dot(cat, objs, budget=None, title="fragment"):
    """DOT digraph: one node per object, one edge per hom-set with count."""
    frag = fragment_dict(cat, objs, budget=budget, with_morphisms=False)
    lines = ["digraph \"%s\" {" % title, "  rankdir=LR;", "  node [shape=box];"]
    for o in frag["objects"]:
        label = o["name"]
        if "points" in o:
            label += " (%d)" % o["points"]
        lines.append("  %s [label=\"%s\"];" % (o["name"], label))
    for h in frag["homs"]:
        if h["count"]:
            lines.append(
                "  %s -> %s [label=\"%d\"];" % (h["dom"], h["cod"], h["count"])
            )
    lines.append("}")
    return "\n".join(lines) + "\n"
