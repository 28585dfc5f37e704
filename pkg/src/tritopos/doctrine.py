"""Doctrines: contravariant semilattice-valued functors on a category.

A Doctrine assigns a finite inf-semilattice fiber to every object and a
reindexing hom to every morphism.  RegularDoctrine adds left adjoints
along every map (with Beck-Chevalley and Frobenius as checkable laws),
Tripos adds Heyting fibers, right adjoints and weak power objects.

Conventions used throughout:
  * reindex(f) for f: X -> Y maps fiber(Y) -> fiber(X);
  * exists_along(f) / forall_along(f) map fiber(X) -> fiber(Y);
  * internal equality over A x A is exists along the diagonal of top;
  * triple products are left-nested, built by base.product3.

Checks return ValidationReports with witnesses; structural search
failures (no classifier, no graph) raise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .category import NotEnumerable, PullbackSquare, Unsupported
from .lattice import (
    LatticeHom,
    NoAdjoint,
    NotMonotone,
    check_hom,
    iff,
    left_adjoint_of,
    right_adjoint_of,
)
from .report import ValidationReport


class NoClassifier(Exception):
    """Weak-power classifier search exhausted the hom-set."""


class NoGraph(Exception):
    """A formula is the graph of no enumerated morphism."""


@dataclass(frozen=True)
class Formula:
    """An element of the fiber over ``over``; value ids are opaque."""

    over: Any
    value: Any


@dataclass
class PointwiseData:
    """Optional capability: fibers are H-valued functions on finite points.

    h          -- the truth-value Heyting algebra
    points(a)  -- canonical point tuple of an object
    value_at(a, v, p) -- H-value of fiber element v at point p
    build(a, fn)      -- fiber value from a point->H function

    Doctrines carrying this promise that fiber order is pointwise and
    that exists along a product projection is the pointwise join over
    the projected-away points, for descent-closed elements.  The
    functional-formula enumerator exploits it; tests cross-check it
    against the naive route.
    """

    h: Any
    points: Callable
    value_at: Callable
    build: Callable


class Doctrine:
    is_tripos = False
    is_regular = False

    def __init__(self, base):
        self.base = base
        self.pointwise = None
        self._fiber_cache = {}
        self._delta_cache = {}

    def fiber(self, a):
        got = self._fiber_cache.get(a)
        if got is None:
            got = self._make_fiber(a)
            self._fiber_cache[a] = got
        return got

    def _make_fiber(self, a):
        raise NotImplementedError

    def _reindex_value(self, f, v):
        raise NotImplementedError

    def reindex(self, f):
        return LatticeHom(
            self.fiber(f.cod), self.fiber(f.dom), lambda v: self._reindex_value(f, v), "reindex"
        )

    def top(self, a):
        return Formula(a, self.fiber(a).top)

    def formula(self, over, value):
        if not self.fiber(over).contains(value):
            raise ValueError("value not in fiber over %s" % over.short())
        return Formula(over, value)

    def reindex_formula(self, f, phi):
        if phi.over != f.cod:
            raise ValueError("reindex expects a formula over the codomain")
        return Formula(f.dom, self._reindex_value(f, phi.value))


class RegularDoctrine(Doctrine):
    is_regular = True

    def exists_value(self, f, v):
        raise NotImplementedError

    def exists_along(self, f):
        return lambda v: self.exists_value(f, v)

    def equality(self, a):
        """Internal equality over a x a: exists along the diagonal of top."""
        got = self._delta_cache.get(a)
        if got is None:
            cone = self.base.product(a, a)
            diag = self.base.pair(self.base.identity(a), self.base.identity(a))
            got = Formula(cone.obj, self.exists_value(diag, self.fiber(a).top))
            self._delta_cache[a] = got
        return got


class Tripos(RegularDoctrine):
    is_tripos = True

    def __init__(self, base):
        super().__init__(base)
        self._power_cache = {}

    def forall_value(self, f, v):
        raise NotImplementedError

    def forall_along(self, f):
        return lambda v: self.forall_value(f, v)

    def weak_power(self, a):
        got = self._power_cache.get(a)
        if got is None:
            got = self._make_weak_power(a)
            self._power_cache[a] = got
        return got

    def _make_weak_power(self, a):
        raise NotImplementedError

    def classify(self, gamma):
        """Native classifier {gamma}: Y -> PX with (id x {gamma})* mem = gamma."""
        raise NotImplementedError


def equality_predicate(d, a):
    return d.equality(a)


# ---------------------------------------------------------------------------
# small helpers


def _guard_fiber(fib, what, budget):
    if fib.size_bound > budget:
        raise NotEnumerable(what, fib.size_bound, budget)


def safe_hom(cat, a, b, budget):
    """hom(a, b) or None when the scan is refused; callers skip quietly
    and the skip shows up in the report domain counts."""
    try:
        if cat.hom_size_bound(a, b) > budget:
            return None
        return cat.hom(a, b)
    except NotEnumerable:
        return None


def _fiber_elements(d, a, budget):
    fib = d.fiber(a)
    _guard_fiber(fib, "fiber over %s" % a.short(), budget)
    return fib, list(fib.iter_elements())


def product_mor(cat, f, g):
    """f x g between the canonical products."""
    cd = cat.product(f.dom, g.dom)
    return cat.pair(cat.compose(f, cd.p1), cat.compose(g, cd.p2))


def substitution_squares(cat, f, y):
    """The two product-projection squares of f against the factor y.

    Each is a genuine pullback: y x A is the pullback of the projection
    from y x B along f (and symmetrically).
    """
    out = []
    ca, cb = cat.product(y, f.dom), cat.product(y, f.cod)
    idxf = cat.pair(ca.p1, cat.compose(f, ca.p2))
    out.append(PullbackSquare(ca.obj, idxf, ca.p2, cb.p2, f))
    ca2, cb2 = cat.product(f.dom, y), cat.product(f.cod, y)
    fxid = cat.pair(cat.compose(f, ca2.p1), ca2.p2)
    out.append(PullbackSquare(ca2.obj, fxid, ca2.p1, cb2.p1, f))
    return out


# ---------------------------------------------------------------------------
# doctrine law checks


def check_functoriality(d, objs, budget=None, max_homs=400):
    """reindex(id) = id and reindex(g.f) = reindex(f).reindex(g), pointwise."""
    budget = budget or d.base.budget
    rep = ValidationReport(
        "functoriality",
        "reindex(id)=id; reindex(g.f)=reindex(f).reindex(g); reindex is a hom",
        {"objects": len(objs)},
    )
    cat = d.base
    for a in objs:
        fib = d.fiber(a)
        if fib.size_bound > budget:
            continue
        ida = cat.identity(a)
        for v in fib.iter_elements():
            if d._reindex_value(ida, v) != v:
                rep.fail("identity", a, v)
    mors = []
    for a in objs:
        for b in objs:
            homs = safe_hom(cat, a, b, budget)
            if homs is None:
                continue
            mors.extend(homs)
            if len(mors) >= max_homs:
                break
        if len(mors) >= max_homs:
            break
    rep.domain["morphisms"] = len(mors)
    for f in mors:
        hom_rep = check_hom(d.reindex(f), heyting=d.is_tripos, budget=budget)
        if not hom_rep.ok:
            rep.fail("reindex_hom", f, hom_rep.failures[0])
    by_dom = {}
    for m in mors:
        by_dom.setdefault(m.dom, []).append(m)
    for f in mors:
        for g in by_dom.get(f.cod, ()):
            fibc = d.fiber(g.cod)
            if fibc.size_bound > budget:
                continue
            gf = cat.compose(g, f)
            for v in fibc.iter_elements():
                if d._reindex_value(gf, v) != d._reindex_value(f, d._reindex_value(g, v)):
                    rep.fail("composition", f, g, v)
    return rep


def check_adjunction(d, f, budget=None, oracle_cap=4096):
    """Unit/counit laws for exists (and forall in a tripos) along f,
    cross-validated against the generic Galois adjoint search when the
    fibers are small enough to scan."""
    budget = budget or d.base.budget
    rep = ValidationReport(
        "adjunction",
        "a <= f*E_f a; E_f f* b <= b; duals for A_f; agree with Galois search",
        {},
    )
    fa, alphas = _fiber_elements(d, f.dom, budget)
    fb, betas = _fiber_elements(d, f.cod, budget)
    rep.domain = {"dom_fiber": len(alphas), "cod_fiber": len(betas)}
    for a in alphas:
        if not fa.leq(a, d._reindex_value(f, d.exists_value(f, a))):
            rep.fail("exists_unit", f, a)
    for b in betas:
        if not fb.leq(d.exists_value(f, d._reindex_value(f, b)), b):
            rep.fail("exists_counit", f, b)
    if d.is_tripos:
        for b in betas:
            if not fb.leq(b, d.forall_value(f, d._reindex_value(f, b))):
                rep.fail("forall_unit", f, b)
        for a in alphas:
            if not fa.leq(d._reindex_value(f, d.forall_value(f, a)), a):
                rep.fail("forall_counit", f, a)
    if len(alphas) <= oracle_cap and len(betas) <= oracle_cap:
        r = d.reindex(f)
        try:
            ladj = left_adjoint_of(r, budget=budget)
            for a in alphas:
                if ladj(a) != d.exists_value(f, a):
                    rep.fail("exists_vs_oracle", f, a, d.exists_value(f, a), ladj(a))
        except (NoAdjoint, NotMonotone) as e:
            rep.fail("exists_oracle_failed", f, str(e))
        if d.is_tripos:
            try:
                radj = right_adjoint_of(r, budget=budget)
                for a in alphas:
                    if radj(a) != d.forall_value(f, a):
                        rep.fail("forall_vs_oracle", f, a, d.forall_value(f, a), radj(a))
            except (NoAdjoint, NotMonotone) as e:
                rep.fail("forall_oracle_failed", f, str(e))
    return rep


def check_frobenius(d, f, budget=None):
    """E_f(a & f*b) = E_f(a) & b over both fibers, exhaustively."""
    budget = budget or d.base.budget
    rep = ValidationReport("frobenius", "E_f(a & f*b) = E_f(a) & b", {})
    fa, alphas = _fiber_elements(d, f.dom, budget)
    fb, betas = _fiber_elements(d, f.cod, budget)
    if len(alphas) * max(len(betas), 1) > budget:
        raise NotEnumerable("frobenius pairs", len(alphas) * len(betas), budget)
    rep.domain = {"dom_fiber": len(alphas), "cod_fiber": len(betas)}
    exa = {a: d.exists_value(f, a) for a in alphas}
    for b in betas:
        rb = d._reindex_value(f, b)
        for a in alphas:
            lhs = d.exists_value(f, fa.meet(a, rb))
            rhs = fb.meet(exa[a], b)
            if lhs != rhs:
                rep.fail("frobenius", f, a, b, lhs, rhs)
    return rep


def check_beck_chevalley(d, square, budget=None):
    """E_top(left* phi) = right*(E_bottom phi) for a pullback square.

    The square's cospan is (f, g) with f as the right edge and g as the
    bottom edge; to_f and to_g are the top and left projections.
    """
    budget = budget or d.base.budget
    rep = ValidationReport(
        "beck_chevalley", "E_top . left* = right* . E_bottom on a pullback", {}
    )
    right, bottom = square.f, square.g
    top, left = square.to_f, square.to_g
    _, phis = _fiber_elements(d, bottom.dom, budget)
    rep.domain = {"fiber": len(phis)}
    for phi in phis:
        lhs = d.exists_value(top, d._reindex_value(left, phi))
        rhs = d._reindex_value(right, d.exists_value(bottom, phi))
        if lhs != rhs:
            rep.fail("beck_chevalley", square.apex, phi, lhs, rhs)
    return rep


def doctrine_battery(d, objs, budget=None, with_pullbacks=True, fiber_law_cap=64):
    """The full exhaustive battery over a fragment: fiber laws,
    functoriality, adjunction + Frobenius along every enumerable map,
    Beck-Chevalley on every constructible pullback and every
    substitution square.  Returns a list of reports."""
    from .lattice import check_heyting, check_semilattice

    budget = budget or d.base.budget
    cat = d.base
    out = [check_functoriality(d, objs, budget=budget)]
    for a in objs:
        fib = d.fiber(a)
        if fib.size_bound <= fiber_law_cap:
            law = check_heyting(fib) if d.is_tripos else check_semilattice(fib)
            law.check = "fiber_laws"
            law.domain["over"] = a.short()
            out.append(law)
    mors = []
    for a in objs:
        for b in objs:
            homs = safe_hom(cat, a, b, budget)
            if homs is not None:
                mors.extend(homs)
    for f in mors:
        out.append(check_adjunction(d, f, budget=budget))
        out.append(check_frobenius(d, f, budget=budget))
    squares = []
    for f in mors:
        for y in objs:
            squares.extend(substitution_squares(cat, f, y))
    if with_pullbacks:
        for f in mors:
            for g in mors:
                if f.cod != g.cod:
                    continue
                try:
                    squares.append(cat.pullback(f, g))
                except Unsupported:
                    break
            else:
                continue
            break
    for sq in squares:
        out.append(check_beck_chevalley(d, sq, budget=budget))
    merged = ValidationReport("doctrine_battery", "all of the above", {"checks": len(out)})
    for r in out:
        merged.merge(r)
    return out + [merged]


# ---------------------------------------------------------------------------
# relations and functional formulas


def is_equivalence_relation(d, rho, report=False):
    """Reflexive (contains internal equality), symmetric, transitive."""
    cat = d.base
    a, a2 = cat.factors(rho.over)
    assert a == a2, "equivalence relation must live over a square"
    cone = cat.product(a, a)
    fib2 = d.fiber(cone.obj)
    rep = ValidationReport(
        "equivalence_relation",
        "delta <= rho; rho = swap* rho; rho(1,2) & rho(2,3) <= rho(1,3)",
        {"over": a.short()},
    )
    if not fib2.leq(d.equality(a).value, rho.value):
        rep.fail("reflexivity", rho.value)
    swap = cat.pair(cone.p2, cone.p1)
    if d._reindex_value(swap, rho.value) != rho.value:
        rep.fail("symmetry", rho.value)
    t, q1, q2, q3 = cat.product3(a, a, a)
    fib3 = d.fiber(t)
    r12 = d._reindex_value(cat.pair(q1, q2), rho.value)
    r23 = d._reindex_value(cat.pair(q2, q3), rho.value)
    r13 = d._reindex_value(cat.pair(q1, q3), rho.value)
    if not fib3.leq(fib3.meet(r12, r23), r13):
        rep.fail("transitivity", rho.value)
    return rep if report else rep.ok


def is_functional(d, F, report=False):
    """Total and single-valued relation from Y to A.

    Totality is read as: top over Y is below exists along the
    projection to Y of F.  Single-valuedness compares against internal
    equality of A over the left-nested triple Y x A x A.
    """
    cat = d.base
    y, a = cat.factors(F.over)
    cone = cat.product(y, a)
    rep = ValidationReport(
        "functional",
        "top_Y <= E_pi1 F; F(y,a) & F(y,a') <= delta_A(a,a')",
        {"dom": y.short(), "cod": a.short()},
    )
    if not d.fiber(y).leq(d.fiber(y).top, d.exists_value(cone.p1, F.value)):
        rep.fail("totality", F.value)
    t, q1, q2, q3 = cat.product3(y, a, a)
    fib3 = d.fiber(t)
    f12 = d._reindex_value(cat.pair(q1, q2), F.value)
    f13 = d._reindex_value(cat.pair(q1, q3), F.value)
    d23 = d._reindex_value(cat.pair(q2, q3), d.equality(a).value)
    if not fib3.leq(fib3.meet(f12, f13), d23):
        rep.fail("single_valued", F.value)
    return rep if report else rep.ok


def graph_formula(d, f):
    """The graph of f: Y -> A as a formula over Y x A: (f x id)* delta."""
    cat = d.base
    cone = cat.product(f.dom, f.cod)
    m = cat.pair(cat.compose(f, cone.p1), cone.p2)
    return Formula(cone.obj, d._reindex_value(m, d.equality(f.cod).value))


def converse_relation(d, phi, pair=None):
    """The converse of a relation over A x B, as a formula over B x A.

    Degenerate objects can make one carrier the chosen product of two
    different factor pairs, so callers that know their decomposition
    pass it as ``pair``; the factor registry is only a fallback.
    """
    cat = d.base
    a, b = pair if pair is not None else cat.factors(phi.over)
    cone = cat.product(b, a)
    m = cat.pair(cone.p2, cone.p1)
    return Formula(cone.obj, d._reindex_value(m, phi.value))


def compose_relations(d, phi, psi, ends=None):
    """Relational composite of phi over A x B and psi over B x C.

    ``ends`` optionally fixes (A, B, C) for callers that know the
    decomposition; see converse_relation on why the registry lookup is
    not always enough.
    """
    cat = d.base
    if ends is not None:
        a, b, c = ends
    else:
        a, b = cat.factors(phi.over)
        b2, c = cat.factors(psi.over)
        assert b == b2, "relations do not share the middle object"
    t, q1, q2, q3 = cat.product3(a, b, c)
    fib3 = d.fiber(t)
    v = fib3.meet(
        d._reindex_value(cat.pair(q1, q2), phi.value),
        d._reindex_value(cat.pair(q2, q3), psi.value),
    )
    out = d.exists_value(cat.pair(q1, q3), v)
    return Formula(cat.product(a, c).obj, out)


def find_graph_morphism(d, F, budget=None, pair=None):
    """First enumerated morphism whose graph is F; NoGraph otherwise."""
    budget = budget or d.base.budget
    y, a = pair if pair is not None else d.base.factors(F.over)
    bound = d.base.hom_size_bound(y, a)
    if bound > budget:
        raise NotEnumerable("graph search", bound, budget)
    for f in d.base.hom(y, a):
        if graph_formula(d, f).value == F.value:
            return f
    raise NoGraph("no morphism has the given graph over %s" % F.over.short())


def enumerate_functional(d, y, a, budget=None):
    """All functional formulas from y to a, in canonical order.

    With pointwise data this enumerates candidate rows per point of y
    (filtered by the pointwise reading of totality and
    single-valuedness, both necessary conditions), assembles the grid
    and keeps the fiber members.  Without it, it filters the whole
    fiber through is_functional.  Tests pin the two routes against each
    other on small cases.
    """
    budget = budget or d.base.budget
    cat = d.base
    cone = cat.product(y, a)
    fib = d.fiber(cone.obj)
    pw = d.pointwise
    if pw is None:
        _guard_fiber(fib, "functional formulas", budget)
        return [
            Formula(cone.obj, v)
            for v in fib.iter_elements()
            if is_functional(d, Formula(cone.obj, v))
        ]
    H = pw.h
    pts_y, pts_a = pw.points(y), pw.points(a)
    na = len(pts_a)
    helems = tuple(H.iter_elements())
    row_count = len(helems) ** na if na else 1
    if row_count * max(len(pts_y), 1) > budget:
        raise NotEnumerable("functional rows", row_count * max(len(pts_y), 1), budget)
    top_pair = fib.top
    top_y = d.fiber(y).top
    delta_a = d.equality(a)
    aa = cat.product(a, a).obj
    dvals = [
        [pw.value_at(aa, delta_a.value, (p, q)) for q in pts_a] for p in pts_a
    ]
    import itertools as _it

    rows = []
    for py in pts_y:
        caps = [pw.value_at(cone.obj, top_pair, (py, pa)) for pa in pts_a]
        need = pw.value_at(y, top_y, py)
        good = []
        for row in _it.product(helems, repeat=na):
            if any(not H.leq(row[i], caps[i]) for i in range(na)):
                continue
            ok = True
            for i in range(na):
                for j in range(i, na):
                    if not H.leq(H.meet(row[i], row[j]), dvals[i][j]):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                continue
            acc = H.bottom
            for x in row:
                acc = H.join(acc, x)
            if not H.leq(need, acc):
                continue
            good.append(row)
        rows.append(good)
        if not good:
            return []
    total = 1
    for g in rows:
        total *= len(g)
        if total > budget:
            raise NotEnumerable("functional grid", total, budget)
    out = []
    ypos = {p: i for i, p in enumerate(pts_y)}
    apos = {p: i for i, p in enumerate(pts_a)}
    for combo in _it.product(*rows):
        value = pw.build(cone.obj, lambda pt: combo[ypos[pt[0]]][apos[pt[1]]])
        if fib.contains(value):
            out.append(Formula(cone.obj, value))
    return out


# ---------------------------------------------------------------------------
# weak power objects


def weak_power_classify(t, gamma, budget=None):
    """Search-based classifier: first m in hom(Y, PX) with (id x m)* mem = gamma.

    This is the oracle twin of Tripos.classify; the two are compared in
    tests wherever the hom-set is enumerable.
    """
    budget = budget or t.base.budget
    cat = t.base
    x, y = cat.factors(gamma.over)
    px, mem = t.weak_power(x)
    bound = cat.hom_size_bound(y, px)
    if bound > budget:
        raise NotEnumerable("classifier search", bound, budget)
    cxy = cat.product(x, y)
    for m in cat.hom(y, px):
        probe = cat.pair(cxy.p1, cat.compose(m, cxy.p2))
        if t._reindex_value(probe, mem.value) == gamma.value:
            return m
    raise NoClassifier("no classifier for formula over %s" % gamma.over.short())


def classification_equation(t, gamma, m):
    """(id x m)* mem == gamma, re-evaluated independently of any search."""
    cat = t.base
    x, y = cat.factors(gamma.over)
    px, mem = t.weak_power(x)
    cxy = cat.product(x, y)
    probe = cat.pair(cxy.p1, cat.compose(m, cxy.p2))
    return t._reindex_value(probe, mem.value) == gamma.value


def power_iff_formula(t, a):
    """The extensional-equivalence formula over PA x PA:
    A_(2,3)( (1,2)*mem <-> (1,3)*mem ) on the triple A x PA x PA."""
    cat = t.base
    px, mem = t.weak_power(a)
    tobj, q1, q2, q3 = cat.product3(a, px, px)
    fib3 = t.fiber(tobj)
    m12 = t._reindex_value(cat.pair(q1, q2), mem.value)
    m13 = t._reindex_value(cat.pair(q1, q3), mem.value)
    body = iff(fib3, m12, m13)
    out = t.forall_value(cat.pair(q2, q3), body)
    return Formula(cat.product(px, px).obj, out)


def has_strong_power_objects(t, a):
    """Whether the chosen weak power of a satisfies: internal equality on
    PA equals extensional equivalence of predicates."""
    px, _ = t.weak_power(a)
    return t.equality(px).value == power_iff_formula(t, a).value


# ---------------------------------------------------------------------------
# comprehension / quotient universal-property oracles


def has_comprehensions(d):
    return callable(getattr(d, "comprehension", None))


def has_quotients(d):
    return callable(getattr(d, "quotient", None))


def verify_comprehension(d, alpha, objs, budget=None):
    """Replay the comprehension universal property and fullness.

    comprehension(alpha) must pull alpha back to top; every f with
    f* alpha = top factors uniquely through it; and top <= m* beta iff
    alpha <= beta (fullness), for every beta in the fiber.
    """
    budget = budget or d.base.budget
    cat = d.base
    m = d.comprehension(alpha)
    x = m.dom
    rep = ValidationReport(
        "comprehension",
        "m* alpha = top; unique factorisation; top <= m*b iff alpha <= b",
        {"over": alpha.over.short()},
    )
    if d._reindex_value(m, alpha.value) != d.fiber(x).top:
        rep.fail("pullback_top", alpha.value)
    for yobj in objs:
        into_x = safe_hom(cat, yobj, x, budget)
        from_y = safe_hom(cat, yobj, alpha.over, budget)
        if into_x is None or from_y is None:
            continue
        for f in from_y:
            if d._reindex_value(f, alpha.value) != d.fiber(yobj).top:
                continue
            hs = [h for h in into_x if cat.mor_equal(cat.compose(m, h), f)]
            if len(hs) != 1:
                rep.fail("factorisation", f, len(hs))
    fib = d.fiber(alpha.over)
    if fib.size_bound <= budget:
        topx = d.fiber(x).top
        for beta in fib.iter_elements():
            lhs = d.fiber(x).leq(topx, d._reindex_value(m, beta))
            rhs = fib.leq(alpha.value, beta)
            if lhs != rhs:
                rep.fail("fullness", alpha.value, beta)
    return rep


def verify_quotient(d, rho, objs, budget=None):
    """Replay the quotient universal property and effectiveness.

    q must coequalise rho into internal equality exactly
    (rho = (q x q)* delta), and every rho-compatible map factors
    uniquely through q.
    """
    budget = budget or d.base.budget
    cat = d.base
    a, _ = cat.factors(rho.over)
    q = d.quotient(rho)
    qq = product_mor(cat, q, q)
    rep = ValidationReport(
        "quotient",
        "rho = (q x q)* delta; rho-compatible maps factor uniquely",
        {"over": a.short()},
    )
    pulled = d._reindex_value(qq, d.equality(q.cod).value)
    fib2 = d.fiber(rho.over)
    if not fib2.leq(rho.value, pulled):
        rep.fail("compatible", rho.value, pulled)
    if pulled != rho.value:
        rep.fail("effectiveness", rho.value, pulled)
    for yobj in objs:
        from_q = safe_hom(cat, q.cod, yobj, budget)
        from_a = safe_hom(cat, a, yobj, budget)
        if from_q is None or from_a is None:
            continue
        for f in from_a:
            ff = product_mor(cat, f, f)
            target = d._reindex_value(ff, d.equality(yobj).value)
            if not fib2.leq(rho.value, target):
                continue
            hs = [h for h in from_q if cat.mor_equal(cat.compose(h, q), f)]
            if len(hs) != 1:
                rep.fail("factorisation", f, len(hs))
    return rep


# ---------------------------------------------------------------------------
# extensionality / cauchy-completeness


def check_extensional(d, objs, budget=None):
    """f = g exactly when top <= <f,g>* delta, over enumerated parallel pairs."""
    budget = budget or d.base.budget
    cat = d.base
    rep = ValidationReport(
        "extensional", "f = g iff top <= <f,g>* delta", {"objects": len(objs)}
    )
    for a in objs:
        for b in objs:
            homs = safe_hom(cat, a, b, budget)
            if homs is None:
                continue
            fib = d.fiber(a)
            for i, f in enumerate(homs):
                for g in homs[i:]:
                    probe = cat.pair(f, g)
                    internal = fib.leq(
                        fib.top, d._reindex_value(probe, d.equality(b).value)
                    )
                    external = cat.mor_equal(f, g)
                    if internal != external:
                        rep.fail("extensionality", f, g, external, internal)
    return rep


def check_cauchy_complete(d, objs, budget=None):
    """Every functional formula between fragment objects is the graph of a
    unique enumerated morphism."""
    budget = budget or d.base.budget
    cat = d.base
    rep = ValidationReport(
        "cauchy_complete", "functional formulas = graphs of morphisms", {"objects": len(objs)}
    )
    for y in objs:
        for a in objs:
            try:
                funcs = enumerate_functional(d, y, a, budget=budget)
            except NotEnumerable:
                continue
            homs = safe_hom(cat, y, a, budget)
            if homs is None:
                continue
            graphs = [graph_formula(d, f) for f in homs]
            for F in funcs:
                hits = [g for g in graphs if g.value == F.value]
                if len(hits) == 0:
                    rep.fail("no_graph", y, a, F.value)
                elif len(hits) > 1:
                    rep.fail("graph_not_unique", y, a, F.value, len(hits))
    return rep


# ---------------------------------------------------------------------------
# doctrine morphisms


class DoctrineMorphism:
    """A functor on bases plus a fiberwise lattice map, natural in the base.

    fiber_map(a) is a LatticeHom fiber_source(a) -> fiber_target(F a).
    product_comparison(a, b) returns the pair (c, c_inv) with
    c = <F p1, F p2>: F(a x b) -> F a x F b; when the functor preserves
    the chosen products literally the default supplies identities.
    """

    def __init__(self, source, target, obj_map, mor_map, fiber_map,
                 product_comparison=None, name=""):
        self.source = source
        self.target = target
        self.obj_map = obj_map
        self.mor_map = mor_map
        self.fiber_map = fiber_map
        self._comparison = product_comparison
        self.name = name

    def map_formula(self, phi):
        return Formula(self.obj_map(phi.over), self.fiber_map(phi.over)(phi.value))

    def comparison(self, a, b):
        if self._comparison is not None:
            return self._comparison(a, b)
        src = self.source.base
        tgt = self.target.base
        cs = src.product(a, b)
        ct = tgt.product(self.obj_map(a), self.obj_map(b))
        c = tgt.pair(self.mor_map(cs.p1), self.mor_map(cs.p2))
        if self.obj_map(cs.obj) == ct.obj:
            ident = tgt.identity(ct.obj)
            if tgt.mor_equal(c, ident):
                return ident, ident
        raise Unsupported(
            "no product comparison supplied for (%s, %s)" % (a.short(), b.short())
        )


def compose_doctrine_morphisms(m2, m1, name=""):
    return DoctrineMorphism(
        m1.source,
        m2.target,
        lambda a: m2.obj_map(m1.obj_map(a)),
        lambda f: m2.mor_map(m1.mor_map(f)),
        lambda a: LatticeHom(
            m1.source.fiber(a),
            m2.target.fiber(m2.obj_map(m1.obj_map(a))),
            lambda v: m2.fiber_map(m1.obj_map(a))(m1.fiber_map(a)(v)),
            "composite",
        ),
        name=name or ("%s.%s" % (m2.name, m1.name)),
    )


def doctrine_morphisms_agree(m1, m2, objs, budget=None):
    """Object maps equal, morphism maps equal, fiber maps pointwise equal."""
    budget = budget or m1.source.base.budget
    cat = m1.source.base
    tgt = m1.target.base
    rep = ValidationReport(
        "morphisms_agree", "same objects, morphisms and fiber values", {"objects": len(objs)}
    )
    for a in objs:
        if m1.obj_map(a) != m2.obj_map(a):
            rep.fail("object", a, m1.obj_map(a), m2.obj_map(a))
    for a in objs:
        for b in objs:
            homs = safe_hom(cat, a, b, budget)
            if homs is None:
                continue
            for f in homs:
                if not tgt.mor_equal(m1.mor_map(f), m2.mor_map(f)):
                    rep.fail("morphism", f)
    for a in objs:
        fib = m1.source.fiber(a)
        if fib.size_bound > budget:
            continue
        f1, f2 = m1.fiber_map(a), m2.fiber_map(a)
        for v in fib.iter_elements():
            if f1(v) != f2(v):
                rep.fail("fiber", a, v, f1(v), f2(v))
    return rep


def check_logical_morphism(m, objs, budget=None, level=None, with_powers=True,
                           max_homs=200):
    """Preservation battery for a doctrine morphism over a fragment.

    level "regular" checks functor laws, naturality, top/meet, exists
    and internal equality; level "logical" adds bottom/join/implication,
    forall and weak power objects.  Defaults to logical when both sides
    are triposes.
    """
    budget = budget or m.source.base.budget
    if level is None:
        level = "logical" if (m.source.is_tripos and m.target.is_tripos) else "regular"
    heyting = level == "logical"
    src, tgt = m.source, m.target
    cat, tcat = src.base, tgt.base
    rep = ValidationReport(
        "logical_morphism" if heyting else "regular_morphism",
        "functor laws; naturality; fiberwise %s hom; quantifier and equality"
        " preservation%s" % ("heyting" if heyting else "semilattice",
                             "; weak powers" if heyting and with_powers else ""),
        {"objects": len(objs), "level": level},
    )
    mors = []
    for a in objs:
        for b in objs:
            homs = safe_hom(cat, a, b, budget)
            if homs is None:
                continue
            mors.extend(homs)
            if len(mors) >= max_homs:
                break
        if len(mors) >= max_homs:
            break
    rep.domain["morphisms"] = len(mors)
    for a in objs:
        if not tcat.mor_equal(m.mor_map(cat.identity(a)), tcat.identity(m.obj_map(a))):
            rep.fail("functor_identity", a)
    by_dom = {}
    for f in mors:
        by_dom.setdefault(f.dom, []).append(f)
    for f in mors:
        for g in by_dom.get(f.cod, ()):
            if not tcat.mor_equal(
                m.mor_map(cat.compose(g, f)), tcat.compose(m.mor_map(g), m.mor_map(f))
            ):
                rep.fail("functor_compose", f, g)
    for a in objs:
        hom_rep = check_hom(m.fiber_map(a), heyting=heyting, budget=budget)
        if not hom_rep.ok:
            rep.fail("fiber_hom", a, hom_rep.failures[0])
    for f in mors:
        fib = src.fiber(f.cod)
        if fib.size_bound > budget:
            continue
        fm_dom, fm_cod = m.fiber_map(f.dom), m.fiber_map(f.cod)
        mf = m.mor_map(f)
        for v in fib.iter_elements():
            if fm_dom(src._reindex_value(f, v)) != tgt._reindex_value(mf, fm_cod(v)):
                rep.fail("naturality", f, v)
        fibd = src.fiber(f.dom)
        if fibd.size_bound <= budget:
            for v in fibd.iter_elements():
                if fm_cod(src.exists_value(f, v)) != tgt.exists_value(mf, fm_dom(v)):
                    rep.fail("exists_preserved", f, v)
                if heyting and fm_cod(src.forall_value(f, v)) != tgt.forall_value(
                    mf, fm_dom(v)
                ):
                    rep.fail("forall_preserved", f, v)
    for a in objs:
        try:
            c, _cinv = m.comparison(a, a)
        except Unsupported:
            rep.fail("no_comparison", a)
            continue
        cs = cat.product(a, a)
        lhs = m.fiber_map(cs.obj)(src.equality(a).value)
        rhs = tgt._reindex_value(c, tgt.equality(m.obj_map(a)).value)
        if lhs != rhs:
            rep.fail("equality_preserved", a, lhs, rhs)
    if heyting and with_powers:
        for a in objs:
            px, mem = src.weak_power(a)
            try:
                _, cinv = m.comparison(a, px)
            except Unsupported:
                rep.fail("no_power_comparison", a)
                continue
            fa, fpx = m.obj_map(a), m.obj_map(px)
            # membership transported to Fa x Fpx along the inverse comparison
            mapped = m.fiber_map(cat.product(a, px).obj)(mem.value)
            mem_t = tgt._reindex_value(cinv, mapped)
            for yobj in objs:
                fy = m.obj_map(yobj)
                cfy = tcat.product(fa, fy)
                fib_t = tgt.fiber(cfy.obj)
                if fib_t.size_bound > budget:
                    continue
                homs = safe_hom(tcat, fy, fpx, budget)
                if homs is None:
                    continue
                classified = set()
                for cand in homs:
                    probe = tcat.pair(cfy.p1, tcat.compose(cand, cfy.p2))
                    classified.add(tgt._reindex_value(probe, mem_t))
                for gv in fib_t.iter_elements():
                    if gv not in classified:
                        rep.fail("power_not_classifying", a, yobj, gv)
                        break
    return rep
