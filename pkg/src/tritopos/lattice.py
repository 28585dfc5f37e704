"""Finite posets, inf-semilattices and Heyting algebras.

Every fiber in the package is one of these.  Element ids are opaque
hashable values (strings in documents, tuples/frozensets in derived
fibers).  Dense table-backed algebras validate eagerly at construction;
the derived kinds (pointwise powers, powersets, sub-algebras) are
correct by construction and cross-checked by oracles in the tests.

Ordering conventions: ``leq(x, y)`` means x <= y; ``meet`` is the
greatest lower bound; ``implication(x, y)`` is the greatest z with
z & x <= y (residuation).
"""

from __future__ import annotations

import itertools

from .report import ValidationReport, render_value

DENSE_LIMIT = 1 << 16  # dense matrices refuse above this carrier size


class LatticeError(Exception):
    pass


class InvalidLattice(LatticeError):
    """Eager validation failed; args carry the witness tuple."""


class NotResiduated(LatticeError):
    """No greatest z with z & x <= y; args = (x, y)."""

    def __init__(self, x, y):
        super().__init__("no residual for (%s, %s)" % (render_value(x), render_value(y)))
        self.witness = (x, y)


class NoAdjoint(LatticeError):
    """Adjoint search failed at one element; args carry it."""

    def __init__(self, element, side):
        super().__init__("no %s adjoint value at %s" % (side, render_value(element)))
        self.element = element
        self.side = side


class NotMonotone(LatticeError):
    def __init__(self, x, y):
        super().__init__("map not monotone at %s <= %s" % (render_value(x), render_value(y)))
        self.witness = (x, y)


class BudgetExceeded(LatticeError):
    """An enumeration would scan more candidates than the budget allows."""

    def __init__(self, what, needed, budget):
        super().__init__("%s needs %d candidates, budget is %d" % (what, needed, budget))
        self.what = what
        self.needed = needed
        self.budget = budget


def _bits(mask):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


class FinitePoset:
    """Explicit finite poset: element tuple plus a dense order matrix.

    ``leq_pairs`` lists the pairs that hold; the diagonal is added
    unless reflexive=False (used to build broken inputs for the
    checkers).  No closure is applied here: the relation is stored as
    given, so check_poset can actually detect violations.
    """

    def __init__(self, elements, leq_pairs=(), reflexive=True):
        self.elements = tuple(elements)
        n = len(self.elements)
        if n > DENSE_LIMIT:
            raise InvalidLattice("carrier too large for dense poset", n, DENSE_LIMIT)
        self.index = {}
        for i, e in enumerate(self.elements):
            if e in self.index:
                raise InvalidLattice("duplicate element", e)
            self.index[e] = i
        # up[i] holds a bitmask of the j with e_i <= e_j
        self._up = [0] * n
        self._down = [0] * n
        if reflexive:
            for i in range(n):
                self._up[i] |= 1 << i
                self._down[i] |= 1 << i
        for (x, y) in leq_pairs:
            i, j = self.index[x], self.index[y]
            self._up[i] |= 1 << j
            self._down[j] |= 1 << i

    @property
    def size(self):
        return len(self.elements)

    def leq(self, x, y):
        return bool(self._up[self.index[x]] >> self.index[y] & 1)

    def up_mask(self, x):
        return self._up[self.index[x]]

    def down_mask(self, x):
        return self._down[self.index[x]]

    def greatest_of_mask(self, mask):
        """The member of ``mask`` above every other member, or None."""
        for j in _bits(mask):
            if mask & ~self._down[j] == 0:
                return self.elements[j]
        return None

    def least_of_mask(self, mask):
        for j in _bits(mask):
            if mask & ~self._up[j] == 0:
                return self.elements[j]
        return None

    def pairs(self):
        for i, x in enumerate(self.elements):
            for j in _bits(self._up[i]):
                yield x, self.elements[j]


def check_poset(p):
    """Reflexivity, antisymmetry, transitivity with explicit witnesses."""
    rep = ValidationReport("poset", "reflexive, antisymmetric, transitive", {"elements": p.size})
    els = p.elements
    for x in els:
        if not p.leq(x, x):
            rep.fail("reflexivity", x)
    for x in els:
        for y in els:
            if x != y and p.leq(x, y) and p.leq(y, x):
                rep.fail("antisymmetry", x, y)
    for x in els:
        for y in els:
            if not p.leq(x, y):
                continue
            ymask = p.up_mask(y)
            xmask = p.up_mask(x)
            missing = ymask & ~xmask
            for j in _bits(missing):
                rep.fail("transitivity", x, y, els[j])
    return rep


class InfSemilattice:
    """Finite meet-semilattice over a poset; meet table precomputed.

    With validate=True (default) the poset axioms, the existence of a
    greatest element and of all binary meets are checked eagerly, and a
    user-supplied meet table is compared against the computed glb.
    """

    is_heyting = False

    def __init__(self, poset, top=None, meet_table=None, validate=True):
        self.poset = poset
        self.elements = poset.elements
        if validate:
            prep = check_poset(poset)
            if not prep.ok:
                raise InvalidLattice("not a poset", *prep.failures[0])
        full = (1 << poset.size) - 1 if poset.size else 0
        derived_top = poset.greatest_of_mask(full) if poset.size else None
        if top is None:
            top = derived_top
        if validate:
            if derived_top is None:
                raise InvalidLattice("no greatest element")
            if top != derived_top:
                raise InvalidLattice("declared top is not greatest", top, derived_top)
        self.top = top
        self._meet = {}
        for x in self.elements:
            for y in self.elements:
                glb = poset.greatest_of_mask(poset.down_mask(x) & poset.down_mask(y))
                if meet_table is not None:
                    given = meet_table[(x, y)]
                    if validate and given != glb:
                        raise InvalidLattice("meet table disagrees with glb", x, y, given, glb)
                    self._meet[(x, y)] = given
                else:
                    if validate and glb is None:
                        raise InvalidLattice("missing meet", x, y)
                    self._meet[(x, y)] = glb

    @property
    def size(self):
        return len(self.elements)

    @property
    def size_bound(self):
        return self.size

    def iter_elements(self):
        return iter(self.elements)

    def contains(self, x):
        return x in self.poset.index

    def leq(self, x, y):
        return self.poset.leq(x, y)

    def meet(self, x, y):
        return self._meet[(x, y)]


def check_semilattice(s):
    """top greatest; meet(x,y) is the glb of x and y."""
    rep = ValidationReport(
        "inf_semilattice", "top greatest; meet = greatest lower bound", {"elements": s.size}
    )
    for x in s.iter_elements():
        if not s.leq(x, s.top):
            rep.fail("top", x)
    for x in s.iter_elements():
        for y in s.iter_elements():
            m = s.meet(x, y)
            if m is None or not (s.leq(m, x) and s.leq(m, y)):
                rep.fail("meet_lower", x, y, m)
                continue
            for z in s.iter_elements():
                if s.leq(z, x) and s.leq(z, y) and not s.leq(z, m):
                    rep.fail("meet_greatest", x, y, z)
    return rep


class FiniteHeytingAlgebra:
    """Finite Heyting algebra: bounded lattice with residuated implication.

    Join and implication tables are derived from the order when not
    given; eager validation rejects non-lattices and non-residuated
    tables with a witness.  ``validate=False`` keeps whatever tables are
    supplied, which is how the tests build deliberately broken inputs.
    """

    is_heyting = True

    def __init__(self, poset, bottom=None, top=None, join_table=None,
                 implication_table=None, meet_table=None, validate=True):
        self.isl = InfSemilattice(poset, top=top, meet_table=meet_table, validate=validate)
        self.poset = poset
        self.elements = poset.elements
        self.top = self.isl.top
        full = (1 << poset.size) - 1 if poset.size else 0
        derived_bot = poset.least_of_mask(full) if poset.size else None
        if bottom is None:
            bottom = derived_bot
        if validate:
            if derived_bot is None:
                raise InvalidLattice("no least element")
            if bottom != derived_bot:
                raise InvalidLattice("declared bottom is not least", bottom, derived_bot)
        self.bottom = bottom
        self._join = {}
        self._imp = {}
        for x in self.elements:
            for y in self.elements:
                lub = poset.least_of_mask(poset.up_mask(x) & poset.up_mask(y))
                if join_table is not None:
                    given = join_table[(x, y)]
                    if validate and given != lub:
                        raise InvalidLattice("join table disagrees with lub", x, y, given, lub)
                    self._join[(x, y)] = given
                else:
                    if validate and lub is None:
                        raise InvalidLattice("missing join", x, y)
                    self._join[(x, y)] = lub
        for x in self.elements:
            for y in self.elements:
                if implication_table is not None:
                    self._imp[(x, y)] = implication_table[(x, y)]
                else:
                    try:
                        self._imp[(x, y)] = heyting_implication(self, x, y)
                    except NotResiduated:
                        if validate:
                            raise InvalidLattice("not residuated", x, y)
                        self._imp[(x, y)] = None
        if validate:
            reph = check_heyting(self)
            if not reph.ok:
                raise InvalidLattice("heyting laws fail", *reph.failures[0])

    @property
    def size(self):
        return len(self.elements)

    @property
    def size_bound(self):
        return self.size

    def iter_elements(self):
        return iter(self.elements)

    def contains(self, x):
        return x in self.poset.index

    def leq(self, x, y):
        return self.poset.leq(x, y)

    def meet(self, x, y):
        return self.isl.meet(x, y)

    def join(self, x, y):
        return self._join[(x, y)]

    def implication(self, x, y):
        return self._imp[(x, y)]


def heyting_implication(h, x, y):
    """Brute-force residual: the greatest z with meet(z, x) <= y.

    Works from ``meet``/``leq`` alone, so it serves as an independent
    oracle for any stored implication table.  Raises NotResiduated with
    the witnessing pair when no greatest such z exists.
    """
    candidates = [z for z in h.iter_elements() if h.leq(h.meet(z, x), y)]
    for z in candidates:
        if all(h.leq(w, z) for w in candidates):
            return z
    raise NotResiduated(x, y)


def check_heyting(h):
    """Bounds, lattice laws and the residuation biconditional."""
    rep = ValidationReport(
        "heyting",
        "leq(meet(z,x), y) iff leq(z, imp(x,y)); join = least upper bound",
        {"elements": h.size},
    )
    for x in h.iter_elements():
        if not h.leq(h.bottom, x):
            rep.fail("bottom", x)
        if not h.leq(x, h.top):
            rep.fail("top", x)
    for x in h.iter_elements():
        for y in h.iter_elements():
            j = h.join(x, y)
            if j is None or not (h.leq(x, j) and h.leq(y, j)):
                rep.fail("join_upper", x, y, j)
            else:
                for z in h.iter_elements():
                    if h.leq(x, z) and h.leq(y, z) and not h.leq(j, z):
                        rep.fail("join_least", x, y, z)
            i = h.implication(x, y)
            if i is None:
                rep.fail("implication_missing", x, y)
                continue
            for z in h.iter_elements():
                lhs = h.leq(h.meet(z, x), y)
                rhs = h.leq(z, i)
                if lhs != rhs:
                    rep.fail("residuation", x, y, z)
    return rep


class PowerHeyting:
    """Pointwise power H^I over a finite index; ids are value tuples.

    Operations are pointwise in the base algebra, so no tables are
    stored and carriers of astronomic size stay usable as long as nobody
    enumerates them.  Enumeration order is the product order of the base
    element order, rightmost index fastest.
    """

    is_heyting = True

    def __init__(self, base, index):
        if not base.is_heyting:
            raise InvalidLattice("power base must be a Heyting algebra")
        self.base = base
        self.index = tuple(index)
        self._base_elements = tuple(base.iter_elements())
        n = len(self.index)
        self.top = tuple(base.top for _ in range(n))
        self.bottom = tuple(base.bottom for _ in range(n))
        self.size = base.size ** n if n else 1
        self.size_bound = self.size

    def iter_elements(self):
        return itertools.product(self._base_elements, repeat=len(self.index))

    def contains(self, v):
        return (
            isinstance(v, tuple)
            and len(v) == len(self.index)
            and all(self.base.contains(x) for x in v)
        )

    def leq(self, u, v):
        b = self.base
        return all(b.leq(x, y) for x, y in zip(u, v))

    def meet(self, u, v):
        b = self.base
        return tuple(b.meet(x, y) for x, y in zip(u, v))

    def join(self, u, v):
        b = self.base
        return tuple(b.join(x, y) for x, y in zip(u, v))

    def implication(self, u, v):
        b = self.base
        return tuple(b.implication(x, y) for x, y in zip(u, v))


class PowersetHeyting:
    """Boolean algebra of subsets of a finite point tuple; ids are frozensets.

    Enumeration follows bitmask order over the point order, so it is
    deterministic and matches nothing but itself; the subset model and
    the two-chain power model are compared through an explicit
    isomorphism in the tests, never by representation.
    """

    is_heyting = True

    def __init__(self, points):
        self.points = tuple(points)
        self.top = frozenset(self.points)
        self.bottom = frozenset()
        self.size = 1 << len(self.points)
        self.size_bound = self.size

    def iter_elements(self):
        pts = self.points
        for mask in range(self.size):
            yield frozenset(p for i, p in enumerate(pts) if mask >> i & 1)

    def contains(self, v):
        return isinstance(v, frozenset) and v <= self.top

    def leq(self, u, v):
        return u <= v

    def meet(self, u, v):
        return u & v

    def join(self, u, v):
        return u | v

    def implication(self, u, v):
        return (self.top - u) | v


class SubHeyting:
    """Sub-carrier of a parent algebra with optional op overrides.

    Used for fibers of the completion stages: a downset with a new top
    and relativised implication, or a descent-closed subset with the
    parent operations.  ``contains`` is the carrier predicate;
    enumeration filters the parent, so ``size_bound`` is the parent's
    (that is the number of candidates a scan would touch).
    """

    def __init__(self, parent, member, top=None, implication=None):
        self.parent = parent
        self._member = member
        self.is_heyting = parent.is_heyting
        self.top = parent.top if top is None else top
        if parent.is_heyting:
            self.bottom = parent.bottom
        self._imp = implication
        self.size_bound = parent.size_bound
        self._size = None

    @property
    def size(self):
        if self._size is None:
            self._size = sum(1 for _ in self.iter_elements())
        return self._size

    def iter_elements(self):
        for v in self.parent.iter_elements():
            if self._member(v):
                yield v

    def contains(self, v):
        return self.parent.contains(v) and self._member(v)

    def leq(self, u, v):
        return self.parent.leq(u, v)

    def meet(self, u, v):
        return self.parent.meet(u, v)

    def join(self, u, v):
        return self.parent.join(u, v)

    def implication(self, u, v):
        if self._imp is not None:
            return self._imp(u, v)
        return self.parent.implication(u, v)


class LatticeHom:
    """Monotone-map wrapper: source algebra, target algebra, total fn on ids."""

    def __init__(self, source, target, fn, name=""):
        self.source = source
        self.target = target
        self.fn = fn
        self.name = name

    def __call__(self, x):
        return self.fn(x)

    def map(self, x):
        return self.fn(x)


def identity_hom(alg):
    return LatticeHom(alg, alg, lambda x: x, "id")


def compose_homs(g, f):
    """g after f."""
    return LatticeHom(f.source, g.target, lambda x: g.fn(f.fn(x)), "%s.%s" % (g.name, f.name))


def _guard(alg, what, budget):
    if alg.size_bound > budget:
        raise BudgetExceeded(what, alg.size_bound, budget)


def check_hom(f, heyting=None, budget=10 ** 6):
    """Structure preservation of a LatticeHom, enumerated over the source.

    heyting=None checks the Heyting operations exactly when both sides
    have them; heyting=False restricts to top/meet, so a map can pass as
    a semilattice hom while breaking joins.
    """
    if heyting is None:
        heyting = f.source.is_heyting and f.target.is_heyting
    rep = ValidationReport(
        "lattice_hom",
        "preserves top, meet" + (", bottom, join, implication" if heyting else ""),
        {"source": f.source.size_bound},
    )
    _guard(f.source, "hom source", budget)
    src = list(f.source.iter_elements())
    t = f.target
    if f.fn(f.source.top) != t.top:
        rep.fail("top", f.source.top, f.fn(f.source.top))
    if heyting and f.fn(f.source.bottom) != t.bottom:
        rep.fail("bottom", f.source.bottom, f.fn(f.source.bottom))
    for x in src:
        for y in src:
            if f.source.leq(x, y) and not t.leq(f.fn(x), f.fn(y)):
                rep.fail("monotone", x, y)
            if f.fn(f.source.meet(x, y)) != t.meet(f.fn(x), f.fn(y)):
                rep.fail("meet", x, y)
            if heyting:
                if f.fn(f.source.join(x, y)) != t.join(f.fn(x), f.fn(y)):
                    rep.fail("join", x, y)
                if f.fn(f.source.implication(x, y)) != t.implication(f.fn(x), f.fn(y)):
                    rep.fail("implication", x, y)
    return rep


def left_adjoint_of(f, budget=10 ** 6):
    """Left adjoint of a monotone f: S -> T, as g(a) = least b with a <= f(b).

    Generic Galois search over the carriers; this is the oracle the
    doctrine-native quantifier tables are compared against.  Raises
    NotMonotone if f is not monotone, NoAdjoint (with the element) when
    some least bound is missing.
    """
    _guard(f.source, "adjoint search source", budget)
    _guard(f.target, "adjoint search target", budget)
    src = list(f.source.iter_elements())
    tgt = list(f.target.iter_elements())
    for x in src:
        for y in src:
            if f.source.leq(x, y) and not f.target.leq(f.fn(x), f.fn(y)):
                raise NotMonotone(x, y)
    table = {}
    for a in tgt:
        bounds = [b for b in src if f.target.leq(a, f.fn(b))]
        least = None
        for b in bounds:
            if all(f.source.leq(b, c) for c in bounds):
                least = b
                break
        if least is None:
            raise NoAdjoint(a, "left")
        table[a] = least
    return LatticeHom(f.target, f.source, table.__getitem__, "ladj(%s)" % f.name)


def right_adjoint_of(f, budget=10 ** 6):
    """Right adjoint: g(a) = greatest b with f(b) <= a.  Dual of the above."""
    _guard(f.source, "adjoint search source", budget)
    _guard(f.target, "adjoint search target", budget)
    src = list(f.source.iter_elements())
    tgt = list(f.target.iter_elements())
    for x in src:
        for y in src:
            if f.source.leq(x, y) and not f.target.leq(f.fn(x), f.fn(y)):
                raise NotMonotone(x, y)
    table = {}
    for a in tgt:
        bounds = [b for b in src if f.target.leq(f.fn(b), a)]
        greatest = None
        for b in bounds:
            if all(f.source.leq(c, b) for c in bounds):
                greatest = b
                break
        if greatest is None:
            raise NoAdjoint(a, "right")
        table[a] = greatest
    return LatticeHom(f.target, f.source, table.__getitem__, "radj(%s)" % f.name)


def iff(alg, x, y):
    """Biconditional value imp(x,y) & imp(y,x)."""
    return alg.meet(alg.implication(x, y), alg.implication(y, x))


# ---------------------------------------------------------------------------
# standard algebras


def chain(n):
    """Linear Heyting algebra 0 < 1 < ... < n-1 with string names."""
    names = tuple(str(i) for i in range(n))
    pairs = [(names[i], names[j]) for i in range(n) for j in range(i, n)]
    return FiniteHeytingAlgebra(FinitePoset(names, pairs))


def diamond():
    """Four-element Boolean algebra 0 < u, v < 1 (u, v incomparable)."""
    names = ("0", "u", "v", "1")
    pairs = [("0", "u"), ("0", "v"), ("0", "1"), ("u", "1"), ("v", "1")]
    return FiniteHeytingAlgebra(FinitePoset(names, pairs))


# ---------------------------------------------------------------------------
# textual algebra documents
#
# Line format, '#' comments allowed:
#   elements: a b c
#   leq: a b              (a <= b; reflexive-transitive closure is applied)
#   bottom: a   /  top: c (optional, derived when absent)
#   meet: a b a           (optional explicit tables, one line per pair)
#   join: a b c  /  imp: a b c
#
# print_algebra always emits the full canonical form, so parse -> print
# round-trips byte-stable.


def parse_algebra(text, validate=True):
    """Parse a textual Heyting algebra document.

    The leq lines are generators: their reflexive-transitive closure is
    the stored order.  Explicit tables, when present, are kept verbatim
    and checked against the derived ones unless validate=False.
    """
    elements = None
    pairs = []
    tables = {"meet": {}, "join": {}, "imp": {}}
    bottom = top = None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise InvalidLattice("line %d: missing ':'" % ln, raw)
        key, rest = line.split(":", 1)
        key = key.strip()
        toks = rest.split()
        if key == "elements":
            if elements is not None:
                raise InvalidLattice("line %d: duplicate elements line" % ln)
            elements = tuple(toks)
        elif key == "leq":
            if len(toks) != 2:
                raise InvalidLattice("line %d: leq wants two ids" % ln, raw)
            pairs.append((toks[0], toks[1]))
        elif key in ("bottom", "top"):
            if len(toks) != 1:
                raise InvalidLattice("line %d: %s wants one id" % (ln, key), raw)
            if key == "bottom":
                bottom = toks[0]
            else:
                top = toks[0]
        elif key in tables:
            if len(toks) != 3:
                raise InvalidLattice("line %d: %s wants three ids" % (ln, key), raw)
            tables[key][(toks[0], toks[1])] = toks[2]
        else:
            raise InvalidLattice("line %d: unknown key %r" % (ln, key))
    if elements is None:
        raise InvalidLattice("document has no elements line")
    index = {e: i for i, e in enumerate(elements)}
    for (x, y) in pairs:
        if x not in index or y not in index:
            raise InvalidLattice("leq mentions unknown element", x, y)
    for t in tables.values():
        for (x, y), z in t.items():
            for e in (x, y, z):
                if e not in index:
                    raise InvalidLattice("table mentions unknown element", e)
    # reflexive-transitive closure of the generators
    n = len(elements)
    up = [1 << i for i in range(n)]
    for (x, y) in pairs:
        up[index[x]] |= 1 << index[y]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            acc = up[i]
            for j in _bits(up[i]):
                acc |= up[j]
            if acc != up[i]:
                up[i] = acc
                changed = True
    closed = [
        (elements[i], elements[j]) for i in range(n) for j in _bits(up[i]) if i != j
    ]
    poset = FinitePoset(elements, closed)

    def full(t):
        return t if t else None

    def padded(t):
        if not t:
            return None
        out = dict(t)
        missing = [(x, y) for x in elements for y in elements if (x, y) not in out]
        if missing:
            raise InvalidLattice("partial table; give all pairs or none", *missing[0])
        return out

    return FiniteHeytingAlgebra(
        poset,
        bottom=bottom,
        top=top,
        meet_table=padded(tables["meet"]),
        join_table=padded(tables["join"]),
        implication_table=padded(tables["imp"]),
        validate=validate,
    )


def print_algebra(h):
    """Canonical full document for a Heyting algebra; byte-stable."""
    els = h.elements
    out = ["elements: " + " ".join(els)]
    for x in els:
        for y in els:
            if x != y and h.leq(x, y):
                out.append("leq: %s %s" % (x, y))
    out.append("bottom: %s" % h.bottom)
    out.append("top: %s" % h.top)
    for key, op in (("meet", h.meet), ("join", h.join), ("imp", h.implication)):
        for x in els:
            for y in els:
                out.append("%s: %s %s %s" % (key, x, y, op(x, y)))
    return "\n".join(out) + "\n"
