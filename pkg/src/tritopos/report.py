"""Validation reports shared by every checker in the package.

A check never raises on a mere law violation: it returns a report whose
``failures`` list carries concrete witness tuples, so callers (tests, the
CLI) can decide what a failure means.  Reports are immutable enough in
practice: checkers build them and hand them out; nobody edits a report
after that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MAX_FAILURES = 32  # witnesses kept per report; the count is still exact


def render_value(v):
    """Canonical, deterministic string for ids appearing in witnesses.

    Handles the id shapes used across the package: strings, tuples
    (product points, power tuples), frozensets (subset fibers) and
    objects exposing a ``short()`` method.
    """
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, tuple):
        return "(" + ",".join(render_value(x) for x in v) + ")"
    if isinstance(v, frozenset):
        return "{" + ",".join(sorted(render_value(x) for x in v)) + "}"
    if isinstance(v, dict):
        items = sorted((render_value(k), render_value(w)) for k, w in v.items())
        return "{" + ",".join("%s=%s" % kv for kv in items) + "}"
    short = getattr(v, "short", None)
    if callable(short):
        return short()
    return repr(v)


@dataclass
class ValidationReport:
    """Outcome of one law checked over an enumerated domain.

    check   -- machine name of the check ("frobenius", "poset", ...)
    law     -- the property itself, written out ("E_f(a & f*b) = E_f a & b")
    domain  -- sizes of whatever was quantified over, for the record
    failures-- list of witness tuples, first element a short tag
    """

    check: str
    law: str = ""
    domain: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    failure_count: int = 0

    @property
    def ok(self):
        return self.failure_count == 0

    def fail(self, tag, *witness):
        self.failure_count += 1
        if len(self.failures) < MAX_FAILURES:
            self.failures.append((tag,) + tuple(witness))

    def merge(self, other):
        """Fold another report's failures into this one (prefixed by its name)."""
        self.failure_count += other.failure_count
        for w in other.failures:
            if len(self.failures) < MAX_FAILURES:
                self.failures.append((other.check,) + tuple(w))
        return self

    def to_dict(self):
        return {
            "check": self.check,
            "law": self.law,
            "domain": {k: self.domain[k] for k in sorted(self.domain)},
            "ok": self.ok,
            "failure_count": self.failure_count,
            "failures": [[render_value(x) for x in w] for w in self.failures],
        }

    def summary(self):
        state = "ok" if self.ok else "FAIL(%d)" % self.failure_count
        head = "%-28s %s" % (self.check, state)
        if self.ok:
            return head
        first = self.failures[0] if self.failures else ()
        return head + "  witness " + render_value(tuple(first))

    def __bool__(self):
        return self.ok


def all_ok(reports):
    return all(r.ok for r in reports)


def first_failure(reports):
    for r in reports:
        if not r.ok:
            return r
    return None
