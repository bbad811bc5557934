"""Entropic inequalities implied by e-separation, and their evaluation.

For an e-separation (a, b | c upon ~d) three tiers of constraints exist:

* ``base``     I(a:b|c,d) <= H(d), always;
* ``c-clear``  I(a:b|c,d) <= H(d|c) and I(a:b|c=g,d) <= H(d|c=g), when no
  member of c descends from d;
* ``a-clear``  I(a:b,d|c) <= H(d|c) and its pointwise form, when in addition
  no member of a descends from d (b is tried in the role of a as well).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from . import dist
from .dist import JointTable
from .graph import (
    Dag,
    EsepRelation,
    NotSeparatedError,
    descendants,
    e_separated,
    enumerate_esep,
    natural_key,
    sorted_set,
    varset,
)

TIERS = ("base", "c-clear", "a-clear")
EPS_EXACT = 1e-9
EPS_EMPIRICAL = 0.01


def _fmt(names) -> str:
    return "".join(sorted_set(names))


@dataclass(frozen=True)
class EntropicConstraint:
    """``I(x : y | z, c) <= H(h | c)``; the ``c`` part may be pointwise (c = value).

    ``rhs_given_c`` False means the right side is the unconditional H(h).
    ``assignment`` pins the value of ``c`` for one pointwise instance; a
    pointwise constraint without it stands for the whole family.
    """

    x: tuple[str, ...]
    y: tuple[str, ...]
    z: tuple[str, ...]
    c: tuple[str, ...]
    h: tuple[str, ...]
    rhs_given_c: bool
    pointwise: bool
    tier: str
    source: EsepRelation | None = None
    assignment: tuple[tuple[str, object], ...] | None = None
    subsumed: bool = field(default=False, compare=False)
    justification: str = field(default="", compare=False)

    def _cond(self, lhs: bool) -> str:
        parts = []
        if self.c and (self.rhs_given_c or lhs):
            if self.pointwise:
                if self.assignment is not None:
                    parts.append(",".join(f"{n}={v}" for n, v in self.assignment))
                else:
                    names = sorted_set(self.c)
                    parts.append("".join(names) + "=" + "".join(n.lower() for n in names))
            else:
                parts.append(_fmt(self.c))
        if lhs and self.z:
            parts.append(_fmt(self.z))
        return "|" + ",".join(parts) if parts else ""

    def lhs_text(self) -> str:
        return f"I({_fmt(self.x)}:{_fmt(self.y)}{self._cond(True)})"

    def rhs_text(self) -> str:
        if not self.h:
            return "0"
        return f"H({_fmt(self.h)}{self._cond(False)})"

    def text(self, unicode: bool = False) -> str:
        rel = "≤" if unicode else " <= "
        return f"{self.lhs_text()}{rel}{self.rhs_text()}"

    def __str__(self):
        return self.text()

    def math_key(self):
        """Identity of the inequality itself, ignoring provenance and orientation."""
        c_pw = self.pointwise and bool(self.c)
        return (
            frozenset((frozenset(self.x), frozenset(self.y))),
            frozenset(self.z),
            frozenset(self.c),
            frozenset(self.h),
            self.rhs_given_c and bool(self.c) and bool(self.h),
            c_pw,
            self.assignment,
        )

    def variables(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.x + self.y + self.z + self.c + self.h))

    def instantiate(self, assignment: Mapping[str, object]) -> "EntropicConstraint":
        if not self.pointwise:
            raise ValueError("only pointwise constraints take an assignment")
        return replace(self, assignment=tuple((n, assignment[n]) for n in self.c))


def implies(k1: EntropicConstraint, k2: EntropicConstraint) -> bool:
    """Symbolic check that k1 holding forces k2 to hold on every distribution.

    Uses I(X:Y|Z) >= I(X':Y'|Z') when X' is in X, Z is in Z', and
    Y' together with Z' minus Z is in Y (chain rule and nonnegativity), plus
    H(h|c) <= H(h') for h in h'.
    """
    if frozenset(k1.c) != frozenset(k2.c) and (k1.pointwise or k2.pointwise):
        return False
    if (k1.pointwise and k1.c) != (k2.pointwise and k2.c) or k1.assignment != k2.assignment:
        return False
    if k1.h:
        cond1 = k1.rhs_given_c and bool(k1.c)
        cond2 = k2.rhs_given_c and bool(k2.c)
        if not set(k1.h) <= set(k2.h):
            return False
        if cond2 and not (cond1 and frozenset(k1.c) == frozenset(k2.c)):
            return False
        # H(h|c=g) may exceed H(h); only averaged conditioning is bounded
        if cond1 and not cond2 and k1.pointwise:
            return False
    if k1.pointwise and k1.c:
        z1, z2 = set(k1.z), set(k2.z)
    else:
        z1, z2 = set(k1.z) | set(k1.c), set(k2.z) | set(k2.c)
    if not z1 <= z2:
        return False
    extra = z2 - z1
    for x1, y1 in ((k1.x, k1.y), (k1.y, k1.x)):
        for x2, y2 in ((k2.x, k2.y), (k2.y, k2.x)):
            if set(x2) <= set(x1) and (set(y2) | extra) <= set(y1):
                return True
    return False


def flag_subsumed(constraints: Sequence[EntropicConstraint]) -> list[EntropicConstraint]:
    """Mark every constraint implied by a different, non-equivalent one in the list."""
    out = []
    for i, k in enumerate(constraints):
        sub = False
        for j, other in enumerate(constraints):
            if i == j or other.math_key() == k.math_key():
                continue
            if implies(other, k) and not (implies(k, other) and j > i):
                sub = True
                break
        out.append(replace(k, subsumed=sub))
    return out


def derive(g: Dag, rel: EsepRelation) -> list[EntropicConstraint]:
    """All constraint tiers justified by one e-separation, subsumption flagged."""
    if not e_separated(g, rel):
        raise NotSeparatedError(f"{rel} is not an e-separation in the graph")
    a, b, c, d = rel.a, rel.b, rel.c, rel.d
    desc = set(descendants(g, d)) if d else set()
    c_clear = not (desc & set(c))
    made: list[EntropicConstraint] = []

    def add(**kw):
        k = EntropicConstraint(source=rel, **kw)
        for i, old in enumerate(made):
            if old.math_key() == k.math_key():
                if TIERS.index(k.tier) > TIERS.index(old.tier):
                    made[i] = k
                return
        made.append(k)

    add(x=a, y=b, z=d, c=c, h=d, rhs_given_c=False, pointwise=False, tier="base",
        justification="e-separation")
    if c_clear:
        why = "no member of c descends from d"
        add(x=a, y=b, z=d, c=c, h=d, rhs_given_c=True, pointwise=False, tier="c-clear", justification=why)
        if c:
            add(x=a, y=b, z=d, c=c, h=d, rhs_given_c=True, pointwise=True, tier="c-clear", justification=why)
        for x, y in ((a, b), (b, a)):
            if desc & set(x):
                continue
            why_a = f"{why}; no member of {_fmt(x)} descends from d"
            y_d = tuple(sorted_set(y + d))
            add(x=x, y=y_d, z=(), c=c, h=d, rhs_given_c=True, pointwise=False, tier="a-clear",
                justification=why_a)
            if c:
                add(x=x, y=y_d, z=(), c=c, h=d, rhs_given_c=True, pointwise=True, tier="a-clear",
                    justification=why_a)
    return flag_subsumed(made)


def strongest(constraints: Iterable[EntropicConstraint], pointwise: bool = False) -> list[EntropicConstraint]:
    """Non-subsumed constraints of the averaged (or pointwise) kind."""
    pool = [k for k in constraints if (k.pointwise and bool(k.c)) == pointwise]
    return [k for k in flag_subsumed(pool) if not k.subsumed]


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class ConstraintReport:
    constraint: object
    lhs_bits: float
    rhs_bits: float
    eps: float
    assignment: tuple[tuple[str, object], ...] | None = None
    skipped: bool = False

    @property
    def slack(self) -> float:
        return self.rhs_bits - self.lhs_bits

    @property
    def satisfied(self) -> bool:
        return self.skipped or self.slack >= -self.eps

    @property
    def subsumed(self) -> bool:
        return bool(getattr(self.constraint, "subsumed", False))

    def text(self) -> str:
        k = self.constraint
        name = k.instantiate(dict(self.assignment)).text() if self.assignment and k.pointwise else k.text()
        if self.skipped:
            return f"{name}  [skipped: unsupported conditioning value]"
        mark = "ok" if self.satisfied else "VIOLATED"
        return f"{name}  lhs={self.lhs_bits:.6f} rhs={self.rhs_bits:.6f} slack={self.slack:.6f} {mark}"


def _lhs_rhs(t: JointTable, k: EntropicConstraint, assign: Mapping[str, object] | None):
    if assign is None:
        lhs = dist.cond_mutual_info(t, k.x, k.y, k.z + k.c)
        if not k.h:
            rhs = 0.0
        elif k.rhs_given_c:
            rhs = dist.cond_entropy(t, k.h, k.c)
        else:
            rhs = dist.entropy(t, k.h)
        return lhs, rhs
    sub = dist.condition(dist.marginal(t, k.variables()), assign)
    lhs = dist.cond_mutual_info(sub, k.x, k.y, k.z)
    rhs = dist.entropy(sub, k.h) if k.h else 0.0
    return lhs, rhs


def evaluate(t: JointTable, k: EntropicConstraint, eps: float = EPS_EXACT) -> ConstraintReport:
    """Evaluate one constraint exactly; a pointwise family reports its worst value."""
    for n in k.variables():
        t.axis(n)
    if not (k.pointwise and k.c):
        lhs, rhs = _lhs_rhs(t, k, None)
        return ConstraintReport(k, lhs, rhs, eps)
    if k.assignment is not None:
        assign = dict(k.assignment)
        if t.p(assign) <= 0:
            return ConstraintReport(k, 0.0, 0.0, eps, k.assignment, skipped=True)
        lhs, rhs = _lhs_rhs(t, k, assign)
        return ConstraintReport(k, lhs, rhs, eps, k.assignment)
    worst = None
    for assign in dist.support(t, k.c):
        lhs, rhs = _lhs_rhs(t, k, assign)
        rep = ConstraintReport(k, lhs, rhs, eps, tuple(assign.items()))
        if worst is None or rep.slack < worst.slack:
            worst = rep
    return worst


def pointwise_reports(t: JointTable, k: EntropicConstraint, eps: float = EPS_EXACT) -> list[ConstraintReport]:
    """One report per supported value of ``c`` for a pointwise family."""
    if not (k.pointwise and k.c):
        return [evaluate(t, k, eps)]
    return [evaluate(t, k.instantiate(a), eps) for a in dist.support(t, k.c)]


def derive_all(g: Dag, caps=(2, 2, 2, 2), observed_only: bool = True,
               relations: Sequence[EsepRelation] | None = None) -> list[EntropicConstraint]:
    """Constraints from every enumerated relation, deduplicated, subsumption across the whole set."""
    if relations is None:
        relations = enumerate_esep(g, caps, observed_only)
    seen = set()
    out = []
    for rel in relations:
        for k in derive(g, rel):
            key = k.math_key()
            if key in seen:
                continue
            seen.add(key)
            out.append(k)
    return flag_subsumed(out)


def check_all(g: Dag, t: JointTable, caps=(2, 2, 2, 2), eps: float = EPS_EXACT,
              constraints: Sequence[EntropicConstraint] | None = None) -> list[ConstraintReport]:
    if constraints is None:
        constraints = derive_all(g, caps)
    return [evaluate(t, k, eps) for k in constraints]


def headline(g: Dag, caps=(2, 2, 2, 2), observed_only: bool = True) -> list[EntropicConstraint]:
    """Genuine inequalities: nonempty minimal d, not already a d-separation, not subsumed.

    Relations where a and b are d-separated given c and d are dropped because
    the equality I(a:b|c,d) = 0 makes their inequalities redundant.
    """
    from .graph import d_separated

    rels = [
        r
        for r in enumerate_esep(g, caps, observed_only)
        if r.d and r.minimal and not d_separated(g, r.a, r.b, r.c + r.d)
    ]
    return strongest(derive_all(g, relations=rels))


# ---------------------------------------------------------------- latent bounds


@dataclass(frozen=True)
class LatentBound:
    per_value: tuple[tuple[tuple[tuple[str, object], ...], float], ...]
    max_bits: float
    averaged_bits: float
    argmax: tuple[tuple[str, object], ...]


@dataclass(frozen=True)
class CardinalityBound:
    bits: float
    bound: float
    ceiling: int


def latent_entropy_bound(t: JointTable, a, b, c=()) -> LatentBound:
    """Lower bounds on H(U) for any discrete U with a, b d-separated by c and U.

    Each supported value g of c gives I(a:b|c=g); the maximum is the bound.
    """
    a, b, c = varset(a), varset(b), varset(c)
    if not a or not b:
        raise ValueError("a and b must be nonempty")
    per = []
    for assign in dist.support(t, c):
        per.append((tuple(assign.items()), max(dist.pointwise_cmi(t, a, b, assign), 0.0)))
    best = max(per, key=lambda kv: kv[1])
    avg = max(dist.cond_mutual_info(t, a, b, c), 0.0)
    return LatentBound(tuple(per), best[1], avg, best[0])


def latent_cardinality_bound(t: JointTable, a, b, c=()) -> CardinalityBound:
    bits = latent_entropy_bound(t, a, b, c).max_bits
    bound = 2.0**bits
    return CardinalityBound(bits, bound, max(1, math.ceil(bound - 1e-9)))


@dataclass(frozen=True)
class CardinalityConstraint:
    """I(a:b|c=g) <= log2 |latent| for every g, from a d-separation through ``latent``."""

    a: tuple[str, ...]
    b: tuple[str, ...]
    c: tuple[str, ...]
    latent: tuple[str, ...]
    cardinality: int
    subsumed: bool = False
    pointwise: bool = False

    def text(self) -> str:
        cond = "|" + "".join(sorted_set(self.c)) + "=" + "".join(n.lower() for n in sorted_set(self.c)) if self.c else ""
        return (
            f"I({_fmt(self.a)}:{_fmt(self.b)}{cond}) <= log2|{_fmt(self.latent)}| "
            f"= {math.log2(self.cardinality):.6f}"
        )

    def __str__(self):
        return self.text()


def evaluate_cardinality(t: JointTable, k: CardinalityConstraint, eps: float = EPS_EXACT) -> ConstraintReport:
    bound = latent_entropy_bound(t, k.a, k.b, k.c)
    return ConstraintReport(k, bound.max_bits, math.log2(k.cardinality), eps, bound.argmax or None)


def sort_reports(reports: Iterable[ConstraintReport]) -> list[ConstraintReport]:
    return sorted(reports, key=lambda r: (r.satisfied, r.slack))


__all__ = [
    "EntropicConstraint",
    "ConstraintReport",
    "derive",
    "derive_all",
    "headline",
    "strongest",
    "implies",
    "flag_subsumed",
    "evaluate",
    "pointwise_reports",
    "check_all",
    "latent_entropy_bound",
    "latent_cardinality_bound",
    "CardinalityConstraint",
    "evaluate_cardinality",
    "natural_key",
]
