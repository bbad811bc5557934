"""Exact finite joint distributions and Shannon information measures (bits)."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, Mapping

import numpy as np

from .graph import natural_key, varset

SUM_TOL = 1e-9


class TableError(ValueError):
    """Malformed table or reference to an unknown variable."""


class ZeroProbabilityError(TableError):
    """Conditioning on an event of probability zero."""


def _value_key(v):
    return (0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v))


@dataclass(frozen=True, eq=False)
class JointTable:
    """Dense joint probability table.

    ``prob`` has one axis per variable, in ``variables`` order, with axis
    ``i`` indexed by the positions in ``domains[i]``.
    """

    variables: tuple[str, ...]
    domains: tuple[tuple, ...]
    prob: np.ndarray
    sample_size: int | None = field(default=None)

    def __post_init__(self):
        variables = varset(self.variables)
        domains = tuple(tuple(d) for d in self.domains)
        prob = np.asarray(self.prob, dtype=float)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "domains", domains)
        if len(domains) != len(variables):
            raise TableError("one domain per variable required")
        for v, d in zip(variables, domains):
            if not d:
                raise TableError(f"empty domain for {v}")
            if len(set(d)) != len(d):
                raise TableError(f"duplicate domain values for {v}")
        shape = tuple(len(d) for d in domains)
        if prob.shape != shape:
            prob = prob.reshape(shape)
        if np.any(prob < 0) or not np.all(np.isfinite(prob)):
            raise TableError("probabilities must be finite and nonnegative")
        total = math.fsum(prob.ravel())
        if abs(total - 1.0) > SUM_TOL:
            raise TableError(f"probabilities sum to {total!r}, not 1")
        prob.setflags(write=False)
        object.__setattr__(self, "prob", prob)

    @classmethod
    def from_dict(cls, variables, mapping: Mapping[tuple, float], domains=None) -> "JointTable":
        variables = varset(variables)
        if domains is None:
            seen = [set() for _ in variables]
            for key in mapping:
                for s, v in zip(seen, key):
                    s.add(v)
            domains = [tuple(sorted(s, key=_value_key)) for s in seen]
        domains = [tuple(d) for d in domains]
        index = [{v: i for i, v in enumerate(d)} for d in domains]
        arr = np.zeros(tuple(len(d) for d in domains))
        for key, p in mapping.items():
            if len(key) != len(variables):
                raise TableError(f"assignment {key} has the wrong arity")
            try:
                pos = tuple(ix[v] for ix, v in zip(index, key))
            except KeyError as exc:
                raise TableError(f"value {exc.args[0]!r} outside the declared domain") from None
            arr[pos] += p
        return cls(variables, tuple(domains), arr)

    @classmethod
    def point_mass(cls, assignment: Mapping[str, object]) -> "JointTable":
        names = tuple(assignment)
        return cls(names, tuple((assignment[n],) for n in names), np.ones((1,) * len(names)))

    @property
    def shape(self):
        return self.prob.shape

    def axis(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise TableError(f"unknown variable {name!r}") from None

    def domain(self, name: str) -> tuple:
        return self.domains[self.axis(name)]

    def items(self, nonzero: bool = True) -> Iterator[tuple[tuple, float]]:
        for pos in itertools.product(*(range(len(d)) for d in self.domains)):
            p = float(self.prob[pos])
            if p > 0 or not nonzero:
                yield tuple(d[i] for d, i in zip(self.domains, pos)), p

    def as_dict(self) -> dict[tuple, float]:
        return dict(self.items())

    def p(self, assignment: Mapping[str, object]) -> float:
        """Probability of a (partial) assignment."""
        names = tuple(assignment)
        m = marginal(self, names) if names else None
        if m is None:
            return 1.0
        pos = []
        for n in names:
            d = m.domain(n)
            if assignment[n] not in d:
                return 0.0
            pos.append(d.index(assignment[n]))
        return float(m.prob[tuple(pos)])

    def reorder(self, variables) -> "JointTable":
        variables = varset(variables)
        if set(variables) != set(self.variables):
            raise TableError("reorder needs the same variable set")
        perm = [self.axis(v) for v in variables]
        return JointTable(variables, tuple(self.domains[i] for i in perm), self.prob.transpose(perm))

    def equals(self, other: "JointTable", tol: float = 1e-9) -> bool:
        """Same distribution up to variable order, domain order and ``tol``."""
        if set(self.variables) != set(other.variables):
            return False
        a = self.as_dict()
        o = other.reorder(self.variables)
        b = o.as_dict()
        keys = set(a) | set(b)
        return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol for k in keys)

    def __repr__(self):
        return f"JointTable({', '.join(self.variables)}; {len(self.as_dict())} nonzero cells)"


def _names(t: JointTable, s) -> tuple[str, ...]:
    s = varset(s)
    for n in s:
        t.axis(n)
    return s


def _disjoint(*sets):
    for x, y in itertools.combinations(sets, 2):
        both = set(x) & set(y)
        if both:
            raise TableError(f"variable sets overlap on {sorted(both)}")


def marginal(t: JointTable, s) -> JointTable:
    s = _names(t, s)
    if not s:
        raise TableError("marginal over an empty set")
    drop = tuple(i for i, v in enumerate(t.variables) if v not in s)
    arr = t.prob.sum(axis=drop) if drop else t.prob
    kept = [v for v in t.variables if v in s]
    perm = [kept.index(v) for v in s]
    return JointTable(s, tuple(t.domain(v) for v in s), np.transpose(arr, perm), t.sample_size)


def condition(t: JointTable, on: Mapping[str, object]) -> JointTable:
    """Distribution of the remaining variables given the event ``on``."""
    if not on:
        return t
    names = _names(t, tuple(on))
    index: list = [slice(None)] * len(t.variables)
    for n in names:
        d = t.domain(n)
        if on[n] not in d:
            raise ZeroProbabilityError(f"{n}={on[n]!r} is outside the domain")
        index[t.axis(n)] = d.index(on[n])
    sub = t.prob[tuple(index)]
    total = math.fsum(np.ravel(sub))
    if total <= 0:
        raise ZeroProbabilityError(f"P({_fmt_assign(on)}) = 0")
    rest = tuple(v for v in t.variables if v not in names)
    if not rest:
        raise TableError("conditioning on every variable leaves nothing")
    return JointTable(rest, tuple(t.domain(v) for v in rest), sub / total)


def _fmt_assign(on):
    return ",".join(f"{k}={v}" for k, v in on.items())


def _h(p: np.ndarray) -> float:
    p = p[p > 0]
    return math.fsum(-p * np.log2(p))


def entropy(t: JointTable, s) -> float:
    s = _names(t, s)
    if not s:
        return 0.0
    return _h(marginal(t, s).prob.ravel())


def cond_entropy(t: JointTable, s, given=()) -> float:
    s, given = _names(t, s), _names(t, given)
    _disjoint(s, given)
    if not given:
        return entropy(t, s)
    return entropy(t, s + given) - entropy(t, given)


def mutual_info(t: JointTable, s, u) -> float:
    s, u = _names(t, s), _names(t, u)
    _disjoint(s, u)
    return entropy(t, s) + entropy(t, u) - entropy(t, s + u)


def cond_mutual_info(t: JointTable, s, u, c=()) -> float:
    s, u, c = _names(t, s), _names(t, u), _names(t, c)
    _disjoint(s, u, c)
    if not c:
        return mutual_info(t, s, u)
    return entropy(t, s + c) + entropy(t, u + c) - entropy(t, s + u + c) - entropy(t, c)


def pointwise_cmi(t: JointTable, s, u, c_assign: Mapping[str, object]) -> float:
    """I(s:u | c=value) for one conditioning value."""
    s, u = _names(t, s), _names(t, u)
    _disjoint(s, u, tuple(c_assign))
    if not c_assign:
        return mutual_info(t, s, u)
    sub = condition(marginal(t, s + u + tuple(c_assign)), c_assign)
    return mutual_info(sub, s, u)


def support(t: JointTable, c) -> list[dict]:
    """Assignments of ``c`` with positive probability, in domain order."""
    c = _names(t, c)
    if not c:
        return [{}]
    m = marginal(t, c)
    return [dict(zip(c, key)) for key, _ in m.items()]


def product(*tables: JointTable) -> JointTable:
    """Joint of independent tables over disjoint variables."""
    arr = np.ones(())
    names: tuple[str, ...] = ()
    doms: tuple = ()
    for t in tables:
        _disjoint(names, t.variables)
        arr = np.multiply.outer(arr, t.prob)
        names += t.variables
        doms += t.domains
    return JointTable(names, doms, arr)


# ---------------------------------------------------------------- text format


def _parse_value(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def parse_table(text: str) -> JointTable:
    """Parse delimited text; the last header column is ``prob`` or ``count``.

    Count tables are normalized and keep their total as ``sample_size``.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise TableError("empty table")
    delim = "\t" if "\t" in lines[0] else ","
    rows = list(csv.reader(io.StringIO("\n".join(lines)), delimiter=delim))
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[-1] not in ("prob", "count"):
        raise TableError("header must list variables then a final 'prob' or 'count' column (line 1)")
    counts = header[-1] == "count"
    variables = varset(header[:-1])
    mapping: dict[tuple, Decimal] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        row = [x.strip() for x in row]
        if len(row) != len(header):
            raise TableError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        key = tuple(_parse_value(x) for x in row[:-1])
        if key in mapping:
            raise TableError(f"line {lineno}: duplicate assignment {key}")
        try:
            val = Decimal(row[-1])
        except InvalidOperation:
            raise TableError(f"line {lineno}: bad number {row[-1]!r}") from None
        if val < 0 or not val.is_finite():
            raise TableError(f"line {lineno}: negative or non-finite entry")
        if counts and val != val.to_integral_value():
            raise TableError(f"line {lineno}: counts must be integers")
        mapping[key] = val
    total = sum(mapping.values(), Decimal(0))
    if counts:
        if total <= 0:
            raise TableError("counts sum to zero")
        probs = {k: float(v / total) for k, v in mapping.items()}
    else:
        if abs(total - 1) > Decimal(str(SUM_TOL)):
            raise TableError(f"probabilities sum to {total}, not 1")
        # values are kept as written so that serialize/parse round-trips exactly
        probs = {k: float(v) for k, v in mapping.items()}
    t = JointTable.from_dict(variables, probs)
    if counts:
        object.__setattr__(t, "sample_size", int(total))
    return t


def serialize_table(t: JointTable) -> str:
    """Canonical text: variables in table order, nonzero rows in domain order."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(list(t.variables) + ["prob"])
    for key, p in t.items():
        w.writerow([str(v) for v in key] + [repr(p)])
    return out.getvalue()


def sort_names(names: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(names, key=natural_key))
