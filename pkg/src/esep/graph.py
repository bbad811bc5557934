"""Hidden-variable DAGs and separation primitives.

Graphs are immutable values. Node sets are passed around as tuples of
names; any iterable of strings (or a single name) is accepted at the
public boundary.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

SPLIT_SUFFIX = "@split"


class GraphError(ValueError):
    """Malformed graph or invalid node reference."""


class CycleError(GraphError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("edge set is cyclic: " + " -> ".join(self.cycle))


class NotSeparatedError(GraphError):
    """An operation that needs an e-separation received a relation that is not one."""


def natural_key(name: str):
    """Sort key that orders ``Y2`` before ``Y10``."""
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


def varset(names) -> tuple[str, ...]:
    """Normalize a name, or an iterable of names, into a duplicate-free tuple."""
    if names is None:
        return ()
    if isinstance(names, str):
        return (names,)
    out = tuple(names)
    if len(set(out)) != len(out):
        raise GraphError(f"duplicate names in variable set {out}")
    for n in out:
        if not isinstance(n, str) or not n:
            raise GraphError(f"invalid variable name {n!r}")
    return out


def sorted_set(names) -> tuple[str, ...]:
    return tuple(sorted(set(names), key=natural_key))


@dataclass(frozen=True)
class Dag:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    latent: frozenset[str] = frozenset()

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(self.edges))
        object.__setattr__(self, "latent", frozenset(self.latent))
        if len(set(nodes)) != len(nodes):
            raise GraphError("duplicate node names")
        for n in nodes:
            if not isinstance(n, str) or not n or any(ch.isspace() for ch in n):
                raise GraphError(f"invalid node name {n!r}")
        known = set(nodes)
        for p, c in self.edges:
            if p not in known or c not in known:
                raise GraphError(f"edge {p} -> {c} references an undeclared node")
            if p == c:
                raise GraphError(f"self-loop on {p}")
        if not self.latent <= known:
            raise GraphError(f"latent marks on undeclared nodes {sorted(self.latent - known)}")
        self.topological_order()

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], latent=(), nodes=()) -> "Dag":
        """Build a graph; nodes are collected from ``nodes``, then edges, in first-seen order."""
        order: dict[str, None] = dict.fromkeys(nodes)
        edges = list(edges)
        for p, c in edges:
            order.setdefault(p)
            order.setdefault(c)
        for u in latent:
            order.setdefault(u)
        if len(set(edges)) != len(edges):
            raise GraphError("duplicate edges")
        return cls(tuple(order), frozenset(edges), frozenset(latent))

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if n not in self.latent)

    def is_observed(self, node: str) -> bool:
        return node not in self.latent

    def parents(self, node: str) -> tuple[str, ...]:
        return tuple(p for p in self.nodes if (p, node) in self.edges)

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(c for c in self.nodes if (node, c) in self.edges)

    def topological_order(self) -> tuple[str, ...]:
        indeg = {n: 0 for n in self.nodes}
        for _, c in self.edges:
            indeg[c] += 1
        ready = deque(n for n in self.nodes if indeg[n] == 0)
        out = []
        while ready:
            n = ready.popleft()
            out.append(n)
            for c in self.children(n):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(out) != len(self.nodes):
            raise CycleError(_find_cycle(self.nodes, self.edges))
        return tuple(out)

    def check_nodes(self, names) -> tuple[str, ...]:
        names = varset(names)
        unknown = [n for n in names if n not in self.nodes]
        if unknown:
            raise GraphError(f"unknown node(s) {unknown}")
        return names

    def __str__(self):
        return serialize_graph(self)


def _find_cycle(nodes, edges) -> list[str]:
    succ = {n: [c for c in nodes if (n, c) in edges] for n in nodes}
    color = dict.fromkeys(nodes, 0)
    stack: list[str] = []

    def visit(n):
        color[n] = 1
        stack.append(n)
        for c in succ[n]:
            if color[c] == 1:
                return stack[stack.index(c):] + [c]
            if color[c] == 0:
                found = visit(c)
                if found:
                    return found
        stack.pop()
        color[n] = 2
        return None

    for n in nodes:
        if color[n] == 0:
            found = visit(n)
            if found:
                return found
    return []


@dataclass(frozen=True)
class EsepRelation:
    """``a`` and ``b`` e-separated given ``c`` upon deleting ``d``."""

    a: tuple[str, ...]
    b: tuple[str, ...]
    c: tuple[str, ...] = ()
    d: tuple[str, ...] = ()
    minimal: bool | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, varset(getattr(self, name)))
        if not self.a or not self.b:
            raise GraphError("a and b must be nonempty")
        sets = [set(self.a), set(self.b), set(self.c), set(self.d)]
        for i, j in itertools.combinations(range(4), 2):
            if sets[i] & sets[j]:
                raise GraphError(f"relation sets overlap: {sorted(sets[i] & sets[j])}")

    def swapped(self) -> "EsepRelation":
        return EsepRelation(self.b, self.a, self.c, self.d, self.minimal)

    def key(self):
        return tuple(tuple(sorted(s, key=natural_key)) for s in (self.a, self.b, self.c, self.d))

    def __str__(self):
        def fmt(s):
            return "".join(sorted_set(s))

        cond = f" | {fmt(self.c)}" if self.c else ""
        upon = f" upon ~{fmt(self.d)}" if self.d else ""
        return f"({fmt(self.a)} _||_e {fmt(self.b)}{cond}{upon})"


def descendants(g: Dag, s) -> tuple[str, ...]:
    """``s`` together with every node reachable from it along directed edges."""
    s = g.check_nodes(s)
    seen = set(s)
    queue = deque(s)
    while queue:
        n = queue.popleft()
        for c in g.children(n):
            if c not in seen:
                seen.add(c)
                queue.append(c)
    return tuple(n for n in g.nodes if n in seen)


def ancestors(g: Dag, s) -> tuple[str, ...]:
    s = g.check_nodes(s)
    seen = set(s)
    queue = deque(s)
    while queue:
        n = queue.popleft()
        for p in g.parents(n):
            if p not in seen:
                seen.add(p)
                queue.append(p)
    return tuple(n for n in g.nodes if n in seen)


def delete(g: Dag, d) -> Dag:
    d = set(g.check_nodes(d))
    if not d:
        return g
    return Dag(
        tuple(n for n in g.nodes if n not in d),
        frozenset(e for e in g.edges if e[0] not in d and e[1] not in d),
        g.latent - d,
    )


def split_name(node: str) -> str:
    return node + SPLIT_SUFFIX


def split(g: Dag, d) -> Dag:
    """Split each node of ``d`` into itself (incoming edges) and ``<name>@split`` (outgoing)."""
    d = g.check_nodes(d)
    if not d:
        return g
    for n in g.nodes:
        if n.endswith(SPLIT_SUFFIX):
            raise GraphError(f"node {n} already uses the reserved suffix {SPLIT_SUFFIX}")
    ds = set(d)
    edges = set()
    for p, c in g.edges:
        edges.add((split_name(p), c) if p in ds else (p, c))
    nodes = g.nodes + tuple(split_name(n) for n in d)
    return Dag(nodes, frozenset(edges), g.latent)


def mutilate(g: Dag, e) -> Dag:
    e = set(g.check_nodes(e))
    if not e:
        return g
    return Dag(g.nodes, frozenset(x for x in g.edges if x[1] not in e), g.latent)


def _check_disjoint(g: Dag, *sets):
    out = [g.check_nodes(s) for s in sets]
    for i, j in itertools.combinations(range(len(out)), 2):
        both = set(out[i]) & set(out[j])
        if both:
            raise GraphError(f"separation sets overlap on {sorted(both)}")
    return out


def d_separated(g: Dag, a, b, c=()) -> bool:
    """Reachability ("Bayes ball") test for ``a`` d-separated from ``b`` given ``c``."""
    a, b, c = _check_disjoint(g, a, b, c)
    if not a or not b:
        raise GraphError("a and b must be nonempty")
    cset = set(c)
    anc_c = set(ancestors(g, c))
    targets = set(b)
    # (node, arrived_from_child): True means we came up an edge into a parent.
    visited: set[tuple[str, bool]] = set()
    queue = deque((n, True) for n in a)
    while queue:
        node, up = queue.popleft()
        if (node, up) in visited:
            continue
        visited.add((node, up))
        if node in targets and node not in cset:
            return False
        if up:
            if node in cset:
                continue
            for p in g.parents(node):
                queue.append((p, True))
            for ch in g.children(node):
                queue.append((ch, False))
        else:
            if node not in cset:
                for ch in g.children(node):
                    queue.append((ch, False))
            if node in anc_c:
                for p in g.parents(node):
                    queue.append((p, True))
    return True


def _neighbors(g: Dag) -> dict[str, list[str]]:
    # node order, not set order, so path enumeration is reproducible across runs
    return {n: [m for m in g.nodes if (n, m) in g.edges or (m, n) in g.edges] for n in g.nodes}


def simple_paths(g: Dag, start: str, end: str, avoid=()) -> Iterator[tuple[str, ...]]:
    """All simple paths in the skeleton from ``start`` to ``end``."""
    nb = _neighbors(g)
    avoid = set(avoid)

    def walk(path):
        last = path[-1]
        if last == end:
            yield tuple(path)
            return
        for n in nb[last]:
            if n not in path and n not in avoid:
                path.append(n)
                yield from walk(path)
                path.pop()

    yield from walk([start])


def colliders_on(g: Dag, path) -> tuple[str, ...]:
    return tuple(
        path[i]
        for i in range(1, len(path) - 1)
        if (path[i - 1], path[i]) in g.edges and (path[i + 1], path[i]) in g.edges
    )


def path_is_open(g: Dag, path, c, strict: bool = False) -> bool:
    """Open given ``c``; with ``strict`` every collider must itself be in ``c``."""
    cset = set(c)
    anc_c = set(ancestors(g, tuple(cset))) if not strict else cset
    coll = set(colliders_on(g, path))
    for n in path[1:-1]:
        if n in coll:
            if n not in anc_c:
                return False
        elif n in cset:
            return False
    return True


def open_paths(g: Dag, a, b, c=(), strict: bool = False) -> Iterator[tuple[str, ...]]:
    a, b, c = _check_disjoint(g, a, b, c)
    bset = set(b)
    for s in a:
        for t in b:
            # a path through another member of b is subsumed by its shorter prefix
            for p in simple_paths(g, s, t, avoid=(set(a) | bset) - {s, t}):
                if path_is_open(g, p, c, strict):
                    yield p


def d_separated_by_paths(g: Dag, a, b, c=()) -> bool:
    """Exhaustive path-enumeration oracle for :func:`d_separated`."""
    a, b, c = _check_disjoint(g, a, b, c)
    if not a or not b:
        raise GraphError("a and b must be nonempty")
    return next(open_paths(g, a, b, c), None) is None


def _rel_for(g: Dag, rel: EsepRelation) -> EsepRelation:
    g.check_nodes(rel.a + rel.b + rel.c + rel.d)
    return rel


def e_separated(g: Dag, rel: EsepRelation) -> bool:
    rel = _rel_for(g, rel)
    return d_separated(delete(g, rel.d), rel.a, rel.b, rel.c)


def is_minimal_bottleneck(g: Dag, rel: EsepRelation) -> bool:
    if not e_separated(g, rel):
        raise NotSeparatedError(f"{rel} is not an e-separation")
    d = rel.d
    # monotone in d, so testing the size |d|-1 subsets suffices
    for i in range(len(d)):
        sub = d[:i] + d[i + 1:]
        if e_separated(g, EsepRelation(rel.a, rel.b, rel.c, sub)):
            return False
    return True


def _subsets(items, lo, hi):
    for k in range(lo, hi + 1):
        yield from itertools.combinations(items, k)


def enumerate_esep(g: Dag, caps=(2, 2, 2, 2), observed_only: bool = True) -> list[EsepRelation]:
    """All e-separation relations within the size caps ``(|a|, |b|, |c|, |d|)``.

    Symmetric duplicates are dropped by keeping the orientation whose ``a``
    sorts first. Results are ordered by the sorted sets.
    """
    ca, cb, cc, cd = caps
    if ca < 1 or cb < 1:
        raise GraphError("caps for a and b must be at least 1")
    ends = sorted(g.observed, key=natural_key)
    pool = sorted(g.observed if observed_only else g.nodes, key=natural_key)
    out = []
    seen = set()
    for a in _subsets(ends, 1, ca):
        rest_b = [n for n in ends if n not in a]
        for b in _subsets(rest_b, 1, cb):
            # canonical orientation: a holds the smallest name of a | b
            if natural_key(b[0]) < natural_key(a[0]) and len(b) <= ca and len(a) <= cb:
                continue
            used = set(a) | set(b)
            rest = [n for n in pool if n not in used]
            for d in _subsets(rest, 0, cd):
                gd = delete(g, d)
                rest_c = [n for n in rest if n not in d]
                for c in _subsets(rest_c, 0, cc):
                    if d_separated(gd, a, b, c):
                        rel = EsepRelation(a, b, c, d)
                        if rel.key() in seen:
                            continue
                        seen.add(rel.key())
                        out.append(rel)
    out = [
        EsepRelation(r.a, r.b, r.c, r.d, minimal=is_minimal_bottleneck(g, r)) for r in out
    ]
    out.sort(key=lambda r: [[natural_key(n) for n in s] for s in r.key()])
    return out


# ---------------------------------------------------------------- DSL


class DslError(GraphError):
    def __init__(self, message, line=None, column=None):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


_NAME = re.compile(r"[^\s#]+")


def parse_graph(text: str) -> Dag:
    """Parse the line-oriented graph DSL.

    Declarations ``obs A B`` / ``lat U`` and edges ``A -> B`` (chains like
    ``A -> B -> C`` are allowed). ``#`` starts a comment. Nodes that appear
    only in edges are observed.
    """
    nodes: dict[str, None] = {}
    latent: set[str] = set()
    declared: set[str] = set()
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        toks = [(m.group(), m.start() + 1) for m in _NAME.finditer(line)]
        head = toks[0][0]
        if head in ("obs", "lat"):
            if len(toks) < 2:
                raise DslError(f"'{head}' needs at least one name", lineno, toks[0][1])
            for name, col in toks[1:]:
                if name == "->":
                    raise DslError("unexpected '->' in declaration", lineno, col)
                if name in declared:
                    raise DslError(f"node {name} declared twice", lineno, col)
                declared.add(name)
                nodes.setdefault(name)
                if head == "lat":
                    latent.add(name)
            continue
        if len(toks) < 3 or len(toks) % 2 == 0:
            raise DslError("expected '<parent> -> <child>'", lineno, toks[0][1])
        for i in range(1, len(toks), 2):
            if toks[i][0] != "->":
                raise DslError(f"expected '->', found {toks[i][0]!r}", lineno, toks[i][1])
        names = [toks[i] for i in range(0, len(toks), 2)]
        for name, col in names:
            if name in ("obs", "lat", "->"):
                raise DslError(f"reserved word {name!r} used as a node name", lineno, col)
            nodes.setdefault(name)
        for (p, _), (ch, col) in zip(names, names[1:]):
            if p == ch:
                raise DslError(f"self-loop on {p}", lineno, col)
            if (p, ch) in edges:
                raise DslError(f"duplicate edge {p} -> {ch}", lineno, col)
            edges.append((p, ch))
    return Dag(tuple(nodes), frozenset(edges), frozenset(latent))


def serialize_graph(g: Dag) -> str:
    """Canonical DSL text: sorted declarations, then sorted edges."""
    lines = []
    obs = sorted(g.observed, key=natural_key)
    lat = sorted(g.latent, key=natural_key)
    if obs:
        lines.append("obs " + " ".join(obs))
    if lat:
        lines.append("lat " + " ".join(lat))
    for p, c in sorted(g.edges, key=lambda e: (natural_key(e[0]), natural_key(e[1]))):
        lines.append(f"{p} -> {c}")
    return "\n".join(lines) + "\n"


def canonical(g: Dag) -> Dag:
    """Same graph with nodes in sorted order."""
    return Dag(tuple(sorted(g.nodes, key=natural_key)), g.edges, g.latent)
