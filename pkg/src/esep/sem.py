"""Finite structural equation models: exact joints, interventions and witnesses.

A model assigns every node a finite noise distribution and a total
mechanism table ``f_V(parents, noise) -> value``. Noises are mutually
independent, so the joint factorizes over the DAG.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import dist
from .dist import JointTable, ZeroProbabilityError
from .graph import (
    Dag,
    EsepRelation,
    GraphError,
    NotSeparatedError,
    colliders_on,
    delete,
    e_separated,
    mutilate,
    open_paths,
    parse_graph,
    natural_key,
    serialize_graph,
    varset,
)

DEFAULT_STATE_CAP = int(os.environ.get("ESEP_STATE_CAP", 10**7))


class SemError(ValueError):
    pass


class WitnessError(SemError):
    pass


@dataclass(frozen=True, eq=False)
class SemModel:
    """``mech[v]`` holds value *indices*, shape ``parent sizes + (noise size,)``.

    Parent axes follow ``dag.parents(v)`` order.
    """

    dag: Dag
    domains: Mapping[str, tuple]
    noise: Mapping[str, np.ndarray]
    mech: Mapping[str, np.ndarray]

    def __post_init__(self):
        g = self.dag
        domains = {v: tuple(self.domains[v]) for v in g.nodes}
        noise = {}
        mech = {}
        for v in g.nodes:
            if v not in self.noise or v not in self.mech:
                raise SemError(f"node {v} lacks a noise distribution or mechanism")
            pn = np.asarray(self.noise[v], dtype=float)
            if pn.ndim != 1 or np.any(pn < 0) or abs(math.fsum(pn) - 1) > 1e-9:
                raise SemError(f"noise of {v} is not a distribution")
            m = np.asarray(self.mech[v], dtype=np.int64)
            want = tuple(len(domains[p]) for p in g.parents(v)) + (len(pn),)
            if m.shape != want:
                raise SemError(f"mechanism of {v} has shape {m.shape}, expected {want}")
            if m.size and (m.min() < 0 or m.max() >= len(domains[v])):
                raise SemError(f"mechanism of {v} leaves its domain")
            pn.setflags(write=False)
            m.setflags(write=False)
            noise[v], mech[v] = pn, m
        object.__setattr__(self, "domains", domains)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "mech", mech)

    @classmethod
    def from_functions(
        cls,
        dag: Dag,
        domains: Mapping[str, tuple],
        noise: Mapping[str, object],
        funcs: Mapping[str, Callable],
    ) -> "SemModel":
        """Tabulate ``funcs[v](parent_values: dict, noise_index) -> value``.

        Nodes missing from ``noise`` get a point-mass noise.
        """
        tables = {}
        noises = {}
        for v in dag.nodes:
            pn = np.asarray(noise.get(v, (1.0,)), dtype=float)
            pa = dag.parents(v)
            dom = tuple(domains[v])
            shape = tuple(len(domains[p]) for p in pa) + (len(pn),)
            m = np.zeros(shape, dtype=np.int64)
            for idx in itertools.product(*(range(s) for s in shape)):
                pv = {p: domains[p][i] for p, i in zip(pa, idx[:-1])}
                out = funcs[v](pv, idx[-1])
                if out not in dom:
                    raise SemError(f"mechanism of {v} returned {out!r} outside its domain")
                m[idx] = dom.index(out)
            tables[v], noises[v] = m, pn
        return cls(dag, domains, noises, tables)

    def cpt(self, v: str) -> np.ndarray:
        """P(v | parents), axes ``parents + (v,)``."""
        m = self.mech[v]
        k = len(self.domains[v])
        onehot = np.eye(k)[m]  # parents + (noise, value)
        return np.tensordot(onehot, self.noise[v], axes=([-2], [0])) if m.ndim > 1 else self.noise[v] @ onehot

    def state_count(self) -> int:
        return math.prod(len(self.domains[v]) for v in self.dag.nodes)


def joint(sem: SemModel, cap: int | None = None) -> JointTable:
    """Exact joint as the product of per-node conditionals, in node order."""
    g = sem.dag
    cap = DEFAULT_STATE_CAP if cap is None else cap
    if sem.state_count() > cap:
        raise SemError(f"state space {sem.state_count()} exceeds the cap {cap}")
    pos = {v: i for i, v in enumerate(g.nodes)}
    n = len(g.nodes)
    arr = np.ones(tuple(len(sem.domains[v]) for v in g.nodes))
    for v in g.nodes:
        axes = [pos[p] for p in g.parents(v)] + [pos[v]]
        cpt = sem.cpt(v)
        order = np.argsort(axes)
        cpt = np.transpose(cpt, order)
        shape = [1] * n
        for ax in axes:
            shape[ax] = len(sem.domains[g.nodes[ax]])
        arr = arr * cpt.reshape(shape)
    return JointTable(g.nodes, tuple(sem.domains[v] for v in g.nodes), arr)


def joint_by_noise_enumeration(sem: SemModel, cap: int = 10**6) -> JointTable:
    """Independent route: push every noise configuration through the mechanisms."""
    g = sem.dag
    order = g.topological_order()
    sizes = [len(sem.noise[v]) for v in order]
    if math.prod(sizes) > cap:
        raise SemError("noise configuration space exceeds the cap")
    acc: dict[tuple, list[float]] = {}
    for eps in itertools.product(*(range(s) for s in sizes)):
        vals: dict[str, int] = {}
        w = 1.0
        for v, e in zip(order, eps):
            w *= sem.noise[v][e]
            idx = tuple(vals[p] for p in g.parents(v)) + (e,)
            vals[v] = int(sem.mech[v][idx])
        if w == 0:
            continue
        key = tuple(sem.domains[v][vals[v]] for v in g.nodes)
        acc.setdefault(key, []).append(w)
    probs = {k: math.fsum(ws) for k, ws in acc.items()}
    return JointTable.from_dict(g.nodes, probs, [sem.domains[v] for v in g.nodes])


def observed_joint(sem: SemModel, cap: int | None = None) -> JointTable:
    obs = sem.dag.observed
    if not obs:
        raise SemError("model has no observed nodes")
    return dist.marginal(joint(sem, cap), obs)


def intervene(sem: SemModel, on: Mapping[str, object]) -> SemModel:
    """do(on): intervened nodes become constants and lose their incoming edges."""
    if not on:
        return sem
    g = sem.dag
    g.check_nodes(tuple(on))
    for v, val in on.items():
        if val not in sem.domains[v]:
            raise SemError(f"do({v}={val!r}): value outside the domain")
    g2 = mutilate(g, tuple(on))
    noise = dict(sem.noise)
    mech = dict(sem.mech)
    for v, val in on.items():
        noise[v] = np.array([1.0])
        mech[v] = np.array([sem.domains[v].index(val)])
    return SemModel(g2, sem.domains, noise, mech)


def random_sem(g: Dag, domain_sizes=2, seed: int = 0, noise_size: int = 4) -> SemModel:
    """Seeded random mechanisms and Dirichlet noise weights.

    ``domain_sizes`` is an int for every node or a per-node mapping.
    """
    rng = np.random.default_rng(seed)
    if isinstance(domain_sizes, int):
        sizes = {v: domain_sizes for v in g.nodes}
    else:
        sizes = {v: int(domain_sizes.get(v, 2)) for v in g.nodes}
    if min(sizes.values(), default=1) < 1:
        raise SemError("domain sizes must be at least 1")
    domains = {v: tuple(range(sizes[v])) for v in g.nodes}
    noise, mech = {}, {}
    for v in g.nodes:
        noise[v] = rng.dirichlet(np.ones(noise_size))
        shape = tuple(sizes[p] for p in g.parents(v)) + (noise_size,)
        mech[v] = rng.integers(0, sizes[v], size=shape)
    sem = SemModel(g, domains, noise, mech)
    if sem.state_count() > DEFAULT_STATE_CAP:
        raise SemError(f"state space {sem.state_count()} exceeds the cap")
    return sem


# ---------------------------------------------------------------- witnesses

BIT = (0, 1)


def _in_path_parents(g: Dag, path, node_idx) -> list[str]:
    out = []
    for j in (node_idx - 1, node_idx + 1):
        if 0 <= j < len(path) and (path[j], path[node_idx]) in g.edges:
            out.append(path[j])
    return out


def _validate_path(g: Dag, path):
    path = tuple(path)
    if len(path) < 2 or len(set(path)) != len(path):
        raise WitnessError("path must be a simple path with at least two nodes")
    g.check_nodes(path)
    for x, y in zip(path, path[1:]):
        if (x, y) not in g.edges and (y, x) not in g.edges:
            raise WitnessError(f"{x} and {y} are not adjacent")
    return path


def _build_witness(g: Dag, path, chains, copies_from, biased: Mapping[str, float]):
    """Binary SEM: path nodes per their in-path parents, chain nodes copy, rest constant."""
    funcs: dict[str, Callable] = {}
    noise: dict[str, tuple] = {}
    for i, v in enumerate(path):
        pa = _in_path_parents(g, path, i)
        if len(pa) == 2:
            funcs[v] = lambda pv, e, p=tuple(pa): int(pv[p[0]] == pv[p[1]])
        elif len(pa) == 1:
            funcs[v] = lambda pv, e, p=pa[0]: pv[p]
        else:
            noise[v] = (0.5, 0.5)
            funcs[v] = lambda pv, e: e
    for v, src in copies_from.items():
        funcs[v] = lambda pv, e, p=src: pv[p]
    for v, bias in biased.items():
        noise[v] = (bias, 1.0 - bias)
        funcs[v] = lambda pv, e: e
    for v in g.nodes:
        funcs.setdefault(v, lambda pv, e: 0)
    domains = {v: BIT for v in g.nodes}
    return SemModel.from_functions(g, domains, noise, funcs)


def path_witness(g: Dag, path, c=()) -> SemModel:
    """Binary model along one path that is open given ``c`` with its colliders in ``c``.

    Colliders output 1 iff their two in-path parents agree, nodes with one
    in-path parent copy it, and nodes with none are fair coins. Off-path
    nodes are constant 0. Given every collider equal to 1, the two end
    points are equal fair bits.
    """
    path = _validate_path(g, path)
    c = set(g.check_nodes(c))
    if path[0] in c or path[-1] in c:
        raise WitnessError("path end points may not be conditioned on")
    colliders = set(colliders_on(g, path))
    for v in path[1:-1]:
        if v in colliders and v not in c:
            raise WitnessError(f"collider {v} is not in the conditioning set")
        if v not in colliders and v in c:
            raise WitnessError(f"non-collider {v} is conditioned on; the path is closed")
    return _build_witness(g, path, (), {}, {})


def witness_assignment(g: Dag, path, c=()) -> dict:
    """Conditioning event for :func:`path_witness`: colliders 1, other members of c at 0."""
    coll = set(colliders_on(g, tuple(path)))
    return {v: (1 if v in coll else 0) for v in g.check_nodes(c)}


def _collider_chains(g: Dag, path, c, blocked):
    """Directed chains carrying each unconditioned collider down to a member of ``c``."""
    cset = set(c)
    used = set(path) | set(blocked)
    copies: dict[str, str] = {}
    for k in colliders_on(g, path):
        if k in cset:
            continue
        # shortest directed path k -> ... -> member of c through unused nodes
        prev = {k: None}
        frontier = [k]
        hit = None
        while frontier and hit is None:
            nxt = []
            for n in frontier:
                for ch in g.children(n):
                    if ch in prev or ch in used:
                        continue
                    prev[ch] = n
                    if ch in cset:
                        hit = ch
                        break
                    nxt.append(ch)
                if hit:
                    break
            frontier = nxt
        if hit is None:
            return None
        node = hit
        while prev[node] is not None:
            copies[node] = prev[node]
            used.add(node)
            node = prev[node]
    return copies


def violation_witness(g: Dag, rel: EsepRelation, d_bias: float = 0.99) -> SemModel:
    """Model Markov to ``g`` violating I(a:b|c,d) <= H(d) when the relation fails.

    Members of ``d`` are ignored by their children and set to 0 with
    probability ``d_bias``; a path left open after deleting ``d`` carries
    a perfectly correlated fair bit. Whether the inequality is actually
    violated (``d_bias`` near 0.5 may not suffice) is for the caller to check.
    """
    if not 0.5 < d_bias < 1:
        raise WitnessError("d_bias must lie in (0.5, 1)")
    if e_separated(g, rel):
        raise NotSeparatedError(f"{rel} holds in the graph; no violating distribution exists")
    g2 = delete(g, rel.d)
    candidates = sorted(open_paths(g2, rel.a, rel.b, rel.c), key=lambda p: (len(p), p))
    ends = set(rel.a) | set(rel.b)
    for path in candidates:
        copies = _collider_chains(g2, path, rel.c, ends)
        if copies is None:
            continue
        return _build_witness(g, path, (), copies, {v: d_bias for v in rel.d})
    raise WitnessError(f"no open path for {rel} admits the collider-copy construction")


# ---------------------------------------------------------------- fixtures


def equal_confounders_fixture(u_domain_size: int = 2) -> SemModel:
    """Two confounders feeding D = [U1 == U2]; A and B copy their confounder when D = 1."""
    from .fixtures import unrelated_confounders

    if u_domain_size < 2:
        raise SemError("u_domain_size must be at least 2")
    g = unrelated_confounders()
    n = u_domain_size
    u_dom = tuple(range(1, n + 1))
    domains = {"U1": u_dom, "U2": u_dom, "D": BIT, "A": (0,) + u_dom, "B": (0,) + u_dom}
    uniform = tuple([1.0 / n] * n)
    funcs = {
        "U1": lambda pv, e: u_dom[e],
        "U2": lambda pv, e: u_dom[e],
        "D": lambda pv, e: int(pv["U1"] == pv["U2"]),
        "A": lambda pv, e: pv["U1"] if pv["D"] == 1 else 0,
        "B": lambda pv, e: pv["U2"] if pv["D"] == 1 else 0,
    }
    return SemModel.from_functions(g, domains, {"U1": uniform, "U2": uniform}, funcs)


def xor_fixture(eps_bias: float = 0.99) -> SemModel:
    """XOR model on the unidentified graph; every epsilon is 0 with probability ``eps_bias``."""
    from .fixtures import nested_b

    if not 0.5 <= eps_bias < 1:
        raise SemError("eps_bias must lie in [0.5, 1)")
    g = nested_b()
    eps = (eps_bias, 1.0 - eps_bias)
    fair = (0.5, 0.5)
    noise = {"U1": fair, "U2": fair, "U3": fair, "A": eps, "B": eps, "D": eps}
    funcs = {
        "U1": lambda pv, e: e,
        "U2": lambda pv, e: e,
        "U3": lambda pv, e: e,
        "X": lambda pv, e: pv["U2"],
        "A": lambda pv, e: pv["U2"] ^ e,
        "C": lambda pv, e: pv["X"] ^ pv["U3"],
        "B": lambda pv, e: pv["C"] ^ pv["U3"] ^ e,
        "D": lambda pv, e: e,
    }
    return SemModel.from_functions(g, {v: BIT for v in g.nodes}, noise, funcs)


def binary_treatment_fixture() -> SemModel:
    """X a fair coin; Y = 1 when X = 1, otherwise uniform on {0, 2}."""
    g = Dag.from_edges([("X", "Y")])
    funcs = {
        "X": lambda pv, e: e,
        "Y": lambda pv, e: 1 if pv["X"] == 1 else (0, 2)[e],
    }
    return SemModel.from_functions(g, {"X": BIT, "Y": (0, 1, 2)}, {"X": (0.5, 0.5), "Y": (0.5, 0.5)}, funcs)


# names used by earlier callers
remark8_fixture = equal_confounders_fixture
appendix_b_fixture = xor_fixture
appendixB_fixture = xor_fixture


def adjustment_eval(t: JointTable, a, b, d, c_assign: Mapping[str, object], x) -> JointTable:
    """sum_x P(a, b, c=c, d, x) / P(c=c | x), a table over ``a + b + d``."""
    a, b, d, x = varset(a), varset(b), varset(d), varset(x)
    c = tuple(c_assign)
    target = a + b + d
    m = dist.marginal(t, target + c + x)
    pcx = dist.marginal(t, c + x)
    px = dist.marginal(t, x) if x else None
    acc: dict[tuple, list[float]] = {}
    for key, p in m.items():
        vals = dict(zip(m.variables, key))
        if any(vals[n] != c_assign[n] for n in c):
            continue
        xv = {n: vals[n] for n in x}
        p_x = px.p(xv) if x else 1.0
        p_cx = pcx.p({**{n: c_assign[n] for n in c}, **xv})
        if p_cx <= 0:
            raise ZeroProbabilityError(f"P({c_assign} | {xv}) = 0")
        acc.setdefault(key[: len(target)], []).append(p * p_x / p_cx)
    for xv in dist.support(t, x) if x else []:
        if pcx.p({**{n: c_assign[n] for n in c}, **xv}) <= 0:
            raise ZeroProbabilityError(f"P({c_assign} | {xv}) = 0")
    probs = {k: math.fsum(v) for k, v in acc.items()}
    return JointTable.from_dict(target, probs, [t.domain(n) for n in target])


# ---------------------------------------------------------------- serialization


def serialize_sem(sem: SemModel) -> str:
    """JSON text: the graph DSL plus per-node domain, noise and mechanism rows."""
    g = sem.dag
    nodes = []
    for v in sorted(g.nodes, key=natural_key):
        pa = g.parents(v)
        order = sorted(pa, key=natural_key)
        rows = []
        for vals in itertools.product(*(range(len(sem.domains[p])) for p in order)):
            pos = dict(zip(order, vals))
            idx = tuple(pos[p] for p in pa)
            outs = sem.mech[v][idx] if pa else sem.mech[v]
            rows.append(
                {
                    "parents": [sem.domains[p][pos[p]] for p in order],
                    "outputs": [sem.domains[v][int(o)] for o in np.ravel(outs)],
                }
            )
        nodes.append(
            {
                "name": v,
                "domain": list(sem.domains[v]),
                "parents": order,
                "noise": [float(p) for p in sem.noise[v]],
                "mechanism": rows,
            }
        )
    return json.dumps({"graph": serialize_graph(g), "nodes": nodes}, indent=1) + "\n"


def parse_sem(text: str) -> SemModel:
    try:
        doc = json.loads(text)
        g = parse_graph(doc["graph"])
        by_name = {n["name"]: n for n in doc["nodes"]}
    except (KeyError, TypeError, AttributeError, json.JSONDecodeError) as exc:
        raise SemError(f"malformed model text: {exc}") from None
    if set(by_name) != set(g.nodes):
        raise SemError("node list does not match the graph")
    domains = {v: tuple(by_name[v]["domain"]) for v in g.nodes}
    noise, mech = {}, {}
    for v in g.nodes:
        entry = by_name[v]
        pa = g.parents(v)
        listed = tuple(entry["parents"])
        if sorted(listed) != sorted(pa):
            raise SemError(f"parents listed for {v} do not match the graph")
        k = len(entry["noise"])
        m = np.zeros(tuple(len(domains[p]) for p in pa) + (k,), dtype=np.int64)
        seen = set()
        for row in entry["mechanism"]:
            try:
                given = dict(zip(listed, row["parents"]))
                idx = tuple(domains[p].index(given[p]) for p in pa)
                outs = [domains[v].index(o) for o in row["outputs"]]
            except ValueError:
                raise SemError(f"mechanism row of {v} leaves a domain") from None
            if idx in seen or len(outs) != k:
                raise SemError(f"bad mechanism row for {v}")
            seen.add(idx)
            m[idx] = outs
        if len(seen) != math.prod(len(domains[p]) for p in pa):
            raise SemError(f"mechanism of {v} is not total")
        noise[v], mech[v] = entry["noise"], m
    return SemModel(g, domains, noise, mech)


__all__ = [
    "SemModel",
    "SemError",
    "WitnessError",
    "GraphError",
    "joint",
    "joint_by_noise_enumeration",
    "observed_joint",
    "intervene",
    "random_sem",
    "path_witness",
    "witness_assignment",
    "violation_witness",
    "equal_confounders_fixture",
    "binary_treatment_fixture",
    "xor_fixture",
    "remark8_fixture",
    "appendix_b_fixture",
    "adjustment_eval",
    "serialize_sem",
    "parse_sem",
]
