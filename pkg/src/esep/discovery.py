"""Falsify candidate hidden-variable DAGs against an observed distribution.

Each graph is checked three ways: conditional independences from its
observed d-separations, entropic inequalities from its e-separations, and,
for latents with a declared cardinality, the log-cardinality ceiling on
dependence that passes only through them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import constraints as ce
from . import dist
from .dist import JointTable
from .graph import Dag, GraphError, d_separated, natural_key, sorted_set


@dataclass(frozen=True)
class EqualityCheck:
    a: tuple[str, ...]
    b: tuple[str, ...]
    c: tuple[str, ...]
    cmi_bits: float
    eps: float

    @property
    def passed(self) -> bool:
        return self.cmi_bits <= self.eps

    def text(self) -> str:
        cond = "|" + "".join(self.c) if self.c else ""
        mark = "ok" if self.passed else "VIOLATED"
        return f"I({''.join(self.a)}:{''.join(self.b)}{cond}) = 0  value={self.cmi_bits:.6f} {mark}"


@dataclass(frozen=True)
class ModelVerdict:
    graph_id: str
    equalities: tuple[EqualityCheck, ...]
    inequalities: tuple[ce.ConstraintReport, ...]
    cardinality: tuple[ce.ConstraintReport, ...] = field(default=())

    @property
    def failures(self) -> list:
        out = [e for e in self.equalities if not e.passed]
        out += [r for r in self.inequalities + self.cardinality if not r.satisfied]
        return out

    @property
    def falsified(self) -> bool:
        return bool(self.failures)

    @property
    def worst_violation(self) -> float:
        worst = 0.0
        for f in self.failures:
            worst = max(worst, f.cmi_bits if isinstance(f, EqualityCheck) else -f.slack)
        return worst


def _subsets(names, lo, hi):
    for k in range(lo, hi + 1):
        yield from itertools.combinations(names, k)


def _pairs(names, ca, cb):
    """Disjoint (a, b) pairs, each unordered pair once; a holds the smallest name."""
    for a in _subsets(names, 1, ca):
        rest = [n for n in names if n not in a]
        for b in _subsets(rest, 1, cb):
            if natural_key(b[0]) < natural_key(a[0]) and len(b) <= ca and len(a) <= cb:
                continue
            yield a, b


def ci_check(g: Dag, t: JointTable, caps=(2, 2, 2, 2), eps: float = ce.EPS_EXACT) -> list[EqualityCheck]:
    """One check per d-separation among observed sets within ``caps``."""
    obs = sorted_set(g.observed)
    for n in obs:
        t.axis(n)
    ca, cb, cc = caps[0], caps[1], caps[2]
    out = []
    for a, b in _pairs(obs, ca, cb):
        rest = [n for n in obs if n not in a and n not in b]
        for c in _subsets(rest, 0, cc):
            if d_separated(g, a, b, c):
                out.append(EqualityCheck(a, b, c, max(dist.cond_mutual_info(t, a, b, c), 0.0), eps))
    return out


def cardinality_constraints(g: Dag, cards: Mapping[str, int], caps=(2, 2, 2, 2)) -> list[ce.CardinalityConstraint]:
    """Ceilings from d-separations that need a declared latent in the conditioning set.

    Dependence between a and b that vanishes given c plus latents L cannot
    exceed log2 of the joint cardinality of L at any value of c.
    """
    for n, k in cards.items():
        if n not in g.nodes or g.is_observed(n):
            raise GraphError(f"{n} is not a latent node of the graph")
        if int(k) < 1:
            raise GraphError(f"cardinality of {n} must be positive")
    latents = sorted_set(cards)
    obs = sorted_set(g.observed)
    ca, cb, cc, cd = caps
    out = []
    found: dict[tuple, list] = {}
    for a, b in _pairs(obs, ca, cb):
        rest = [n for n in obs if n not in a and n not in b]
        for c in _subsets(rest, 0, cc):
            if d_separated(g, a, b, c):
                continue
            for lat in _subsets(latents, 1, max(cd, 1)):
                if not d_separated(g, a, b, c + lat):
                    continue
                # only minimal latent sets; supersets give weaker ceilings
                prev = found.setdefault((a, b, c), [])
                if any(set(p) < set(lat) for p in prev):
                    continue
                prev.append(lat)
                card = math.prod(int(cards[n]) for n in lat)
                out.append(ce.CardinalityConstraint(a, b, c, lat, card))
    return out


def verdict(
    graph_id: str,
    g: Dag,
    t: JointTable,
    caps=(2, 2, 2, 2),
    eps_eq: float = ce.EPS_EXACT,
    eps_ineq: float = ce.EPS_EXACT,
    latent_cards: Mapping[str, int] | None = None,
) -> ModelVerdict:
    eqs = ci_check(g, t, caps, eps_eq)
    ineqs = ce.check_all(g, t, caps, eps_ineq)
    cards = ()
    if latent_cards:
        cards = tuple(
            ce.evaluate_cardinality(t, k, eps_ineq) for k in cardinality_constraints(g, latent_cards, caps)
        )
    return ModelVerdict(graph_id, tuple(eqs), tuple(ineqs), cards)


def compare(
    graphs: Mapping[str, Dag] | Sequence[Dag],
    t: JointTable,
    caps=(2, 2, 2, 2),
    eps_eq: float = ce.EPS_EXACT,
    eps_ineq: float = ce.EPS_EXACT,
    latent_cards: Mapping[str, Mapping[str, int]] | None = None,
) -> list[ModelVerdict]:
    """Verdicts for every graph, surviving models first, then by worst violation.

    ``latent_cards`` maps a graph id to its declared latent cardinalities.
    """
    if not isinstance(graphs, Mapping):
        graphs = {f"g{i}": g for i, g in enumerate(graphs)}
    latent_cards = latent_cards or {}
    unknown = set(latent_cards) - set(graphs)
    if unknown:
        raise GraphError(f"cardinalities given for unknown graphs {sorted(unknown)}")
    observed = {gid: set(g.observed) for gid, g in graphs.items()}
    want = set(t.variables)
    for gid, obs in observed.items():
        if obs != want:
            raise GraphError(
                f"graph {gid} observes {sorted_set(obs)} but the table has {sorted_set(want)}"
            )
    out = [
        verdict(gid, g, t, caps, eps_eq, eps_ineq, latent_cards.get(gid))
        for gid, g in graphs.items()
    ]
    return sorted(out, key=lambda v: (v.falsified, v.worst_violation, natural_key(v.graph_id)))


__all__ = [
    "EqualityCheck",
    "ModelVerdict",
    "ci_check",
    "cardinality_constraints",
    "verdict",
    "compare",
]
