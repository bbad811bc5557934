import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esep import dist, sem
from esep import fixtures as fx
from esep.dist import ZeroProbabilityError
from esep.graph import Dag, EsepRelation, NotSeparatedError, colliders_on, e_separated, simple_paths

from conftest import random_dag

# frozen from /root/notes/oracles/table_oracle.py (plain enumeration, no package code)
XOR_I_099 = 0.859683876396
H_099 = 0.080793135896
EQCONF_H_A_N3 = 1.446616667628
EQCONF_H_D_N3 = 0.918295834054


class TestJoint:
    @pytest.mark.parametrize("name", ["instrumental", "chain-b", "discovery-a", "nested-b"])
    def test_cpt_product_matches_noise_enumeration(self, name):
        g = fx.GRAPHS[name]()
        for seed in range(3):
            s = sem.random_sem(g, domain_sizes=2, seed=seed, noise_size=3)
            assert sem.joint(s).equals(sem.joint_by_noise_enumeration(s), 1e-12)

    def test_mixed_domain_sizes(self):
        g = fx.instrumental()
        s = sem.random_sem(g, {"A": 3, "D": 2, "U": 4, "B": 3}, seed=4)
        assert sem.joint(s).equals(sem.joint_by_noise_enumeration(s), 1e-12)

    def test_seed_determinism(self):
        g = fx.chain_confounded_a()
        a = sem.observed_joint(sem.random_sem(g, seed=11))
        b = sem.observed_joint(sem.random_sem(g, seed=11))
        assert dist.serialize_table(a) == dist.serialize_table(b)

    def test_empty_graph_is_product(self):
        g = Dag.from_edges([], nodes=["A", "B", "C"])
        t = sem.joint(sem.random_sem(g, seed=2))
        prod = dist.product(*(dist.marginal(t, v) for v in "ABC"))
        assert t.equals(prod, 1e-12)

    def test_observed_joint_drops_latents(self):
        t = sem.observed_joint(sem.random_sem(fx.instrumental(), seed=0))
        assert set(t.variables) == {"A", "D", "B"}

    def test_cap(self):
        s = sem.random_sem(fx.discovery_a(), domain_sizes=3, seed=0)
        with pytest.raises(sem.SemError):
            sem.joint(s, cap=10)

    def test_functions_validated(self):
        g = Dag.from_edges([("A", "B")])
        with pytest.raises(sem.SemError):
            sem.SemModel.from_functions(g, {"A": (0, 1), "B": (0, 1)}, {}, {"A": lambda pv, e: 0, "B": lambda pv, e: 7})

    @pytest.mark.parametrize("name", ["instrumental", "nested-a", "mediator"])
    def test_serialize_round_trip(self, name):
        s = sem.random_sem(fx.GRAPHS[name](), seed=5, noise_size=3)
        text = sem.serialize_sem(s)
        back = sem.parse_sem(text)
        assert sem.serialize_sem(back) == text
        assert sem.joint(back).equals(sem.joint(s), 1e-15)

    def test_parse_rejects_garbage(self):
        with pytest.raises(sem.SemError):
            sem.parse_sem("{\"graph\": 1}")


class TestIntervene:
    def test_matches_truncated_factorization(self):
        g = fx.instrumental()
        s = sem.random_sem(g, seed=3)
        full = sem.joint(s)
        for dv in (0, 1):
            t = sem.joint(sem.intervene(s, {"D": dv}))
            # P(a, u, b | do(D=dv)) = P(a) P(u) P(b | dv, u)
            pa = dist.marginal(full, "A")
            pu = dist.marginal(full, "U")
            for a, u, b in itertools.product((0, 1), repeat=3):
                pdu = full.p({"D": dv, "U": u})
                pb = full.p({"B": b, "D": dv, "U": u}) / pdu if pdu > 0 else None
                if pb is None:
                    continue
                want = pa.p({"A": a}) * pu.p({"U": u}) * pb
                assert t.p({"A": a, "U": u, "B": b, "D": dv}) == pytest.approx(want, abs=1e-12)

    def test_binary_treatment(self):
        s = sem.binary_treatment_fixture()
        assert sem.joint(s).equals(fx.ace_example_table(), 1e-15)
        done = sem.joint(sem.intervene(s, {"X": 1}))
        assert done.p({"Y": 1}) == 1.0

    def test_root_at_only_value(self):
        g = Dag.from_edges([("A", "B")])
        funcs = {"A": lambda pv, e: 1, "B": lambda pv, e: pv["A"] ^ e}
        s = sem.SemModel.from_functions(g, {"A": (0, 1), "B": (0, 1)}, {"B": (0.3, 0.7)}, funcs)
        assert sem.joint(sem.intervene(s, {"A": 1})).equals(sem.joint(s), 1e-15)
        assert sem.intervene(s, {}) == s or sem.joint(sem.intervene(s, {})).equals(sem.joint(s), 0)

    def test_point_mass_chain(self):
        g = Dag.from_edges([("A", "B"), ("B", "C")])
        funcs = {"A": lambda pv, e: 1, "B": lambda pv, e: pv["A"], "C": lambda pv, e: 1 - pv["B"]}
        t = sem.joint(sem.SemModel.from_functions(g, {v: (0, 1) for v in "ABC"}, {}, funcs))
        assert t.as_dict() == {(1, 1, 0): 1.0}

    def test_bad_value(self):
        with pytest.raises(sem.SemError):
            sem.intervene(sem.random_sem(fx.instrumental()), {"D": 5})


class TestPathWitness:
    def test_collider_path(self):
        g = Dag.from_edges([("A", "C"), ("B", "C")])
        s = sem.path_witness(g, ("A", "C", "B"), ["C"])
        t = sem.joint(s)
        assert dist.mutual_info(t, "A", "B") == pytest.approx(0.0, abs=1e-12)
        assert dist.pointwise_cmi(t, "A", "B", {"C": 1}) == pytest.approx(1.0, abs=1e-12)

    def test_closed_path_rejected(self):
        g = Dag.from_edges([("A", "C"), ("C", "B")])
        with pytest.raises(sem.WitnessError):
            sem.path_witness(g, ("A", "C", "B"), ["C"])

    def test_random_paths(self):
        rng = random.Random(7)
        done = 0
        while done < 30:
            g = random_dag(rng, n_max=7, p_latent=0.0)
            a, b = rng.sample(list(g.nodes), 2)
            # condition on exactly the colliders of a random path
            paths = list(simple_paths(g, a, b))
            if not paths:
                continue
            path = rng.choice(paths)
            c = colliders_on(g, path)
            s = sem.path_witness(g, path, c)
            t = sem.joint(s)
            cond = sem.witness_assignment(g, path, c)
            assert dist.pointwise_cmi(t, a, b, cond) == pytest.approx(1.0, abs=1e-9)
            done += 1


class TestViolationWitness:
    def test_direct_edge(self):
        g = Dag.from_edges([("A", "B"), ("D", "B"), ("A", "D")])
        s = sem.violation_witness(g, EsepRelation("A", "B", (), "D"), 0.99)
        t = sem.joint(s)
        assert dist.mutual_info(t, "A", "B") == pytest.approx(1.0, abs=1e-12)
        assert dist.entropy(t, "D") == pytest.approx(H_099, abs=1e-12)
        assert dist.cond_mutual_info(t, "A", "B", "D") > dist.entropy(t, "D")

    def test_direct_edge_breaks_discovery_a_constraint(self):
        g = fx.discovery_b()
        rel = EsepRelation("Y1", ("Y3", "Y4"), "Y2", "Y5")
        t = sem.observed_joint(sem.violation_witness(g, rel))
        lhs = dist.cond_mutual_info(t, "Y1", ("Y3", "Y4", "Y5"), "Y2")
        rhs = dist.cond_entropy(t, "Y5", "Y2")
        assert lhs - rhs > 0.5

    def test_collider_chain(self):
        # A -> K <- B, K -> M; condition on M only
        g = Dag.from_edges([("A", "K"), ("B", "K"), ("K", "M"), ("A", "D"), ("D", "B")])
        rel = EsepRelation("A", "B", "M", "D")
        t = sem.joint(sem.violation_witness(g, rel))
        assert dist.cond_mutual_info(t, "A", "B", ("M", "D")) > dist.entropy(t, "D") + 0.5

    def test_separated_rejected(self):
        with pytest.raises(NotSeparatedError):
            sem.violation_witness(fx.instrumental(), EsepRelation("A", "B", (), "D"))

    def test_random_inverse(self):
        """Whenever a relation fails, the witness breaks I(a:b|c,d) <= H(d)."""
        rng = random.Random(3)
        hits = 0
        for _ in range(300):
            g = random_dag(rng, n_max=6, p_latent=0.0)
            nodes = list(g.nodes)
            rng.shuffle(nodes)
            if len(nodes) < 3:
                continue
            a, b, d = nodes[0], nodes[1], nodes[2:3]
            c = [n for n in nodes[3:] if rng.random() < 0.3]
            rel = EsepRelation(a, b, c, d)
            if e_separated(g, rel):
                continue
            try:
                s = sem.violation_witness(g, rel, 0.999)
            except sem.WitnessError:
                continue
            t = sem.joint(s)
            gap = dist.cond_mutual_info(t, a, b, tuple(c) + tuple(d)) - dist.entropy(t, d)
            assert gap >= 0.5, (g, rel, gap)
            hits += 1
        assert hits > 50


class TestFixtures:
    def test_equal_confounders_binary(self):
        t = sem.observed_joint(sem.equal_confounders_fixture(2))
        assert dist.entropy(t, "D") == pytest.approx(1.0, abs=1e-12)
        assert dist.mutual_info(t, "A", "B") == pytest.approx(1.5, abs=1e-12)
        assert all(a == b for (a, d, b), _ in dist.marginal(t, ("A", "D", "B")).items())

    def test_equal_confounders_ternary(self):
        t = sem.observed_joint(sem.equal_confounders_fixture(3))
        assert dist.entropy(t, "D") == pytest.approx(EQCONF_H_D_N3, abs=1e-12)
        assert dist.mutual_info(t, "A", "B") == pytest.approx(EQCONF_H_A_N3, abs=1e-12)

    def test_equal_confounders_too_small(self):
        with pytest.raises(sem.SemError):
            sem.equal_confounders_fixture(1)

    def test_xor_values(self):
        t = sem.observed_joint(sem.xor_fixture(0.99))
        adj = sem.adjustment_eval(t, "A", "B", "D", {"C": 0}, "X")
        assert dist.mutual_info(adj, "A", "B") == pytest.approx(XOR_I_099, abs=1e-9)
        assert dist.entropy(adj, "D") == pytest.approx(H_099, abs=1e-9)

    def test_xor_unbiased(self):
        t = sem.observed_joint(sem.xor_fixture(0.5))
        adj = sem.adjustment_eval(t, "A", "B", "D", {"C": 0}, "X")
        assert dist.mutual_info(adj, "A", "B") == pytest.approx(0.0, abs=1e-12)

    def test_xor_bias_range(self):
        with pytest.raises(sem.SemError):
            sem.xor_fixture(1.0)


def _adjustment_matches(g, seeds):
    checked = 0
    for seed in seeds:
        s = sem.random_sem(g, seed=seed, noise_size=3)
        t = sem.observed_joint(s)
        for cv in (0, 1):
            try:
                adj = sem.adjustment_eval(t, "A", "B", "D", {"C": cv}, "X")
            except ZeroProbabilityError:
                continue
            do = dist.marginal(sem.observed_joint(sem.intervene(s, {"C": cv})), ("A", "B", "D"))
            assert adj.equals(do, 1e-9), (seed, cv)
            checked += 1
    return checked


@pytest.mark.parametrize("name", ["nested-a", "nested-c"])
def test_adjustment_matches_do_oracle(name):
    assert _adjustment_matches(fx.GRAPHS[name](), range(30)) >= 20


def test_adjustment_fails_when_unidentified():
    g = fx.nested_b()
    s = sem.xor_fixture(0.9)
    adj = sem.adjustment_eval(sem.observed_joint(s), "A", "B", "D", {"C": 0}, "X")
    do = dist.marginal(sem.observed_joint(sem.intervene(s, {"C": 0})), ("A", "B", "D"))
    assert not adj.equals(do, 1e-3)
    assert g.edges == s.dag.edges


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_random_sem_is_distribution(seed, k):
    t = sem.joint(sem.random_sem(fx.chain_confounded_a(), domain_sizes=k, seed=seed, noise_size=2))
    assert float(np.sum(t.prob)) == pytest.approx(1.0, abs=1e-12)
