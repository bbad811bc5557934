import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esep import fixtures as fx
from esep.graph import (
    CycleError,
    Dag,
    DslError,
    EsepRelation,
    GraphError,
    SPLIT_SUFFIX,
    d_separated,
    d_separated_by_paths,
    delete,
    descendants,
    e_separated,
    enumerate_esep,
    is_minimal_bottleneck,
    parse_graph,
    serialize_graph,
    split,
    split_name,
)

from conftest import dags, random_dag


def _random_triple(rng, nodes):
    nodes = list(nodes)
    rng.shuffle(nodes)
    a, rest = nodes[:1], nodes[1:]
    b = rest[: rng.randint(1, len(rest))]
    rest = [n for n in rest if n not in b]
    c = [n for n in rest if rng.random() < 0.5]
    return a, b, c


class TestDag:
    def test_cycle_rejected(self):
        with pytest.raises(CycleError):
            Dag.from_edges([("A", "B"), ("B", "C"), ("C", "A")])

    def test_self_loop(self):
        with pytest.raises(GraphError):
            Dag.from_edges([("X", "X")])

    def test_latent_must_be_node(self):
        with pytest.raises(GraphError):
            Dag(("A",), frozenset(), frozenset({"U"}))

    def test_instrumental_shape(self):
        g = fx.instrumental()
        assert len(g.nodes) == 4 and g.latent == {"U"}
        assert g.parents("B") == ("D", "U")
        assert descendants(g, "D") == ("D", "B")


class TestDsl:
    def test_parse_instrumental(self):
        g = parse_graph("lat U\nA -> D -> B  # chain\nU -> D\nU -> B\n")
        assert set(g.nodes) == set("ADUB") and g.latent == {"U"}
        assert ("D", "B") in g.edges and len(g.edges) == 4

    def test_self_loop_position(self):
        with pytest.raises(DslError) as e:
            parse_graph("obs X\nX -> X\n")
        assert e.value.line == 2 and "self-loop" in str(e.value)

    def test_bad_arrow(self):
        with pytest.raises(DslError) as e:
            parse_graph("A => B")
        assert e.value.line == 1 and e.value.column == 3

    def test_duplicate_declaration(self):
        with pytest.raises(DslError):
            parse_graph("obs A\nlat A\n")

    def test_cycle_in_text(self):
        with pytest.raises(CycleError):
            parse_graph("A -> B\nB -> A\n")

    @pytest.mark.parametrize("name", sorted(fx.GRAPHS))
    def test_round_trip_fixtures(self, name):
        g = fx.GRAPHS[name]()
        text = serialize_graph(g)
        assert serialize_graph(parse_graph(text)) == text
        g2 = parse_graph(text)
        assert g2.edges == g.edges and g2.latent == g.latent and set(g2.nodes) == set(g.nodes)

    @given(dags())
    def test_round_trip_random(self, g):
        text = serialize_graph(g)
        assert serialize_graph(parse_graph(text)) == text


class TestDSeparation:
    def test_chain_fork_collider(self):
        chain = Dag.from_edges([("A", "B"), ("B", "C")])
        fork = Dag.from_edges([("B", "A"), ("B", "C")])
        coll = Dag.from_edges([("A", "B"), ("C", "B"), ("B", "D")])
        assert not d_separated(chain, "A", "C") and d_separated(chain, "A", "C", "B")
        assert not d_separated(fork, "A", "C") and d_separated(fork, "A", "C", "B")
        assert d_separated(coll, "A", "C")
        assert not d_separated(coll, "A", "C", "B")
        assert not d_separated(coll, "A", "C", "D")  # descendant of the collider

    def test_overlap_is_error(self):
        g = fx.instrumental()
        with pytest.raises(GraphError):
            d_separated(g, "A", "B", ["A"])

    def test_unknown_node(self):
        with pytest.raises(GraphError):
            d_separated(fx.instrumental(), "A", "Q")

    def test_bayes_ball_matches_path_oracle(self, rng):
        checked = 0
        for _ in range(200):
            g = random_dag(rng)
            for _ in range(5):
                a, b, c = _random_triple(rng, g.nodes)
                assert d_separated(g, a, b, c) == d_separated_by_paths(g, a, b, c), (g, a, b, c)
                checked += 1
        assert checked == 1000

    @settings(max_examples=60, deadline=None)
    @given(dags(), st.randoms(use_true_random=False))
    def test_symmetry(self, g, r):
        a, b, c = _random_triple(r, g.nodes)
        assert d_separated(g, a, b, c) == d_separated(g, b, a, c)


class TestESeparation:
    def test_split_names(self):
        g = split(fx.instrumental(), ["D"])
        assert split_name("D") == "D" + SPLIT_SUFFIX
        assert ("D" + SPLIT_SUFFIX, "B") in g.edges and ("A", "D") in g.edges
        assert ("D", "B") not in g.edges

    def test_instrumental_relation(self):
        g = fx.instrumental()
        rel = EsepRelation("A", "B", (), "D")
        assert e_separated(g, rel) and is_minimal_bottleneck(g, rel)
        assert not d_separated(g, "A", "B") and not d_separated(g, "A", "B", "D")

    def test_not_minimal(self):
        g = fx.instrumental()
        rel = EsepRelation("A", "B", (), ("D", "U"))
        assert e_separated(g, rel) and not is_minimal_bottleneck(g, rel)

    def test_delete_drops_edges(self):
        g = delete(fx.instrumental(), "D")
        assert set(g.nodes) == {"A", "U", "B"} and g.edges == {("U", "B")}
        assert delete(g, ()) == g

    def test_isolated_member_not_minimal(self):
        g = Dag.from_edges(fx.instrumental().edges, latent=["U"], nodes=["A", "D", "U", "B", "X"])
        assert not is_minimal_bottleneck(g, EsepRelation("A", "B", (), ("D", "X")))

    def test_d_sep_given_d_and_u(self):
        g = fx.instrumental()
        assert d_separated(g, "A", "B", ("D", "U"))

    def test_discovery_pair(self):
        rel = EsepRelation("Y1", ("Y3", "Y4"), "Y2", "Y5")
        assert e_separated(fx.discovery_a(), rel) and not e_separated(fx.discovery_b(), rel)

    def test_mutilate(self):
        from esep.graph import mutilate

        g = mutilate(fx.nested_a(), "C")
        assert g.parents("C") == () and g.edges == fx.nested_a().edges - {("X", "C")}

    def test_split_equivalence(self, rng):
        """Deleting d agrees with d-separation in the split graph given c and the split copies."""
        for _ in range(200):
            g = random_dag(rng, n_max=7)
            nodes = list(g.nodes)
            rng.shuffle(nodes)
            if len(nodes) < 3:
                continue
            a, b = [nodes[0]], [nodes[1]]
            rest = nodes[2:]
            d = [n for n in rest if rng.random() < 0.4]
            c = [n for n in rest if n not in d and rng.random() < 0.4]
            rel = EsepRelation(a, b, c, d)
            gs = split(g, d)
            via_split = d_separated(gs, a, b, c + [split_name(n) for n in d])
            assert e_separated(g, rel) == via_split, (g, rel)

    def test_d_sep_implies_e_sep(self, rng):
        for _ in range(200):
            g = random_dag(rng, n_max=7)
            nodes = list(g.nodes)
            rng.shuffle(nodes)
            if len(nodes) < 3:
                continue
            d = [n for n in nodes[2:] if rng.random() < 0.4]
            c = [n for n in nodes[2:] if n not in d and rng.random() < 0.4]
            if d_separated(g, nodes[:1], nodes[1:2], c + d):
                assert e_separated(g, EsepRelation(nodes[:1], nodes[1:2], c, d))

    def test_monotone_in_d(self, rng):
        for _ in range(150):
            g = random_dag(rng, n_max=7)
            nodes = list(g.nodes)
            rng.shuffle(nodes)
            if len(nodes) < 4:
                continue
            d = [n for n in nodes[2:] if rng.random() < 0.4]
            extra = [n for n in nodes[2:] if n not in d][:1]
            if e_separated(g, EsepRelation(nodes[:1], nodes[1:2], (), d)):
                assert e_separated(g, EsepRelation(nodes[:1], nodes[1:2], (), d + extra))


class TestEnumerate:
    def test_instrumental(self):
        rels = enumerate_esep(fx.instrumental())
        strs = [str(r) for r in rels if r.minimal and r.d]
        assert "(A _||_e B upon ~D)" in strs

    def test_all_sound_and_canonical(self):
        g = fx.discovery_a()
        rels = enumerate_esep(g, (1, 2, 2, 1))
        keys = [r.key() for r in rels]
        assert len(keys) == len(set(keys))
        for r in rels:
            assert e_separated(g, r)
            assert r.minimal == is_minimal_bottleneck(g, r)
            assert set(r.a + r.b + r.c + r.d) <= set(g.observed)

    def test_caps_respected(self):
        for r in enumerate_esep(fx.chain_confounded_b(), (1, 1, 1, 1)):
            assert len(r.a) == len(r.b) == 1 and len(r.c) <= 1 and len(r.d) <= 1

    def test_deterministic(self):
        g = fx.discovery_b()
        assert enumerate_esep(g) == enumerate_esep(g)

    def test_bad_caps(self):
        with pytest.raises(GraphError):
            enumerate_esep(fx.instrumental(), (0, 1, 1, 1))

    def test_complete_graph_empty(self):
        g = Dag.from_edges([("A", "B"), ("A", "C"), ("B", "C")])
        assert enumerate_esep(g) == []

    def test_edgeless_pair(self):
        g = Dag.from_edges([], nodes=["A", "B"])
        assert EsepRelation("A", "B") in enumerate_esep(g)

    def test_discovery_a_listed_relations(self):
        rels = enumerate_esep(fx.discovery_a(), (2, 2, 2, 1))
        for rel in (
            EsepRelation("Y1", ("Y3", "Y4"), "Y2", "Y5"),
            EsepRelation(("Y1", "Y2"), "Y4", (), "Y3"),
            EsepRelation("Y2", "Y4", "Y1", "Y3"),
        ):
            assert rel in rels

    def test_latents_only_on_request(self):
        g = fx.instrumental()
        assert all("U" not in r.c + r.d for r in enumerate_esep(g))
        assert any("U" in r.c + r.d for r in enumerate_esep(g, observed_only=False))
