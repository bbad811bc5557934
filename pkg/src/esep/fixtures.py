"""Named graphs and tables used throughout the tests and the CLI."""

from __future__ import annotations

from .dist import JointTable
from .graph import Dag


def instrumental() -> Dag:
    """A -> D -> B with a latent U confounding D and B."""
    return Dag.from_edges([("A", "D"), ("D", "B"), ("U", "D"), ("U", "B")], latent=["U"], nodes="ADUB")


def unrelated_confounders() -> Dag:
    """D driven by two latents, each of which also feeds one of A, B; D feeds both."""
    return Dag.from_edges(
        [("U1", "D"), ("U2", "D"), ("U1", "A"), ("D", "A"), ("U2", "B"), ("D", "B")],
        latent=["U1", "U2"],
        nodes=["A", "D", "B", "U1", "U2"],
    )


def chain_confounded_a() -> Dag:
    """A -> X -> Y -> Z with X and Z confounded."""
    return Dag.from_edges(
        [("A", "X"), ("X", "Y"), ("Y", "Z"), ("U1", "X"), ("U1", "Z")],
        latent=["U1"],
        nodes=["A", "X", "Y", "Z", "U1"],
    )


def chain_confounded_b() -> Dag:
    """A -> X -> Y -> Z plus X -> Z, with X,Y and Y,Z confounded."""
    return Dag.from_edges(
        [
            ("A", "X"),
            ("X", "Y"),
            ("Y", "Z"),
            ("X", "Z"),
            ("U1", "X"),
            ("U1", "Y"),
            ("U2", "Y"),
            ("U2", "Z"),
        ],
        latent=["U1", "U2"],
        nodes=["A", "X", "Y", "Z", "U1", "U2"],
    )


def _discovery_edges():
    return [
        ("Y1", "Y2"),
        ("Y2", "Y3"),
        ("Y3", "Y4"),
        ("Y5", "Y3"),
        ("U1", "Y2"),
        ("U1", "Y5"),
        ("U2", "Y4"),
        ("U2", "Y5"),
    ]


def discovery_a() -> Dag:
    return Dag.from_edges(
        _discovery_edges(), latent=["U1", "U2"], nodes=["Y1", "Y2", "Y3", "Y4", "Y5", "U1", "U2"]
    )


def discovery_b() -> Dag:
    """:func:`discovery_a` plus the direct edge Y1 -> Y4."""
    return Dag.from_edges(
        _discovery_edges() + [("Y1", "Y4")],
        latent=["U1", "U2"],
        nodes=["Y1", "Y2", "Y3", "Y4", "Y5", "U1", "U2"],
    )


def common_cause() -> Dag:
    """X <- U -> Y with U latent."""
    return Dag.from_edges([("U", "X"), ("U", "Y")], latent=["U"], nodes="XYU")


def common_cause_direct() -> Dag:
    """:func:`common_cause` plus X -> Y."""
    return Dag.from_edges([("U", "X"), ("U", "Y"), ("X", "Y")], latent=["U"], nodes="XYU")


def _nested_edges():
    return [
        ("U2", "X"),
        ("U2", "A"),
        ("X", "C"),
        ("C", "B"),
        ("U1", "A"),
        ("U1", "D"),
        ("D", "B"),
    ]


_NESTED_ORDER = ["X", "A", "C", "B", "D", "U1", "U2", "U3"]


def nested_a() -> Dag:
    """Identified after do(C): C's only confounding runs through the observed X."""
    return Dag.from_edges(_nested_edges(), latent=["U1", "U2"], nodes=_NESTED_ORDER[:-1])


def nested_b() -> Dag:
    """As :func:`nested_a` with U3 confounding C and B; not identified after do(C)."""
    return Dag.from_edges(
        _nested_edges() + [("U3", "C"), ("U3", "B")], latent=["U1", "U2", "U3"], nodes=_NESTED_ORDER
    )


def nested_c() -> Dag:
    """As :func:`nested_a` with U3 confounding X and B; identified after do(C)."""
    return Dag.from_edges(
        _nested_edges() + [("U3", "X"), ("U3", "B")], latent=["U1", "U2", "U3"], nodes=_NESTED_ORDER
    )


def mediator_augmented() -> Dag:
    """X -> W -> Y with latent U -> W, U -> Y."""
    return Dag.from_edges([("X", "W"), ("W", "Y"), ("U", "W"), ("U", "Y")], latent=["W", "U"], nodes="XWYU")


GRAPHS = {
    "instrumental": instrumental,
    "unrelated-confounders": unrelated_confounders,
    "chain-a": chain_confounded_a,
    "chain-b": chain_confounded_b,
    "discovery-a": discovery_a,
    "discovery-b": discovery_b,
    "common-cause": common_cause,
    "common-cause-direct": common_cause_direct,
    "nested-a": nested_a,
    "nested-b": nested_b,
    "nested-c": nested_c,
    "mediator": mediator_augmented,
}

# rows X = 0..3, columns Y = 0..3
GENETICS_ROWS = (
    (0.002, 0.001, 0.400, 0.001),
    (0.003, 0.005, 0.005, 0.066),
    (0.224, 0.003, 0.003, 0.001),
    (0.002, 0.281, 0.001, 0.002),
)


def genetics_table() -> JointTable:
    mapping = {(x, y): GENETICS_ROWS[x][y] for x in range(4) for y in range(4)}
    return JointTable.from_dict(("X", "Y"), mapping, [range(4), range(4)])


def ace_example_table() -> JointTable:
    """Fair binary X; Y uniform on {0, 2} when X = 0 and Y = 1 when X = 1."""
    return JointTable.from_dict(("X", "Y"), {(0, 0): 0.25, (0, 2): 0.25, (1, 1): 0.5}, [(0, 1), (0, 1, 2)])
