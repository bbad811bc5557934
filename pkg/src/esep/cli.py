"""Command-line front end.

Exit codes: 0 success / all checks pass, 1 a violation or falsification was
found, 2 bad input. Graph and table arguments accept a file path or
``fixture:NAME`` for a built-in (see ``esep fixtures``).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import constraints as ce
from . import discovery, dist, fixtures, mme, sem
from .dist import JointTable, TableError
from .graph import Dag, EsepRelation, GraphError, enumerate_esep, e_separated, parse_graph, serialize_graph

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2

TABLES = {
    "genetics": fixtures.genetics_table,
    "ace-example": fixtures.ace_example_table,
}


def bits(x: float | None):
    return None if x is None else round(float(x), 6)


def load_graph(ref: str) -> Dag:
    if ref.startswith("fixture:"):
        name = ref.split(":", 1)[1]
        if name not in fixtures.GRAPHS:
            raise GraphError(f"unknown graph fixture {name!r}; known: {', '.join(fixtures.GRAPHS)}")
        return fixtures.GRAPHS[name]()
    return parse_graph(Path(ref).read_text())


def load_table(ref: str) -> JointTable:
    if ref.startswith("fixture:"):
        name = ref.split(":", 1)[1]
        if name not in TABLES:
            raise TableError(f"unknown table fixture {name!r}; known: {', '.join(TABLES)}")
        return TABLES[name]()
    return dist.parse_table(Path(ref).read_text())


def names(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(n.strip() for n in text.split(",") if n.strip())


def parse_caps(text: str) -> tuple[int, int, int, int]:
    try:
        caps = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"caps must be four integers, got {text!r}") from None
    if len(caps) != 4 or caps[0] < 1 or caps[1] < 1 or min(caps) < 0:
        raise argparse.ArgumentTypeError("caps need four values with a,b >= 1 and c,d >= 0")
    return caps


def parse_relation(text: str) -> EsepRelation:
    """``a;b;c;d`` with comma-separated names; trailing parts may be omitted."""
    parts = text.split(";")
    if not 2 <= len(parts) <= 4:
        raise GraphError(f"relation {text!r} needs 2 to 4 ';'-separated parts")
    parts += [""] * (4 - len(parts))
    return EsepRelation(*(names(p) for p in parts))


def parse_cards(items) -> dict[str, int]:
    out = {}
    for item in items or ():
        name, sep, k = item.partition("=")
        if not sep or not name:
            raise GraphError(f"--latent-card expects NAME=K, got {item!r}")
        try:
            out[name.strip()] = int(k)
        except ValueError:
            raise GraphError(f"--latent-card expects an integer cardinality, got {k!r}") from None
    return out


def positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


class Report:
    """Accumulates text lines and a parallel structured document."""

    def __init__(self, args):
        self.args = args
        self.doc = {
            "tool": f"esep {__version__}",
            "command": args.command,
            "seed": args.seed,
            "eps": args.eps,
            "eps_empirical": args.eps_empirical,
            "caps": list(args.caps),
        }
        self.lines = [
            f"# esep {__version__} command={args.command} seed={args.seed} "
            f"eps={args.eps:g} eps_empirical={args.eps_empirical:g} caps={','.join(map(str, args.caps))}"
        ]

    def line(self, text: str = ""):
        self.lines.append(text)

    def render(self) -> str:
        if self.args.format == "json":
            return json.dumps(self.doc, indent=1, default=str) + "\n"
        return "\n".join(self.lines) + "\n"


def _table_eps(args, t: JointTable) -> float:
    return args.eps_empirical if t.sample_size is not None else args.eps


def _report_json(r: ce.ConstraintReport) -> dict:
    return {
        "constraint": r.constraint.text(),
        "lhs": bits(r.lhs_bits),
        "rhs": bits(r.rhs_bits),
        "slack": bits(r.slack),
        "satisfied": r.satisfied,
        "subsumed": r.subsumed,
        "assignment": dict(r.assignment) if r.assignment else None,
        "skipped": r.skipped,
    }


def _constraint_json(k: ce.EntropicConstraint) -> dict:
    return {"text": k.text(), "tier": k.tier, "subsumed": k.subsumed, "source": str(k.source)}


# ---------------------------------------------------------------- commands


def cmd_esep(args, rep: Report) -> int:
    g = load_graph(args.graph)
    rels = enumerate_esep(g, args.caps, observed_only=not args.all_nodes)
    if args.nontrivial:
        rels = [r for r in rels if r.d and r.minimal]
    rep.doc["relations"] = [{"relation": str(r), "minimal": r.minimal} for r in rels]
    for r in rels:
        rep.line(f"{r}{'  minimal' if r.minimal and r.d else ''}")
    rep.line(f"{len(rels)} relations")
    return EXIT_OK


def cmd_derive(args, rep: Report) -> int:
    g = load_graph(args.graph)
    if args.rel:
        rel = parse_relation(args.rel)
        if not e_separated(g, rel):
            raise GraphError(f"{rel} does not hold in the graph")
        ks = ce.derive(g, rel)
        if not args.all:
            ks = ce.strongest(ks) + ce.strongest(ks, pointwise=True)
    elif args.all:
        ks = ce.derive_all(g, args.caps)
    else:
        ks = ce.headline(g, args.caps)
    rep.doc["constraints"] = [_constraint_json(k) for k in ks]
    for k in ks:
        flag = "  (subsumed)" if k.subsumed else ""
        rep.line(f"{k.text()}  [{k.tier}]{flag}")
    return EXIT_OK


def cmd_check(args, rep: Report) -> int:
    g = load_graph(args.graph)
    t = load_table(args.dist)
    eps = _table_eps(args, t)
    v = discovery.verdict("graph", g, t, args.caps, eps, eps, parse_cards(args.latent_card))
    _emit_verdict(rep, v, verbose=args.verbose)
    rep.doc["verdict"] = _verdict_json(v)
    return EXIT_VIOLATION if v.falsified else EXIT_OK


def _verdict_json(v: discovery.ModelVerdict) -> dict:
    return {
        "graph": v.graph_id,
        "falsified": v.falsified,
        "worst_violation": bits(v.worst_violation),
        "equalities": [
            {"a": list(e.a), "b": list(e.b), "c": list(e.c), "cmi": bits(e.cmi_bits), "passed": e.passed}
            for e in v.equalities
        ],
        "inequalities": [_report_json(r) for r in ce.sort_reports(v.inequalities)],
        "cardinality": [_report_json(r) for r in ce.sort_reports(v.cardinality)],
    }


def _emit_verdict(rep: Report, v: discovery.ModelVerdict, verbose: bool = False):
    status = "FALSIFIED" if v.falsified else "compatible"
    rep.line(f"[{v.graph_id}] {status}  worst violation {v.worst_violation:.6f} bits")
    rep.line(f"  equality checks: {len(v.equalities)}, inequalities: {len(v.inequalities)}, "
             f"cardinality: {len(v.cardinality)}")
    for e in v.equalities:
        if verbose or not e.passed:
            rep.line("  " + e.text())
    for r in ce.sort_reports(v.inequalities + v.cardinality):
        if verbose or not r.satisfied or r in v.cardinality:
            rep.line("  " + r.text())


def cmd_latent_bound(args, rep: Report) -> int:
    t = load_table(args.dist)
    a, b, c = names(args.a), names(args.b), names(args.c)
    lb = ce.latent_entropy_bound(t, a, b, c)
    cb = ce.latent_cardinality_bound(t, a, b, c)
    rep.doc.update(
        entropy_bound=bits(lb.max_bits),
        averaged=bits(lb.averaged_bits),
        cardinality_bound=round(cb.bound, 6),
        min_cardinality=cb.ceiling,
        per_value=[{"assignment": dict(k), "bits": bits(v)} for k, v in lb.per_value],
    )
    rep.line(f"H(U) >= {lb.max_bits:.6f} bits (averaged {lb.averaged_bits:.6f})")
    rep.line(f"|U| >= 2^{cb.bits:.6f} = {cb.bound:.6f}, so |U| >= {cb.ceiling}")
    if c:
        for k, v in lb.per_value:
            rep.line(f"  {','.join(f'{n}={x}' for n, x in k)}: {v:.6f}")
    status = EXIT_OK
    if args.card is not None:
        ok = lb.max_bits <= math.log2(args.card) + _table_eps(args, t)
        rep.doc["declared_cardinality"] = {"k": args.card, "log2k": bits(math.log2(args.card)), "ok": ok}
        rep.line(f"declared |U| = {args.card}: log2 = {math.log2(args.card):.6f} "
                 f"{'ok' if ok else 'VIOLATED'}")
        status = EXIT_OK if ok else EXIT_VIOLATION
    return status


def cmd_mme(args, rep: Report) -> int:
    t = load_table(args.dist)
    est = mme.mme_estimate(
        t, args.x, args.y, names(args.c), w_card_max=args.w_card_max, restarts=args.restarts,
        seed=args.seed, tol=args.tol,
    ) if not args.bounds_only else None
    if est is None:
        lower, avg = mme.mme_lower(t, args.x, args.y, names(args.c))
        upper = mme.mme_upper_trivial(t, args.x, args.y)
    else:
        lower, avg, upper = est.lower_bits, est.averaged_lower_bits, est.trivial_upper_bits
    rep.doc.update(lower=bits(lower), averaged_lower=bits(avg), upper=bits(upper))
    rep.line(f"lower   {lower:.6f}  (max over c of I(X:Y|C=c); averaged {avg:.6f})")
    rep.line(f"upper   {upper:.6f}  (min(H(X), H(Y)))")
    if est is not None:
        rep.doc.update(
            numeric=bits(est.numeric_bits), w_cardinality=est.w_cardinality, converged=est.converged,
            mismatch=est.mismatch, restarts=est.restarts,
            trace=[{"k": k, "best": bits(v)} for k, v in est.trace], notes=list(est.notes),
        )
        if est.converged:
            rep.line(f"numeric {est.numeric_bits:.6f}  (local search, |W|={est.w_cardinality}, "
                     f"mismatch {est.mismatch:.2e}; an upper bound)")
        else:
            rep.line("numeric none  (no candidate met the mismatch tolerance)")
    return EXIT_OK


def cmd_compare(args, rep: Report) -> int:
    t = load_table(args.dist)
    graphs = {}
    for ref in args.graph:
        gid = ref.split(":", 1)[1] if ref.startswith("fixture:") else Path(ref).stem
        if gid in graphs:
            gid = ref
        graphs[gid] = load_graph(ref)
    cards = parse_cards(args.latent_card)
    per_graph = {gid: {n: k for n, k in cards.items() if n in g.latent} for gid, g in graphs.items()}
    eps = _table_eps(args, t)
    verdicts = discovery.compare(graphs, t, args.caps, eps, eps, {k: v for k, v in per_graph.items() if v})
    rep.doc["verdicts"] = [_verdict_json(v) for v in verdicts]
    for v in verdicts:
        _emit_verdict(rep, v, verbose=args.verbose)
    return EXIT_VIOLATION if any(v.falsified for v in verdicts) else EXIT_OK


def cmd_witness(args, rep: Report) -> int:
    cond = None
    if args.kind == "path":
        g = load_graph(args.graph)
        c = names(args.c)
        model = sem.path_witness(g, names(args.path), c)
        cond = sem.witness_assignment(g, names(args.path), c)
    elif args.kind == "violation":
        g = load_graph(args.graph)
        model = sem.violation_witness(g, parse_relation(args.rel), args.d_bias)
    elif args.kind == "equal-confounders":
        model = sem.equal_confounders_fixture(args.u_size)
    else:
        model = sem.xor_fixture(args.eps_bias)
    t = sem.observed_joint(model) if not args.all_nodes else sem.joint(model)
    rep.doc["sem"] = json.loads(sem.serialize_sem(model))
    rep.doc["joint"] = dist.serialize_table(t)
    if cond:
        rep.doc["conditioning"] = cond
        rep.line("# condition on " + ", ".join(f"{k}={v}" for k, v in cond.items()))
    rep.line("# model")
    rep.line(sem.serialize_sem(model).rstrip())
    rep.line("# joint")
    rep.line(dist.serialize_table(t).rstrip())
    return EXIT_OK


def cmd_sim(args, rep: Report) -> int:
    g = load_graph(args.graph)
    model = sem.random_sem(g, args.domain_size, args.seed, args.noise_size)
    t = sem.joint(model) if args.all_nodes else sem.observed_joint(model)
    rep.doc["joint"] = dist.serialize_table(t)
    rep.line(dist.serialize_table(t).rstrip())
    return EXIT_OK


def cmd_fixtures(args, rep: Report) -> int:
    rep.doc["graphs"] = {n: serialize_graph(f()) for n, f in fixtures.GRAPHS.items()}
    rep.doc["tables"] = sorted(TABLES)
    for n, f in fixtures.GRAPHS.items():
        rep.line(f"## fixture:{n}")
        rep.line(serialize_graph(f()).rstrip())
    rep.line("## tables: " + ", ".join(f"fixture:{n}" for n in TABLES))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--caps", type=parse_caps, default=(2, 2, 2, 2), help="size limits a,b,c,d")
    common.add_argument("--eps", type=positive, default=ce.EPS_EXACT, help="tolerance for exact tables")
    common.add_argument("--eps-empirical", type=positive, default=ce.EPS_EMPIRICAL,
                        help="tolerance for count tables")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("text", "json"), default="text")

    p = argparse.ArgumentParser(prog="esep", description="e-separation constraints for hidden-variable DAGs")
    p.add_argument("--version", action="version", version=f"esep {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("esep", parents=[common], help="enumerate e-separation relations")
    s.add_argument("--graph", required=True)
    s.add_argument("--all-nodes", action="store_true", help="allow latent nodes in relations")
    s.add_argument("--nontrivial", action="store_true", help="only relations with a minimal nonempty d")

    s = sub.add_parser("derive", parents=[common], help="print entropic constraints")
    s.add_argument("--graph", required=True)
    s.add_argument("--rel", help="a;b;c;d, names comma-separated")
    s.add_argument("--all", action="store_true", help="every tier, including subsumed constraints")

    s = sub.add_parser("check", parents=[common], help="evaluate a graph's constraints on a table")
    s.add_argument("--graph", required=True)
    s.add_argument("--dist", required=True)
    s.add_argument("--latent-card", action="append", metavar="NAME=K")
    s.add_argument("-v", "--verbose", action="store_true")

    s = sub.add_parser("latent-bound", parents=[common], help="entropy and cardinality bounds on a latent")
    s.add_argument("--dist", required=True)
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--c", default="")
    s.add_argument("--card", type=int, help="declared cardinality to test")

    s = sub.add_parser("mme", parents=[common], help="minimal mediary entropy bounds and estimate")
    s.add_argument("--dist", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--c", default="")
    s.add_argument("--w-card-max", type=int)
    s.add_argument("--restarts", type=int, default=6)
    s.add_argument("--tol", type=positive, default=1e-4)
    s.add_argument("--bounds-only", action="store_true")

    s = sub.add_parser("compare", parents=[common], help="falsify candidate graphs against a table")
    s.add_argument("--graph", action="append", required=True)
    s.add_argument("--dist", required=True)
    s.add_argument("--latent-card", action="append", metavar="NAME=K",
                   help="applies to every graph with a latent of that name")
    s.add_argument("-v", "--verbose", action="store_true")

    s = sub.add_parser("witness", parents=[common], help="emit a witness model and its joint")
    s.add_argument("kind", choices=("path", "violation", "equal-confounders", "xor"))
    s.add_argument("--graph")
    s.add_argument("--path", help="comma-separated node path")
    s.add_argument("--c", default="")
    s.add_argument("--rel")
    s.add_argument("--d-bias", type=float, default=0.99)
    s.add_argument("--u-size", type=int, default=2)
    s.add_argument("--eps-bias", type=float, default=0.99)
    s.add_argument("--all-nodes", action="store_true", help="include latent nodes in the joint")

    s = sub.add_parser("sim", parents=[common], help="joint of a seeded random model on a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--domain-size", type=int, default=2)
    s.add_argument("--noise-size", type=int, default=4)
    s.add_argument("--all-nodes", action="store_true")

    s = sub.add_parser("fixtures", parents=[common], help="list built-in graphs and tables")
    return p


def _check_flags(args, parser):
    if args.command == "witness":
        if args.kind in ("path", "violation") and not args.graph:
            parser.error(f"witness {args.kind} needs --graph")
        if args.kind == "path" and not args.path:
            parser.error("witness path needs --path")
        if args.kind == "violation" and not args.rel:
            parser.error("witness violation needs --rel")
    if args.command == "derive" and args.rel and args.caps != (2, 2, 2, 2):
        parser.error("--caps has no effect together with --rel")


@dataclass
class RunConfig:
    """One command invocation; ``options`` carries the command-specific flags."""

    command: str
    options: dict = field(default_factory=dict)
    caps: tuple[int, int, int, int] = (2, 2, 2, 2)
    eps: float = ce.EPS_EXACT
    eps_empirical: float = ce.EPS_EMPIRICAL
    seed: int = 0
    out: str | None = None
    format: str = "text"

    def __post_init__(self):
        if len(self.caps) != 4 or self.caps[0] < 1 or self.caps[1] < 1 or min(self.caps) < 0:
            raise ValueError("caps need four values with a,b >= 1 and c,d >= 0")
        if not (self.eps > 0 and self.eps_empirical > 0):
            raise ValueError("tolerances must be positive")
        if self.format not in ("text", "json"):
            raise ValueError(f"unknown format {self.format!r}")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        common = {"command", "caps", "eps", "eps_empirical", "seed", "out", "format"}
        opts = {k: v for k, v in vars(args).items() if k not in common}
        return cls(args.command, opts, tuple(args.caps), args.eps, args.eps_empirical, args.seed, args.out,
                   args.format)


COMMANDS = {
    "esep": cmd_esep,
    "derive": cmd_derive,
    "check": cmd_check,
    "latent-bound": cmd_latent_bound,
    "mme": cmd_mme,
    "compare": cmd_compare,
    "witness": cmd_witness,
    "sim": cmd_sim,
    "fixtures": cmd_fixtures,
}


def run(config: RunConfig) -> tuple[int, str]:
    """Execute one command; returns (exit status, rendered report).

    Input errors give status 2 and the message as the report.
    """
    if config.command not in COMMANDS:
        return EXIT_INPUT, f"esep: error: unknown command {config.command!r}"
    args = argparse.Namespace(
        command=config.command, caps=config.caps, eps=config.eps, eps_empirical=config.eps_empirical,
        seed=config.seed, out=config.out, format=config.format, **config.options,
    )
    rep = Report(args)
    try:
        status = COMMANDS[config.command](args, rep)
    except (GraphError, TableError, sem.SemError, ValueError, OSError) as exc:
        return EXIT_INPUT, f"esep: error: {exc}"
    rep.doc["exit"] = status
    return status, rep.render()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_flags(args, parser)
    status, text = run(RunConfig.from_args(args))
    if status == EXIT_INPUT:
        print(text, file=sys.stderr)
        return status
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
