"""Command-line front end: ``generate``, ``percolate``, ``cascade`` and ``sweep``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .cascade import run_trials
from .experiment import CONFIG_KEYS, parse_config, run_sweep, selection_rng, write_results
from .graph import read_graph, write_graph
from .immunity import CONVENTIONS, STRATEGIES, build_profile, half_edge_probabilities
from .percolation import node_marginals, solve_scalar
from .topology import GenConfig, generate_graph

CASCADE_HEADER = ["protect_frac", "attack_frac", "strategy", "trial", "seed", "steps",
                  "final_lcc", "survived_ratio"]


def _load_graph(path):
    with open(path) as fh:
        return read_graph(fh)


def _add_protection(p: argparse.ArgumentParser) -> None:
    p.add_argument("--protect-frac", type=float, default=0.0,
                   help="fraction of nodes to protect (default: 0)")
    p.add_argument("--protect-strategy", choices=STRATEGIES, default="degree",
                   help="protected-set selection (default: degree)")
    p.add_argument("--C", type=float, default=0.9, dest="C",
                   help="immunity coefficient (default: 0.9)")
    p.add_argument("--immunity-convention", choices=CONVENTIONS, default="paper",
                   help="immunity formula variant (default: paper)")


def cmd_generate(args) -> int:
    config = GenConfig(host_count=args.hosts, vms_per_host=args.vms_per_host,
                       s_min=args.s_min, s_max=args.s_max, alpha=args.alpha,
                       m=args.m, seed=args.seed)
    topology, graph = generate_graph(config)
    with open(args.out, "w", newline="\n") as fh:
        write_graph(graph, fh)
    print(f"nodes={graph.node_count} edges={graph.edge_count} "
          f"subnetworks={len(topology.subnetworks)}")
    return 0


def cmd_percolate(args) -> int:
    graph = _load_graph(args.graph)
    profile = build_profile(graph, C=args.C, convention=args.immunity_convention,
                            protect_fraction=args.protect_frac, strategy=args.protect_strategy,
                            rng=selection_rng(args.seed), eta=args.eta)
    probs = half_edge_probabilities(graph, profile, args.eta)
    sol = solve_scalar(graph, probs, args.tol, args.max_iters)
    print(f"S={sol.giant_fraction!r} iterations={sol.iterations} residual={sol.residual!r}")
    if args.marginals:
        with open(args.marginals, "w", newline="\n") as fh:
            for i, v in enumerate(node_marginals(graph, sol.h).tolist()):
                fh.write(f"{i} {v!r}\n")
    return 0


def cmd_cascade(args) -> int:
    graph = _load_graph(args.graph)
    profile = build_profile(graph, C=args.C, convention=args.immunity_convention,
                            protect_fraction=args.protect_frac, strategy=args.protect_strategy,
                            rng=selection_rng(args.seed), eta=args.attack_frac)
    results = run_trials(graph, profile, args.attack_frac, args.trials, args.seed)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CASCADE_HEADER)
        for t, (trace, seed) in enumerate(zip(results.traces, results.seeds)):
            writer.writerow([repr(args.protect_frac), repr(args.attack_frac),
                             args.protect_strategy, t, seed, len(trace.steps),
                             trace.final_lcc, repr(trace.survived_ratio)])
    s = results.summary
    print(f"mean={s.mean!r} std={s.std!r} ci95=[{s.ci95_low!r}, {s.ci95_high!r}] "
          f"trials={s.trials}")
    return 0


def cmd_sweep(args) -> int:
    config = parse_config(args.config)
    out = args.out or config.out
    if not out:
        raise ValueError("no output path: pass --out or set 'out' in the config")
    rows = run_sweep(config)
    with open(out, "w", newline="") as fh:
        write_results(rows, fh)
    print(f"rows={len(rows)} out={out}")
    return 0


def _config_help() -> str:
    lines = ["config keys (key = value, '#' comments):"]
    for key, (default, desc) in CONFIG_KEYS.items():
        shown = "required" if default is None else f"default: {default}"
        lines.append(f"  {key:<20} {desc} ({shown})")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupledcloud",
        description="Robustness of coupled virtual/physical cloud networks under attack.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a two-layer topology and write its graph file")
    g.add_argument("--hosts", type=int, required=True)
    g.add_argument("--vms-per-host", type=int, required=True)
    g.add_argument("--s-min", type=int, default=3)
    g.add_argument("--s-max", type=int, default=500)
    g.add_argument("--alpha", type=float, default=2.5)
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("percolate", help="solve for the giant-component fraction")
    p.add_argument("--graph", required=True)
    p.add_argument("--eta", type=float, default=0.0, help="initially removed fraction")
    _add_protection(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0, help="seed for random protected sets")
    p.add_argument("--marginals", help="write per-node giant-component probabilities here")
    p.set_defaults(func=cmd_percolate)

    c = sub.add_parser("cascade", help="Monte Carlo avalanche trials")
    c.add_argument("--graph", required=True)
    c.add_argument("--attack-frac", type=float, required=True)
    _add_protection(c)
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_cascade)

    s = sub.add_parser("sweep", help="run the protection-vs-attack grid",
                       epilog=_config_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, TypeError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
