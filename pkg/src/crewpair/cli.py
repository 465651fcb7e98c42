"""Command line: ``crewpair gen | run | oracle``.

    crewpair gen --seed 3 -o net.yaml
    crewpair run experiment.yaml --out results/
    crewpair run experiment.yaml --no-learning
    crewpair oracle lp instance.txt

The output directory of ``run`` is taken from ``--out``, then the
CREWPAIR_OUT environment variable, then the config's ``output`` key, then
``./results``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, load_network, save_network
from .lp import load_instance, solve_ip, solve_lp
from .netgen import GenerationError, NetGenConfig, generate_network
from .network import CostRules, LegalityRules
from .orchestrator import Optimizer
from .pairings import enumerate_pairings
from .report import write_report

OUT_ENV = "CREWPAIR_OUT"
REL_TOL = 1e-6

log = logging.getLogger("crewpair")


def _setup_logging(verbosity: int):
    level = logging.WARNING - 10 * verbosity
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")


def cmd_gen(args) -> int:
    cfg = NetGenConfig(num_hubs=args.hubs, num_spokes=args.spokes, num_bases=args.bases,
                       flights_per_day=args.flights_per_day, num_days=args.days, seed=args.seed)
    network = generate_network(cfg)
    if args.output:
        save_network(network, args.output)
    pairings = enumerate_pairings(network, LegalityRules(), CostRules(), limit=args.count_limit)
    print(f"flights={len(network)} airports={len(network.airports)} "
          f"bases={','.join(sorted(network.base_airports))} pairings={len(pairings)}"
          + ("+" if len(pairings) >= args.count_limit else ""))
    return 0


def output_dir(cli_value: str | None, config_value: Path | None) -> Path:
    if cli_value:
        return Path(cli_value)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    if config_value is not None:
        return config_value
    return Path("results")


def cmd_run(args) -> int:
    exp = load_config(args.config)
    run_cfg = exp.run
    if args.seed is not None:
        run_cfg = replace(run_cfg, seed=args.seed)
    arms = [("without", False)] if args.no_learning else [("without", False), ("with", True)]
    traces = {}
    for name, learning in arms:
        log.info("starting run %s learning", name)
        cfg = replace(run_cfg, learning_enabled=learning)
        traces[name] = Optimizer(exp.network, exp.rules, exp.cost, cfg).run()
    outdir = output_dir(args.out, exp.output)
    write_report(traces, outdir, figures=not args.no_figures)
    for name, trace in traces.items():
        print(f"{name:>7}: final cost {trace.final_cost:.2f}, z {trace.total_z}, "
              f"loops {len(trace.loops)}, {trace.wall_seconds:.1f}s")
    if "with" in traces:
        print(f"  delta: {traces['with'].final_cost - traces['without'].final_cost:+.2f}")
    print(f"outputs in {outdir}")
    return 0


def _agree(a: float, b: float) -> bool:
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


def cmd_oracle(args) -> int:
    # imported here so the brute-force code stays out of normal runs
    from . import oracles

    if args.what in ("lp", "ip"):
        inst = load_instance(args.path)
        if args.what == "lp":
            ref = oracles.lp_vertex_optimum(inst)
            got = solve_lp(inst).cost
        else:
            ref, _ = oracles.ip_subset_optimum(inst)
            got = solve_ip(inst).cost
    else:
        network = load_network(args.path)
        rules, cost = LegalityRules(), CostRules()
        brute = oracles.pairings_by_filtering(network, rules, cost)
        fast = {p.flights: p.cost for p in enumerate_pairings(network, rules, cost)}
        same = set(brute) == set(fast) and all(_agree(brute[k], fast[k]) for k in brute)
        print(f"oracle={len(brute)} enumerated={len(fast)} match={'yes' if same else 'no'}")
        return 0 if same else 1
    ok = _agree(ref, got) if np.isfinite(ref) else ref == got
    print(f"oracle={ref:.6f} solver={got:.6f} match={'yes' if ok else 'no'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crewpair", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic hub-and-spoke network")
    g.add_argument("--hubs", type=int, default=3)
    g.add_argument("--spokes", type=int, default=8)
    g.add_argument("--bases", type=int, default=2)
    g.add_argument("--flights-per-day", type=int, default=60)
    g.add_argument("--days", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count-limit", type=int, default=200_000, help="stop counting pairings here")
    g.add_argument("-o", "--output", help="write the network as YAML")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run the paired experiment from a YAML config")
    r.add_argument("config", help="experiment YAML")
    r.add_argument("--no-learning", action="store_true", help="run only the baseline arm")
    r.add_argument("--seed", type=int, help="override run.seed")
    r.add_argument("--out", help=f"output directory (else ${OUT_ENV}, else config 'output')")
    r.add_argument("--no-figures", action="store_true", help="skip the PNG rendering")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="check a solver against its brute-force oracle")
    o.add_argument("what", choices=["lp", "ip", "pairings"])
    o.add_argument("path", help="set-cover instance file (lp, ip) or network YAML (pairings)")
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    if args.command == "run" and not Path(args.config).exists():
        parser.error(f"config file not found: {args.config}")
    if args.command == "oracle" and not Path(args.path).exists():
        parser.error(f"file not found: {args.path}")
    try:
        return args.func(args)
    except (ConfigError, GenerationError, ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"crewpair: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
