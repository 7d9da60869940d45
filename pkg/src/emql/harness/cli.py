"""Command line entry point.

    emql run --config exp.cfg [--agent mbs --delay-const 4 ...]
    emql compare --agents emql,mbs,dq,emdp [--delay-const 4 ...]
    emql verify [--seed 0] [--out results/verify.json]

Exit codes: 0 success, 2 configuration error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .. import analysis
from ..agents import AGENT_KINDS
from ..errors import ConfigError
from .config import DEFAULT_ITERATIONS, ExperimentConfig, config_from_mapping, load_config
from .output import emit_comparison, emit_outputs
from .runner import compare, run_experiment

log = logging.getLogger("emql")

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--env", choices=["frozen_lake", "cart_pole"])
    delay = p.add_mutually_exclusive_group()
    delay.add_argument("--delay-const", type=int, metavar="D", help="constant delay of D steps")
    delay.add_argument("--delay-geom", type=float, metavar="P", help="geometric delay, mean 1/(1-P)")
    p.add_argument("--episodes", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--window", type=int, help="moving-average window in episodes")


def _build_config(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else None
    values = {}
    if args.env:
        values["env.name"] = args.env
    if getattr(args, "agent", None):
        values["agent.kind"] = args.agent
    if args.delay_const is not None:
        values.update({"delay.kind": "constant", "delay.d": args.delay_const})
    if args.delay_geom is not None:
        values.update({"delay.kind": "geometric", "delay.p": args.delay_geom})
    for flag, key in (
        ("episodes", "run.episodes"),
        ("iterations", "run.iterations"),
        ("seed", "run.seed"),
        ("out", "run.out"),
        ("workers", "run.workers"),
        ("window", "run.window"),
    ):
        if getattr(args, flag) is not None:
            values[key] = getattr(args, flag)
    if base is not None and "env.name" in values and "run.iterations" not in values:
        values["run.iterations"] = DEFAULT_ITERATIONS[values["env.name"]]
    return config_from_mapping(values, base)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="emql", description="Tabular RL under delayed observations")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one agent")
    _add_overrides(run_p)
    run_p.add_argument("--agent", choices=AGENT_KINDS)

    cmp_p = sub.add_parser("compare", help="run several agents with matched seeds")
    _add_overrides(cmp_p)
    cmp_p.add_argument("--agents", default="emql,mbs,dq,emdp")

    ver_p = sub.add_parser("verify", help="randomised checks of the exact identities and bounds")
    ver_p.add_argument("--seed", type=int, default=0)
    ver_p.add_argument("--out", default="results/verify.json")
    ver_p.add_argument("--suites", default=",".join(analysis.SUITES))

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "verify":
        names = [s for s in args.suites.split(",") if s]
        unknown = set(names) - set(analysis.SUITES)
        if unknown:
            print(f"unknown suites: {sorted(unknown)}", file=sys.stderr)
            return EXIT_CONFIG
        results = {name: analysis.SUITES[name](seed=args.seed) for name in names}
        summary = analysis.write_report(results, args.out)
        for name, s in summary.items():
            status = "ok" if s["failures"] == 0 else "FAIL"
            print(f"{name:10s} {s['instances']:5d} instances  {s['failures']:3d} failures  {status}")
        return EXIT_OK if all(s["failures"] == 0 for s in summary.values()) else EXIT_VERIFY

    try:
        cfg = _build_config(args)
        if args.command == "compare":
            agents = [a for a in args.agents.split(",") if a]
            bad = [a for a in agents if a not in AGENT_KINDS]
            if bad:
                raise ConfigError(f"unknown agents {bad}; expected a subset of {AGENT_KINDS}")
            for a in agents:
                cfg.with_agent(a).validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        res = run_experiment(cfg)
        paths = emit_outputs(res, cfg.out_dir)
        print(f"{cfg.agent}: median final moving average {float(res.median[-1]):.3f}")
    else:
        results = compare(cfg, agents)
        paths = emit_comparison(results, cfg.out_dir)
        for kind, res in results.items():
            print(f"{kind:5s} median final moving average {float(res.median[-1]):.3f}")
    for p in paths.values():
        log.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
