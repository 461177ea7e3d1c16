"""Command-line entry point: ``pacifier <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure, 2 configuration/usage error,
3 benchmark finished with failed rows.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .errors import ConfigError, InvalidInput, PacifierError, UnsupportedVariant
from .metrics import STATS_HEADER, dataset_stats

log = logging.getLogger("pacifier")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3
PLAN_HEADER = ["step", "node"]


def _budget(raw: str):
    return float(raw) if "." in raw else int(raw)


def write_plan(plan, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLAN_HEADER)
        for t, a in enumerate(plan.actions, 1):
            w.writerow([t, a])


def read_plan(path) -> list:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PLAN_HEADER:
            raise ConfigError(f"{path}: plan files need header {','.join(PLAN_HEADER)}")
        return [int(r["node"]) for r in reader]


def cmd_generate(args) -> int:
    from .harness import save_instance
    from .synthgen import GenConfig, generate_instances

    gen = GenConfig(n_min=args.n_min, n_max=args.n_max, opinion_mode=args.opinion_mode,
                    cost_mode=args.cost_mode, seed=args.seed)
    insts = generate_instances(gen, args.count, variant=args.variant, budget=_budget(args.budget),
                               prefix=args.prefix)
    for inst in insts:
        save_instance(inst, args.out)
    print(f"wrote {len(insts)} instances to {args.out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    from .harness import ingest_dataset, load_instance

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(STATS_HEADER)
    if args.instance:
        for path in args.instance:
            inst = load_instance(path)
            if inst.camps is None:
                raise ConfigError(f"{path}: instance has no camp labels")
            w.writerow(dataset_stats(inst.graph, inst.camps, inst.name).row())
    else:
        if not (args.edges and args.labels):
            raise ConfigError("stats needs --instance or both --edges and --labels")
        g, camps, _, _ = ingest_dataset(args.edges, args.labels, force=args.force)
        w.writerow(dataset_stats(g, camps, args.name or Path(args.edges).stem).row())
    return EXIT_OK


def _load_net(path):
    from .agent import QNetwork

    return QNetwork.load(path)


def cmd_plan(args) -> int:
    from .environment import initial_opinions
    from .harness import load_instance, make_plan

    inst = load_instance(args.instance, variant=args.variant,
                         budget=_budget(args.budget) if args.budget else None)
    nets = {}
    if args.method.startswith("pacifier"):
        if not args.checkpoint:
            raise ConfigError(f"--method {args.method} needs --checkpoint")
        nets[args.method] = _load_net(args.checkpoint)
    z0 = initial_opinions(inst)
    plan = make_plan(args.method, inst, z0, args.seed, nets)
    if args.out:
        write_plan(plan, args.out)
    else:
        print(" ".join(str(a) for a in plan.actions))
    return EXIT_OK


def cmd_train(args) -> int:
    from .agent import AgentConfig, ModelConfig, train
    from .harness import dataclass_keys, read_config, section_to_dataclass
    from .synthgen import GenConfig

    overrides = {"seed": args.seed} if args.seed is not None else {}
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    if args.config:
        cp = read_config(args.config, {"agent": dataclass_keys(AgentConfig),
                                       "model": dataclass_keys(ModelConfig),
                                       "generator": dataclass_keys(GenConfig)})
        sec = lambda name: cp[name] if cp.has_section(name) else {}  # noqa: E731
        cfg = section_to_dataclass(sec("agent"), AgentConfig, **overrides)
        model = section_to_dataclass(sec("model"), ModelConfig)
        gen = section_to_dataclass(sec("generator"), GenConfig)
    else:
        cfg, model = AgentConfig(**overrides), ModelConfig()
        gen = GenConfig(cost_mode="random" if cfg.task.endswith("-cost") else "unit")

    def progress(row):
        if args.verbose:
            log.info("episode %d return %.6g", row["episode"], row["episode_return"])

    net, _ = train(cfg=cfg, gen=gen, model=model, log_path=args.log, progress=progress)
    net.save(args.out)
    print(f"saved checkpoint to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .environment import evaluate_plan
    from .harness import load_instance, write_trajectory

    inst = load_instance(args.instance, variant=args.variant,
                         budget=_budget(args.budget) if args.budget else None)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["plan", "k", "anp", "final_pol"])
    for i, path in enumerate(args.plan):
        traj = evaluate_plan(inst, read_plan(path), norm_mode=args.norm_mode)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            write_trajectory(traj, out / f"{Path(path).stem}.trajectory.csv")
        w.writerow([path, traj.k, repr(traj.anp), repr(traj.final_pol)])
    return EXIT_OK


def cmd_bench(args) -> int:
    from .harness import load_experiment_config, run_benchmark

    cfg = load_experiment_config(args.config)
    if args.out:
        cfg.output = args.out
    if args.timing:
        cfg.timing = True
    result = run_benchmark(cfg)
    print(f"{len(result.rows)} rows written to {cfg.output}; {len(result.errors)} failed")
    return EXIT_OK if result.ok else EXIT_PARTIAL


def cmd_plot(args) -> int:
    from .harness import read_results, read_trajectory
    from .plots import emit_plots

    rows = read_results(args.results)
    trajs = {}
    if args.trajectories:
        for path in sorted(Path(args.trajectories).glob("*.csv")):
            parts = path.stem.split("__")
            if len(parts) != 3 or not parts[2].startswith("s"):
                continue
            trajs[(parts[0], parts[1], int(parts[2][1:]))] = read_trajectory(path)["pol_hat"]
    written = emit_plots(rows, trajs, args.out)
    print(f"wrote {len(written)} SVG files to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .harness import METHODS
    from .variants import VARIANTS

    p = argparse.ArgumentParser(prog="pacifier", description="Polarization moderation planning toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample synthetic two-camp instances")
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-min", type=int, default=18)
    g.add_argument("--n-max", type=int, default=50)
    g.add_argument("--opinion-mode", choices=["binary", "continuous"], default="binary")
    g.add_argument("--cost-mode", choices=["unit", "random"], default="unit")
    g.add_argument("--variant", choices=sorted(VARIANTS), default="mi")
    g.add_argument("--budget", default="0.1", help="count, or fraction of n if it has a '.'")
    g.add_argument("--prefix", default="synth")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("stats", help="dataset statistics as one CSV row")
    s.add_argument("--instance", nargs="*")
    s.add_argument("--edges")
    s.add_argument("--labels")
    s.add_argument("--name")
    s.add_argument("--force", action="store_true", help="accept disconnected graphs")
    s.set_defaults(func=cmd_stats)

    pl = sub.add_parser("plan", help="produce an ordered intervention plan")
    pl.add_argument("--instance", required=True)
    pl.add_argument("--method", choices=METHODS, required=True)
    pl.add_argument("--checkpoint")
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--variant", choices=sorted(VARIANTS))
    pl.add_argument("--budget")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plan)

    t = sub.add_parser("train", help="train a Q-network checkpoint")
    t.add_argument("--config")
    t.add_argument("--seed", type=int)
    t.add_argument("--episodes", type=int)
    t.add_argument("--out", required=True)
    t.add_argument("--log")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="replay plans and report ANP")
    e.add_argument("--instance", required=True)
    e.add_argument("--plan", nargs="+", required=True)
    e.add_argument("--variant", choices=sorted(VARIANTS))
    e.add_argument("--budget")
    e.add_argument("--norm-mode", choices=["per-node", "raw"], default="per-node")
    e.add_argument("--out", help="directory for per-step trajectory CSVs")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="run a benchmark sweep from an INI config")
    b.add_argument("--config", required=True)
    b.add_argument("--out")
    b.add_argument("--timing", action="store_true", help="record wall_time_ms (not reproducible)")
    b.set_defaults(func=cmd_bench)

    pt = sub.add_parser("plot", help="render SVG charts from benchmark output")
    pt.add_argument("--results", required=True)
    pt.add_argument("--trajectories")
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidInput, UnsupportedVariant, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PacifierError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
