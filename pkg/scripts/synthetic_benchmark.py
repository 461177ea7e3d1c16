"""Benchmark the baselines (and optional checkpoints) on generated instances, then plot.

    python3 scripts/synthetic_benchmark.py --count 10 --variant mi --out runs/bench
    python3 scripts/synthetic_benchmark.py --checkpoint-rl runs/smoke/rl.npz --variant mi-cost
"""
import argparse
from pathlib import Path

from pacifier.harness import ExperimentConfig, run_benchmark
from pacifier.plots import emit_plots
from pacifier.synthgen import GenConfig

BASELINES = ["random", "pagerank", "extreme-expressed", "extreme-neighbours", "bomp"]


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--n-min", type=int, default=30)
    p.add_argument("--n-max", type=int, default=50)
    p.add_argument("--variant", default="mi")
    p.add_argument("--budget", default="0.2")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--checkpoint-rl", default="")
    p.add_argument("--checkpoint-greedy", default="")
    p.add_argument("--out", default="runs/bench")
    args = p.parse_args()

    methods = list(BASELINES)
    if not args.variant.startswith("mi") or args.variant == "mi-bias":
        methods.remove("bomp")
    methods += [m for m, path in (("pacifier-rl", args.checkpoint_rl),
                                  ("pacifier-greedy", args.checkpoint_greedy)) if path]
    cost_mode = "random" if args.variant.endswith("-cost") else "unit"
    cfg = ExperimentConfig(
        methods=methods,
        generator=GenConfig(n_min=args.n_min, n_max=args.n_max, cost_mode=cost_mode),
        generate_count=args.count,
        variant=args.variant,
        budget=args.budget,
        seeds=args.seeds,
        output=args.out,
        checkpoint_rl=args.checkpoint_rl,
        checkpoint_greedy=args.checkpoint_greedy,
    )
    result = run_benchmark(cfg)
    emit_plots(result.rows, result.trajectories, Path(args.out) / "plots")
    by_method = {}
    for r in result.rows:
        by_method.setdefault(r.method, []).append(r.anp)
    for method, vals in sorted(by_method.items(), key=lambda kv: sum(kv[1]) / len(kv[1])):
        print(f"{method:20s} mean ANP {sum(vals) / len(vals):.5f}  ({len(vals)} runs)")
    for ds, method, seed, msg in result.errors:
        print(f"failed: {ds} {method} seed {seed}: {msg}")


if __name__ == "__main__":
    main()
