"""Train both agents on MI-cost instances and compare against random on a held-out set.

    python3 scripts/train_smoke.py --episodes 2000 --out runs/smoke
"""
import argparse
import time
from pathlib import Path

import numpy as np

from pacifier.agent import AgentConfig, ModelConfig, deploy, train
from pacifier.baselines import plan_random
from pacifier.environment import evaluate_plan
from pacifier.synthgen import GenConfig, generate_instances


def held_out_scores(net, instances, random_seeds):
    rows = []
    for inst in instances:
        traj = evaluate_plan(inst, deploy(inst, net))
        rand = [evaluate_plan(inst, plan_random(inst, np.random.default_rng(s))) for s in range(random_seeds)]
        rows.append((traj.anp, np.mean([t.anp for t in rand]),
                     traj.weighted_anp, np.mean([t.weighted_anp for t in rand])))
    return np.array(rows)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--task", default="mi-cost")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--held-out", type=int, default=20)
    p.add_argument("--random-seeds", type=int, default=10)
    p.add_argument("--out", default="runs/smoke")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cost_mode = "random" if args.task.endswith("-cost") else "unit"
    gen = GenConfig(cost_mode=cost_mode, seed=args.seed)
    test = generate_instances(GenConfig(cost_mode=cost_mode, seed=2024), args.held_out,
                              variant=args.task, budget=0.2)
    for variant in ("greedy", "rl"):
        start = time.perf_counter()
        cfg = AgentConfig(variant=variant, task=args.task, episodes=args.episodes, seed=args.seed)
        net, _ = train(cfg=cfg, gen=gen, model=ModelConfig(), log_path=out / f"{variant}_log.csv")
        net.save(out / f"{variant}.npz")
        s = held_out_scores(net, test, args.random_seeds)
        print(f"{variant:6s} {time.perf_counter() - start:7.1f}s  "
              f"ANP {s[:, 0].mean():.4g} vs random {s[:, 1].mean():.4g} "
              f"(wins {int((s[:, 0] < s[:, 1]).sum())}/{len(test)})  "
              f"cost-weighted {s[:, 2].mean():.4g} vs {s[:, 3].mean():.4g} "
              f"(wins {int((s[:, 2] < s[:, 3]).sum())}/{len(test)})")


if __name__ == "__main__":
    main()
