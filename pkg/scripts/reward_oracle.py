"""How well does the best possible myopic policy do on the training reward's own terms?

At each step the oracle settles every feasible candidate and takes the one with
the largest immediate reward -(pi / C) * c(a), i.e. the target a perfectly fitted
Greedy agent would imitate.  Its plans are scored with plain ANP and with the
cost-weighted ANP, and compared to the random baseline.

    python3 scripts/reward_oracle.py --count 20
"""
import argparse

import numpy as np

from pacifier.baselines import plan_random
from pacifier.environment import ModerationEnv, evaluate_plan
from pacifier.synthgen import GenConfig, generate_instances


def myopic_reward_plan(inst):
    env = ModerationEnv(inst)
    env.reset()
    plan = []
    while not env.done:
        best, best_r = None, -np.inf
        for a in np.flatnonzero(env.decision.mask):
            trial = ModerationEnv(inst)
            trial.reset()
            for b in plan:
                trial.step(b)
            r = trial.step(int(a)).reward
            if r > best_r:
                best, best_r = int(a), r
        env.step(best)
        plan.append(best)
    return plan


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--variant", default="mi-cost")
    p.add_argument("--random-seeds", type=int, default=10)
    args = p.parse_args()

    insts = generate_instances(GenConfig(cost_mode="random", seed=2024), args.count,
                               variant=args.variant, budget=0.2)
    wins = wins_w = 0
    for inst in insts:
        oracle = evaluate_plan(inst, myopic_reward_plan(inst))
        rand = [evaluate_plan(inst, plan_random(inst, np.random.default_rng(s))) for s in range(args.random_seeds)]
        rand_anp = np.mean([t.anp for t in rand])
        rand_w = np.mean([t.weighted_anp for t in rand])
        wins += oracle.anp < rand_anp
        wins_w += oracle.weighted_anp < rand_w
        print(f"{inst.name:10s} n={inst.n:3d} k={inst.budget:2d}  ANP {oracle.anp:.5f} vs {rand_anp:.5f}  "
              f"weighted {oracle.weighted_anp:.5f} vs {rand_w:.5f}")
    print(f"myopic reward oracle beats random: ANP {wins}/{len(insts)}, cost-weighted ANP {wins_w}/{len(insts)}")


if __name__ == "__main__":
    main()
