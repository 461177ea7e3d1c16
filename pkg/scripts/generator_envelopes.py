"""Min/max of average degree, cross-camp ratio and initial polarization per size range."""
import argparse

import numpy as np
from scipy.stats import spearmanr

from pacifier.metrics import dataset_stats
from pacifier.synthgen import GenConfig, generate_instances

RANGES = [(30, 50), (50, 100), (100, 200), (200, 300), (300, 400), (400, 500)]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    print("range     n_graphs  avg_degree     cross_ratio   initial_pol   spearman")
    for lo, hi in RANGES:
        stats = [dataset_stats(i.graph, i.camps)
                 for i in generate_instances(GenConfig(n_min=lo, n_max=hi, seed=args.seed), args.count)]
        deg = np.array([s.avg_degree for s in stats])
        cross = np.array([s.cross_camp_ratio for s in stats])
        pol = np.array([s.initial_polarization for s in stats])
        rho = spearmanr(cross, pol).statistic
        print(f"{lo:3d}-{hi:<4d} {len(stats):8d}  {deg.min():5.2f}~{deg.max():5.2f}  "
              f"{cross.min():.3f}~{cross.max():.3f}  {pol.min():.2f}~{pol.max():.2f}   {rho:+.3f}")


if __name__ == "__main__":
    main()
