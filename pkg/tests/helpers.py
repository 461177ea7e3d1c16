"""Shared builders for the test suite."""
import numpy as np

from pacifier.environment import Instance
from pacifier.graph import build_graph
from pacifier.synthgen import GenConfig, generate_instance


def make_instance(g, s, variant="mi", budget=1, costs=None, **kw):
    costs = np.ones(g.n) if costs is None else costs
    return Instance(graph=g, s0=np.asarray(s, float), costs=costs, budget=budget, variant=variant, **kw)


def random_connected_graph(rng, n, extra=None):
    """Random spanning tree plus extra uniform edges."""
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        u, v = int(order[i]), int(order[rng.integers(0, i)])
        edges.add((min(u, v), max(u, v)))
    extra = n if extra is None else extra
    for _ in range(extra):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.add((int(min(u, v)), int(max(u, v))))
    return build_graph(n, sorted(edges))


def small_instances(count, seed=0, variant="mi", budget=0.2, **gen_kw):
    cfg = GenConfig(**gen_kw)
    rng = np.random.default_rng(seed)
    return [generate_instance(cfg, rng, variant=variant, budget=budget, name=f"t{i}") for i in range(count)]
