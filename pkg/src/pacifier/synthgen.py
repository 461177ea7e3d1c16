"""Two-echo-chamber instance generator.

Each camp is an independent Barabasi-Albert graph; a sparse set of uniform
cross-camp edges (a sampled fraction of the intra-camp edge count) joins them.
Opinions follow camp membership.
"""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .environment import Instance
from .errors import GenerationFailed, InvalidInput
from .graph import _from_arrays, is_connected

__all__ = [
    "GenConfig",
    "generate_instance",
    "generate_instances",
    "sample_costs",
    "sample_continuous_opinions",
]


@dataclass(frozen=True)
class GenConfig:
    n_min: int = 18
    n_max: int = 50
    ba_m_min: int = 1
    ba_m_max: int = 4
    cross_ratio_min: float = 0.01
    cross_ratio_max: float = 0.17
    opinion_mode: str = "binary"  # binary | continuous
    cost_mode: str = "unit"  # unit | random
    cost_low: float = 0.5
    cost_high: float = 1.5
    max_retries: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.n_min < 4 or self.n_max < self.n_min:
            raise InvalidInput(f"bad node range [{self.n_min}, {self.n_max}]")
        if self.ba_m_min < 1 or self.ba_m_max < self.ba_m_min:
            raise InvalidInput("BA attachment range must satisfy 1 <= min <= max")
        if not 0 <= self.cross_ratio_min <= self.cross_ratio_max <= 1:
            raise InvalidInput("cross ratios must satisfy 0 <= min <= max <= 1")
        if self.opinion_mode not in ("binary", "continuous"):
            raise InvalidInput(f"unknown opinion_mode {self.opinion_mode!r}")
        if self.cost_mode not in ("unit", "random"):
            raise InvalidInput(f"unknown cost_mode {self.cost_mode!r}")
        if not 0 < self.cost_low <= self.cost_high:
            raise InvalidInput("cost bounds must satisfy 0 < low <= high")


def sample_costs(n: int, mode: str, rng, low: float = 0.5, high: float = 1.5) -> np.ndarray:
    if mode == "unit":
        return np.ones(n)
    if mode == "random":
        return rng.uniform(low, high, size=n)
    raise InvalidInput(f"unknown cost mode {mode!r}")


def sample_continuous_opinions(positive, rng) -> np.ndarray:
    """Magnitudes ~ Uniform(0, 1], signed by camp (``positive`` is a bool mask)."""
    positive = np.asarray(positive, bool)
    mag = 1.0 - rng.random(positive.size)  # (0, 1]
    return np.where(positive, mag, -mag)


def _ba_edges(nodes: np.ndarray, m: int, rng) -> np.ndarray:
    m = min(m, len(nodes) - 1)
    h = nx.barabasi_albert_graph(len(nodes), m, seed=int(rng.integers(2**31 - 1)))
    e = np.array(sorted(h.edges()), dtype=np.int64).reshape(-1, 2)
    return nodes[e]


def generate_instance(cfg: GenConfig, rng=None, variant="mi", budget=0.1, name="") -> Instance:
    """Sample one instance.

    ``budget`` is either an absolute count (int) or a fraction of ``n`` (float).
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    perm = rng.permutation(n)
    n_pos = (n + 1) // 2
    pos_nodes, neg_nodes = np.sort(perm[:n_pos]), np.sort(perm[n_pos:])
    intra = []
    for half in (pos_nodes, neg_nodes):
        m = int(rng.integers(cfg.ba_m_min, cfg.ba_m_max + 1))
        intra.append(_ba_edges(half, m, rng))
    intra = np.concatenate(intra)
    ratio = float(rng.uniform(cfg.cross_ratio_min, cfg.cross_ratio_max))
    n_cross = int(round(ratio * len(intra)))
    if ratio > 0:
        n_cross = max(1, n_cross)
    n_cross = min(n_cross, len(pos_nodes) * len(neg_nodes))

    for _ in range(cfg.max_retries):
        pick = rng.choice(len(pos_nodes) * len(neg_nodes), size=n_cross, replace=False)
        cross = np.stack([pos_nodes[pick // len(neg_nodes)], neg_nodes[pick % len(neg_nodes)]], axis=1)
        edges = np.concatenate([intra, cross]) if n_cross else intra
        g = _from_arrays(n, edges[:, 0], edges[:, 1])
        if is_connected(g):
            break
    else:
        raise GenerationFailed(
            f"no connected instance after {cfg.max_retries} cross-edge draws "
            f"(n={n}, cross edges={n_cross})"
        )

    positive = np.zeros(n, bool)
    positive[pos_nodes] = True
    if cfg.opinion_mode == "binary":
        s0 = np.where(positive, 1.0, -1.0)
    else:
        s0 = sample_continuous_opinions(positive, rng)
    costs = sample_costs(n, cfg.cost_mode, rng, cfg.cost_low, cfg.cost_high)
    k = budget if isinstance(budget, (int, np.integer)) else max(1, int(round(budget * n)))
    return Instance(
        graph=g,
        s0=s0,
        costs=costs,
        budget=min(int(k), n),
        variant=variant,
        camps=np.where(positive, 1, -1),
        name=name,
    )


def generate_instances(cfg: GenConfig, count: int, variant="mi", budget=0.1, prefix="synth"):
    """``count`` instances from one seeded stream (bit-identical for a fixed seed)."""
    rng = np.random.default_rng(cfg.seed)
    return [
        generate_instance(cfg, rng, variant=variant, budget=budget, name=f"{prefix}_{i:04d}")
        for i in range(count)
    ]
