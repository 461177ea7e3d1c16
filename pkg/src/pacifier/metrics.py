"""Polarization index, ANP trajectory score and dataset-level statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .graph import Graph

__all__ = [
    "Trajectory",
    "DatasetStats",
    "polarization_index",
    "normalized_polarization",
    "anp",
    "cost_weighted_anp",
    "dataset_stats",
    "filter_by_polarization",
    "cross_camp_ratio",
    "STATS_HEADER",
]


def polarization_index(z, n: int | None = None) -> float:
    """Mean squared opinion ``||z||^2 / n``.

    ``n`` overrides the denominator (node removal keeps the original size).
    """
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise InvalidInput("polarization of an empty vector is undefined")
    return float(z @ z) / (n if n is not None else z.size)


def normalized_polarization(z, mode: str = "per-node", n: int | None = None) -> float:
    """``pi(z) / n`` in ``per-node`` mode, ``pi(z)`` in ``raw`` mode."""
    z = np.asarray(z, dtype=float)
    pol = polarization_index(z, n)
    if mode == "raw":
        return pol
    if mode != "per-node":
        raise InvalidInput(f"unknown normalization mode {mode!r}")
    return pol / (n if n is not None else z.size)


def anp(pol_hat_steps, k: int) -> float:
    """Accumulated normalized polarization: ``(1/k) * sum_{t=0..k} pi_hat_t``."""
    steps = np.asarray(pol_hat_steps, dtype=float)
    if k < 1:
        raise InvalidInput("ANP needs a budget k >= 1")
    if steps.shape != (k + 1,):
        raise InvalidInput(f"expected {k + 1} trajectory values, got {steps.size}")
    return float(steps.sum() / k)


def cost_weighted_anp(pol_hat_steps, action_costs, mean_cost: float) -> float:
    """ANP with each post-action step weighted by ``c(a_t) / mean_cost``.

    Proportional to the negated episode return under the cost-weighted reward,
    and equal to :func:`anp` when all costs are equal.
    """
    steps = np.asarray(pol_hat_steps, dtype=float)
    w = np.asarray(action_costs, dtype=float)
    k = len(w)
    if k < 1:
        raise InvalidInput("ANP needs a budget k >= 1")
    if steps.shape != (k + 1,):
        raise InvalidInput(f"expected {k + 1} trajectory values, got {steps.size}")
    if mean_cost <= 0:
        raise InvalidInput("mean cost must be positive")
    return float((steps[0] + steps[1:] @ (w / mean_cost)) / k)


@dataclass
class Trajectory:
    actions: list
    pol_steps: list  # raw pi at t = 0..k
    pol_hat_steps: list  # normalized pi at t = 0..k
    anp: float
    variant: str
    costs_spent: list = field(default_factory=list)  # cumulative, length k+1
    weighted_anp: float | None = None  # cost-weighted variant of anp

    @property
    def k(self) -> int:
        return len(self.actions)

    @property
    def final_pol(self) -> float:
        return self.pol_steps[-1]


@dataclass(frozen=True)
class DatasetStats:
    name: str
    n: int
    m: int
    camp_sizes: tuple
    avg_degree: float
    initial_polarization: float
    cross_camp_ratio: float
    camp_avg_degrees: tuple

    def row(self) -> list:
        return [
            self.name, self.n, self.m, self.camp_sizes[0], self.camp_sizes[1],
            f"{self.avg_degree:.6f}", f"{self.initial_polarization:.6f}",
            f"{self.cross_camp_ratio:.6f}",
            f"{self.camp_avg_degrees[0]:.6f}", f"{self.camp_avg_degrees[1]:.6f}",
        ]


STATS_HEADER = [
    "dataset", "n", "m", "n_pos", "n_neg", "avg_degree",
    "initial_polarization", "cross_camp_ratio", "avg_degree_pos", "avg_degree_neg",
]


def _camp_mask(camps, n) -> np.ndarray:
    camps = np.asarray(camps)
    if camps.shape != (n,):
        raise InvalidInput(f"camp labels have shape {camps.shape}, graph has {n} nodes")
    if camps.dtype == bool:
        return camps
    if not np.all(np.isin(camps, (-1, 1))):
        raise InvalidInput("camp labels must be +1 / -1")
    return camps > 0


def cross_camp_ratio(g: Graph, camps) -> float:
    """Fraction of edges whose endpoints lie in different camps."""
    pos = _camp_mask(camps, g.n)
    if g.m == 0:
        return 0.0
    return float(np.mean(pos[g.src] != pos[g.dst]))


def dataset_stats(g: Graph, camps, name: str = "") -> DatasetStats:
    """Summary statistics with the initial polarization under +/-1 opinions."""
    from .dynamics import solve_fj_direct

    pos = _camp_mask(camps, g.n)
    s = np.where(pos, 1.0, -1.0)
    z0 = solve_fj_direct(g, s)
    deg = g.degrees
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    return DatasetStats(
        name=name,
        n=g.n,
        m=g.m,
        camp_sizes=(n_pos, n_neg),
        avg_degree=2.0 * g.m / g.n,
        initial_polarization=polarization_index(z0),
        cross_camp_ratio=cross_camp_ratio(g, pos),
        camp_avg_degrees=(
            float(deg[pos].mean()) if n_pos else 0.0,
            float(deg[~pos].mean()) if n_neg else 0.0,
        ),
    )


def filter_by_polarization(stats, threshold: float = 0.4) -> list:
    """Keep entries whose initial polarization strictly exceeds ``threshold``."""
    if threshold < 0:
        raise InvalidInput("threshold must be non-negative")
    return [st for st in stats if st.initial_polarization > threshold]
