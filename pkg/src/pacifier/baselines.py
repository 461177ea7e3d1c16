"""Non-learning one-shot planners.

Every planner here is a function of the initial instance and ``z0`` only; none
of them calls :func:`pacifier.dynamics.settle` (the exhaustive oracle is the
exception, by design).  Ties are always broken by ascending node id.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import splu

from .dynamics import OpinionState, settle, system_matrix
from .environment import Instance
from .errors import InvalidBudget, Refused, UnsupportedVariant
from .metrics import polarization_index

__all__ = [
    "Plan",
    "plan_random",
    "plan_pagerank",
    "plan_extreme_expressed",
    "plan_extreme_neighbours",
    "plan_bomp",
    "plan_exhaustive",
    "pagerank_scores",
    "BOMP_DENSE_LIMIT",
]

BOMP_DENSE_LIMIT = 5000
EXHAUSTIVE_MAX_N = 12
EXHAUSTIVE_MAX_K = 3


@dataclass
class Plan:
    actions: list
    method: str
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.actions)


def _feasible(inst: Instance) -> np.ndarray:
    if inst.budget > inst.n:
        raise InvalidBudget(f"budget {inst.budget} exceeds {inst.n} nodes")
    return np.flatnonzero(inst.graph.active)


def _rank(scores: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Candidates by descending score, ties (to 1e-12) by ascending id."""
    s = np.round(scores[candidates], 12)
    order = np.lexsort((candidates, -s))
    return candidates[order]


def plan_random(inst: Instance, rng) -> Plan:
    cand = _feasible(inst)
    k = min(inst.budget, len(cand))
    picks = rng.choice(cand, size=k, replace=False) if k else np.array([], int)
    return Plan([int(v) for v in picks], "random")


def pagerank_scores(inst: Instance, damping: float = 0.85, tol: float = 1e-10,
                    max_iter: int = 200) -> np.ndarray:
    g = inst.graph
    act = g.active
    n_act = int(act.sum())
    a = g.adjacency
    out = g.weighted_degrees
    p = np.where(act, 1.0 / n_act, 0.0)
    dangling = act & (out == 0)
    inv_out = np.divide(1.0, out, out=np.zeros_like(out), where=out > 0)
    for _ in range(max_iter):
        spread = a @ (p * inv_out)
        leak = p[dangling].sum()
        p_new = np.where(act, damping * (spread + leak / n_act) + (1 - damping) / n_act, 0.0)
        done = np.abs(p_new - p).sum() < tol
        p = p_new
        if done:
            break
    return p


def plan_pagerank(inst: Instance) -> Plan:
    cand = _feasible(inst)
    scores = pagerank_scores(inst)
    ranked = _rank(scores, cand)[: inst.budget]
    return Plan([int(v) for v in ranked], "pagerank", {"scores": scores[ranked].tolist()})


def plan_extreme_expressed(inst: Instance, z0) -> Plan:
    """Largest ``|z0|`` first."""
    cand = _feasible(inst)
    scores = np.abs(np.asarray(z0, float))
    ranked = _rank(scores, cand)[: inst.budget]
    return Plan([int(v) for v in ranked], "extreme-expressed", {"scores": scores[ranked].tolist()})


def plan_extreme_neighbours(inst: Instance, z0) -> Plan:
    """Largest neighbour mass ``sum_{u in N(v)} |z0_u|`` first."""
    cand = _feasible(inst)
    scores = inst.graph.structure @ np.abs(np.asarray(z0, float))
    ranked = _rank(scores, cand)[: inst.budget]
    return Plan([int(v) for v in ranked], "extreme-neighbours", {"scores": scores[ranked].tolist()})


class _Influence:
    """Access to the influence operator ``Q W`` with ``Q = (L + W)^-1``."""

    def __init__(self, inst: Instance, dense_limit: int):
        g = inst.graph
        self.w = g.self_weights
        mat = system_matrix(g)
        self.dense = g.n <= dense_limit
        if self.dense:
            self.q = sla.cho_solve(sla.cho_factor(mat.toarray(), lower=True), np.eye(g.n))
            self.col_sq = np.einsum("ij,ij->j", self.q, self.q)
        else:
            self.lu = splu(mat.tocsc())
            n = g.n
            self.col_sq = np.empty(n)
            block = 256
            for start in range(0, n, block):
                stop = min(start + block, n)
                rhs = np.zeros((n, stop - start))
                rhs[np.arange(start, stop), np.arange(stop - start)] = 1.0
                cols = self.lu.solve(rhs)
                self.col_sq[start:stop] = np.einsum("ij,ij->j", cols, cols)
        self.col_sq *= self.w ** 2

    def apply(self, r: np.ndarray) -> np.ndarray:
        """``W Q r``, i.e. the inner products of ``r`` with every column."""
        qr = self.q @ r if self.dense else self.lu.solve(r)
        return self.w * qr

    def column(self, i: int) -> np.ndarray:
        if self.dense:
            return self.q[:, i] * self.w[i]
        e = np.zeros(len(self.w))
        e[i] = 1.0
        return self.lu.solve(e) * self.w[i]


def plan_bomp(inst: Instance, z0, dense_limit: int = BOMP_DENSE_LIMIT) -> Plan:
    """Matching pursuit on the settled-opinion residual.

    Zeroing ``s_i`` moves ``z`` by exactly ``-s_i q_i`` under linear dynamics,
    so each step picks the node whose column most reduces ``||r||^2`` (per
    unit cost for cost-weighted variants) and subtracts it from ``r``.
    """
    if not inst.variant.mi_family:
        raise UnsupportedVariant(f"BOMP needs a linear internal-opinion variant, got {inst.variant}")
    cand = _feasible(inst)
    k = min(inst.budget, len(cand))
    if k == 0:
        return Plan([], "bomp")
    op = _Influence(inst, dense_limit)
    s = inst.s0
    r = np.asarray(z0, float).copy()
    available = np.zeros(inst.n, bool)
    available[cand] = True
    per_cost = inst.variant.cost_weighted
    actions, gains = [], []
    for _ in range(k):
        ip = op.apply(r)
        gain = 2.0 * s * ip - s * s * op.col_sq  # ||r||^2 - ||r - s_i q_i||^2
        score = gain / inst.costs if per_cost else gain
        idx = np.flatnonzero(available)
        best = int(_rank(score, idx)[0])
        actions.append(best)
        gains.append(float(gain[best]))
        available[best] = False
        r = r - s[best] * op.column(best)
    return Plan(actions, "bomp", {"gains": gains, "residual": r})


def _set_polarizations(inst: Instance, k: int, settle_fn):
    """Normalized polarization for every candidate set of size <= k."""
    n = inst.n
    cand = [int(v) for v in np.flatnonzero(inst.graph.active)]
    table = {}
    for size in range(k + 1):
        for subset in itertools.combinations(cand, size):
            z = settle_fn(inst, subset)
            table[subset] = polarization_index(z, n) / n
    return cand, table


def _settle_set(inst: Instance, subset) -> np.ndarray:
    st = OpinionState(inst.s0)
    st.removed |= ~inst.graph.active
    idx = list(subset)
    action = inst.variant.action
    if action == "internal":
        st.s[idx] = 0.0
    elif action == "expressed":
        st.fixed_zero[idx] = True
    else:
        st.removed[idx] = True
    return settle(st, inst.graph, inst.variant, inst.bias)


def plan_exhaustive(inst: Instance, settle_fn=None) -> Plan:
    """ANP-optimal ordered plan by full enumeration (tiny instances only).

    Settled states depend only on the prefix set, so each subset is settled
    once and orderings are scored from the cached table.
    """
    k = inst.budget
    if k < 1:
        raise Refused("exhaustive search needs k >= 1")
    if inst.n > EXHAUSTIVE_MAX_N or k > EXHAUSTIVE_MAX_K:
        raise Refused(
            f"exhaustive search limited to n <= {EXHAUSTIVE_MAX_N}, k <= {EXHAUSTIVE_MAX_K}"
            f" (got n={inst.n}, k={k})"
        )
    _feasible(inst)
    cand, table = _set_polarizations(inst, k, settle_fn or _settle_set)
    k = min(k, len(cand))
    base = table[()]
    best, best_val = None, np.inf
    for seq in itertools.permutations(cand, k):
        total = base + sum(table[tuple(sorted(seq[: t + 1]))] for t in range(k))
        val = total / k
        if val < best_val - 1e-15:
            best, best_val = seq, val
    return Plan(list(best), "exhaustive", {"anp": best_val})
