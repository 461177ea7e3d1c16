"""Moderation MDP: instances, decision state, step/reward, and plan evaluation.

Planners only ever see an :class:`Instance` and the initial settled opinions.
Every intermediate settle happens in :class:`ModerationEnv`, which is shared
by training (rewards) and evaluation (ANP), so the two never drift apart.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import BiasConfig, OpinionState, settle
from .errors import InvalidAction, InvalidInput, InvalidPlan
from .graph import Graph
from .metrics import Trajectory, anp, cost_weighted_anp, polarization_index
from .variants import TaskVariant, get_variant

__all__ = [
    "Instance",
    "DecisionState",
    "StepResult",
    "ModerationEnv",
    "apply_action",
    "initial_opinions",
    "evaluate_plan",
]


@dataclass(frozen=True, eq=False)
class Instance:
    graph: Graph
    s0: np.ndarray
    costs: np.ndarray
    budget: int
    variant: TaskVariant
    bias: BiasConfig | None = None
    camps: np.ndarray | None = None  # +1 / -1 labels, if known
    name: str = ""

    def __post_init__(self):
        n = self.graph.n
        s0 = np.asarray(self.s0, dtype=float)
        costs = np.asarray(self.costs, dtype=float)
        if s0.shape != (n,) or costs.shape != (n,):
            raise InvalidInput("opinion and cost vectors must have one entry per node")
        if np.any(np.abs(s0) > 1.0 + 1e-12):
            raise InvalidInput("internal opinions must lie in [-1, 1]")
        if np.any(costs < 0) or costs.sum() <= 0:
            raise InvalidInput("costs must be non-negative with a positive total")
        if int(self.budget) != self.budget or self.budget < 0:
            raise InvalidInput(f"budget must be a non-negative integer, got {self.budget}")
        s0.flags.writeable = False
        costs.flags.writeable = False
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "budget", int(self.budget))
        object.__setattr__(self, "variant", get_variant(self.variant))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def total_cost(self) -> float:
        return float(self.costs.sum())

    def with_budget(self, k: int) -> "Instance":
        return replace(self, budget=k)

    def with_variant(self, variant) -> "Instance":
        return replace(self, variant=get_variant(variant))


@dataclass
class DecisionState:
    """What a planner may know at step t: attributes, marks and removals only."""

    s: np.ndarray  # current opinion attribute s_t
    s0: np.ndarray
    marks: np.ndarray  # intervened flag; mask is its complement
    removed: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, inst: Instance) -> "DecisionState":
        n = inst.n
        return cls(
            s=inst.s0.copy(),
            s0=inst.s0,
            marks=np.zeros(n, bool),
            removed=~inst.graph.active.copy(),
        )

    @property
    def mask(self) -> np.ndarray:
        return ~self.marks & ~self.removed

    def copy(self) -> "DecisionState":
        return DecisionState(self.s.copy(), self.s0, self.marks.copy(), self.removed.copy(), self.t)


def apply_action(ds: DecisionState, a: int, variant) -> None:
    """Apply the attribute/mark part of an intervention in place (no settling)."""
    variant = get_variant(variant)
    a = int(a)
    if not 0 <= a < len(ds.s) or not ds.mask[a]:
        raise InvalidAction(f"node {a} is not a feasible action")
    ds.marks[a] = True
    if variant.action == "remove":
        ds.removed[a] = True
    else:
        ds.s[a] = 0.0
    ds.t += 1


@dataclass
class StepResult:
    reward: float
    pol: float
    done: bool
    mask: np.ndarray


class ModerationEnv:
    """Single-instance environment.  ``reset`` must be called before ``step``."""

    def __init__(self, inst: Instance, norm_mode: str = "per-node"):
        self.inst = inst
        self.norm_mode = norm_mode
        self.decision = None
        self.opinions = None
        self.pols: list[float] = []
        self.rewards: list[float] = []
        self.actions: list[int] = []

    def reset(self) -> np.ndarray:
        inst = self.inst
        self.decision = DecisionState.initial(inst)
        self.opinions = OpinionState(inst.s0)
        self.opinions.removed |= ~inst.graph.active
        z0 = settle(self.opinions, inst.graph, inst.variant, inst.bias)
        self.pols = [polarization_index(z0, inst.n)]
        self.rewards = []
        self.actions = []
        return z0

    @property
    def z(self) -> np.ndarray:
        return self.opinions.z

    @property
    def t(self) -> int:
        return len(self.actions)

    @property
    def done(self) -> bool:
        return self.t >= self.inst.budget or not self.decision.mask.any()

    def pol_hat(self, pol: float) -> float:
        return pol / self.inst.n if self.norm_mode == "per-node" else pol

    def step(self, a: int) -> StepResult:
        if self.decision is None:
            raise InvalidAction("call reset() before step()")
        if self.done:
            raise InvalidAction("episode is over")
        inst = self.inst
        variant = inst.variant
        apply_action(self.decision, a, variant)
        op = self.opinions
        if variant.action == "internal":
            op.s[a] = 0.0
        elif variant.action == "expressed":
            op.fixed_zero[a] = True
        else:
            op.removed[a] = True
        op.dirty = True
        z = settle(op, inst.graph, variant, inst.bias)
        pol = polarization_index(z, inst.n)
        reward = -(pol / inst.total_cost) * float(inst.costs[a])
        self.pols.append(pol)
        self.rewards.append(reward)
        self.actions.append(int(a))
        return StepResult(reward=reward, pol=pol, done=self.done, mask=self.decision.mask.copy())


def initial_opinions(inst: Instance) -> np.ndarray:
    """Settled opinions of the untouched instance (the planner's ``z0``)."""
    return ModerationEnv(inst).reset()


def evaluate_plan(inst: Instance, plan, norm_mode: str = "per-node") -> Trajectory:
    """Replay ``plan`` through the environment and score it with ANP."""
    actions = [int(a) for a in getattr(plan, "actions", plan)]
    if not actions:
        raise InvalidPlan("ANP needs at least one action (k >= 1)")
    if len(actions) > inst.budget:
        raise InvalidPlan(f"plan has {len(actions)} actions but the budget is {inst.budget}")
    env = ModerationEnv(inst, norm_mode)
    env.reset()
    spent = [0.0]
    for a in actions:
        try:
            env.step(a)
        except InvalidAction as exc:
            raise InvalidPlan(f"infeasible plan: {exc}") from None
        spent.append(spent[-1] + float(inst.costs[a]))
    pol_hat = [env.pol_hat(p) for p in env.pols]
    return Trajectory(
        actions=actions,
        pol_steps=list(env.pols),
        pol_hat_steps=pol_hat,
        anp=anp(pol_hat, len(actions)),
        variant=inst.variant.name,
        costs_spent=spent,
        weighted_anp=cost_weighted_anp(pol_hat, inst.costs[actions], inst.total_cost / inst.n),
    )
