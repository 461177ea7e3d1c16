"""Q-value decoder, replay with n-step returns, training loops and deployment.

Two training regimes share one network:

* ``rl``: epsilon-greedy rollouts, n-step returns bootstrapped from a
  periodically synced target network;
* ``greedy``: uniform-random rollouts regressed onto the immediate reward.

Deployment is feed-forward: the decision state is advanced with
:func:`~pacifier.environment.apply_action` only, never by settling opinions.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass

import numpy as np

from . import neural as nn
from .baselines import Plan
from .encoder import (
    N_AUX_FEATURES,
    Encoding,
    Snapshot,
    encode_batch,
    init_encoder_params,
    snapshot,
)
from .environment import DecisionState, Instance, ModerationEnv, apply_action, evaluate_plan
from .errors import EpisodeDone, InvalidBudget, InvalidInput, TrainingDiverged
from .synthgen import GenConfig, generate_instance

__all__ = [
    "ModelConfig",
    "AgentConfig",
    "QNetwork",
    "q_values",
    "select_action",
    "Transition",
    "ReplayBuffer",
    "push_nstep",
    "td_targets",
    "train",
    "deploy",
    "MASK_PENALTY",
]

log = logging.getLogger(__name__)

MASK_PENALTY = 1e9


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 64
    K: int = 3
    hidden: tuple = (64, 32)
    interaction: str = "literal"  # literal: (g.w) h_v ; elementwise: h_v * g * w

    def __post_init__(self):
        if self.interaction not in ("literal", "elementwise"):
            raise InvalidInput(f"unknown interaction {self.interaction!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


@dataclass(frozen=True)
class AgentConfig:
    variant: str = "rl"  # rl | greedy
    task: str = "mi-cost"
    episodes: int = 2000
    gamma: float = 0.99
    n_step: int = 5
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_episodes: int | None = None  # default: 70% of episodes
    lr: float = 1e-4
    batch: int = 64
    capacity: int = 50_000
    target_sync_every: int = 1000
    train_every: int = 1
    budget_frac_min: float = 0.1
    budget_frac_max: float = 0.3
    validate_every: int = 0  # 0 disables validation
    validation_count: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.variant not in ("rl", "greedy"):
            raise InvalidInput(f"agent variant must be 'rl' or 'greedy', got {self.variant!r}")
        if not 0 < self.gamma <= 1:
            raise InvalidInput("gamma must lie in (0, 1]")
        if self.n_step < 1:
            raise InvalidInput("n_step must be >= 1")
        if not 0 <= self.eps_end <= self.eps_start <= 1:
            raise InvalidInput("need 0 <= eps_end <= eps_start <= 1")
        if not 0 < self.budget_frac_min <= self.budget_frac_max <= 1:
            raise InvalidInput("budget fractions must satisfy 0 < min <= max <= 1")

    def epsilon(self, episode: int) -> float:
        if self.variant == "greedy":
            return 1.0
        decay = self.eps_decay_episodes or max(1, int(0.7 * self.episodes))
        frac = min(1.0, episode / decay)
        return self.eps_start + frac * (self.eps_end - self.eps_start)


class QNetwork:
    """Encoder + decoder parameters and the forward passes over them."""

    def __init__(self, cfg: ModelConfig = ModelConfig(), rng=None, store: nn.ParamStore | None = None,
                 meta: dict | None = None):
        self.cfg = cfg
        self.meta = dict(meta or {})
        if store is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            store = nn.ParamStore()
            d = cfg.embed_dim
            init_encoder_params(store, d, rng)
            store.glorot("w", (d, 1), rng) if cfg.interaction == "literal" else store.glorot("w", (d,), rng)
            width = d + N_AUX_FEATURES
            for i, h in enumerate(cfg.hidden):
                store.glorot(f"mlp{i}_W", (width, h), rng)
                store.zeros(f"mlp{i}_b", (h,))
                width = h
            store.glorot("out_W", (width, 1), rng)
            store.zeros("out_b", (1,))
        self.store = store

    def copy(self) -> "QNetwork":
        return QNetwork(self.cfg, store=self.store.copy(), meta=self.meta)

    def encode(self, snaps) -> Encoding:
        return encode_batch(snaps, self.store, self.cfg.K)

    def decode(self, enc: Encoding, rows=None) -> nn.Var:
        """Unmasked Q for the given stacked node rows (all rows if ``None``)."""
        p = self.store
        rows = np.arange(len(enc.seg)) if rows is None else np.asarray(rows)
        seg = enc.seg[rows]
        h = enc.h if len(rows) == len(enc.seg) and np.array_equal(rows, np.arange(len(rows))) \
            else nn.gather_rows(enc.h, rows)
        if self.cfg.interaction == "literal":
            gw = nn.matmul(enc.g, p["w"])
            z = nn.scale_rows(h, nn.gather_rows(gw, seg))
        else:
            z = nn.scale_cols(nn.mul(h, nn.gather_rows(enc.g, seg)), p["w"])
        x = nn.concat([z, nn.const(enc.aux[seg])])
        for i in range(len(self.cfg.hidden)):
            x = nn.relu(nn.add_bias(nn.matmul(x, p[f"mlp{i}_W"]), p[f"mlp{i}_b"]))
        return nn.add_bias(nn.matmul(x, p["out_W"]), p["out_b"])

    def q_values(self, snaps) -> list:
        """Masked Q-values for every node of every snapshot (no recording)."""
        with nn.no_grad():
            enc = self.encode(snaps)
            q = q_values(enc, self)
        return [q[enc.offsets[i]:enc.offsets[i + 1]] for i in range(len(snaps))]

    def q_selected(self, snaps, actions) -> nn.Var:
        enc = self.encode(snaps)
        rows = enc.offsets[:-1] + np.asarray(actions)
        return self.decode(enc, rows)

    def save(self, path, extra=None):
        meta = {"model": asdict(self.cfg), **self.meta, **(extra or {})}
        self.store.save(path, meta)

    @classmethod
    def load(cls, path) -> "QNetwork":
        store, meta = nn.ParamStore.load(path)
        cfg = ModelConfig(**meta.pop("model"))
        return cls(cfg, store=store, meta=meta)


def q_values(enc: Encoding, net: QNetwork) -> np.ndarray:
    """Q for all stacked nodes with infeasible ones pushed down by ``MASK_PENALTY``."""
    q = net.decode(enc).value[:, 0]
    return q - MASK_PENALTY * (~enc.mask)


def select_action(q, mask, eps: float, rng) -> int:
    """Epsilon-greedy over feasible nodes; greedy ties go to the lowest id."""
    feasible = np.flatnonzero(mask)
    if len(feasible) == 0:
        raise EpisodeDone("no feasible action left")
    if len(feasible) == 1:
        return int(feasible[0])
    if eps > 0 and rng.random() < eps:
        return int(rng.choice(feasible))
    return int(feasible[np.argmax(np.asarray(q)[feasible])])


@dataclass(frozen=True)
class Transition:
    state: Snapshot
    action: int
    ret: float  # (n-step) discounted return
    terminal: bool
    next_state: Snapshot | None = None
    steps: int = 1


class ReplayBuffer:
    def __init__(self, capacity: int, rng):
        self.capacity = int(capacity)
        self.rng = rng
        self.items: list[Transition] = []
        self.head = 0

    def __len__(self):
        return len(self.items)

    def push(self, tr: Transition):
        if len(self.items) < self.capacity:
            self.items.append(tr)
        else:
            self.items[self.head] = tr
        self.head = (self.head + 1) % self.capacity

    def sample(self, batch: int) -> list:
        idx = self.rng.integers(0, len(self.items), size=batch)
        return [self.items[i] for i in idx]


def push_nstep(snaps, actions, rewards, gamma: float, n: int, buffer=None, bootstrap=True) -> list:
    """Turn one finished episode into n-step transitions.

    ``snaps`` holds the T+1 states s_0..s_T.  Returns are truncated at the
    episode end, where the entry is terminal and carries no bootstrap.
    """
    T = len(actions)
    if len(snaps) != T + 1 or len(rewards) != T:
        raise InvalidInput("episode needs T+1 states, T actions and T rewards")
    out = []
    for t in range(T):
        h = min(n, T - t)
        ret = sum(gamma ** i * rewards[t + i] for i in range(h))
        terminal = (not bootstrap) or t + n >= T
        tr = Transition(
            state=snaps[t],
            action=int(actions[t]),
            ret=float(ret),
            terminal=terminal,
            next_state=None if terminal else snaps[t + n],
            steps=h,
        )
        out.append(tr)
        if buffer is not None:
            buffer.push(tr)
    return out


def td_targets(batch, target: QNetwork | None, gamma: float) -> np.ndarray:
    """``y = R + gamma^n max_v Q_target(s_{t+n}, v)`` (no bootstrap when terminal)."""
    y = np.array([tr.ret for tr in batch], dtype=float)
    boot = [i for i, tr in enumerate(batch) if not tr.terminal]
    if boot and target is not None:
        qs = target.q_values([batch[i].next_state for i in boot])
        for i, q in zip(boot, qs):
            tr = batch[i]
            feasible = tr.next_state.mask
            if feasible.any():
                y[i] += gamma ** tr.steps * float(q[feasible].max())
    return y


def _validation_set(gen: GenConfig, cfg: AgentConfig):
    rng = np.random.default_rng([cfg.seed, 7])
    frac = 0.5 * (cfg.budget_frac_min + cfg.budget_frac_max)
    return [generate_instance(gen, rng, variant=cfg.task, budget=frac, name=f"val_{i:03d}")
            for i in range(cfg.validation_count)]


LOG_FIELDS = ["episode", "epsilon", "n", "k", "episode_return", "mean_loss", "grad_steps", "val_anp"]


def train(env_factory=ModerationEnv, cfg: AgentConfig = AgentConfig(), gen: GenConfig = GenConfig(),
          model: ModelConfig = ModelConfig(), log_path=None, progress=None):
    """Train a network; returns ``(net, log_rows)``.

    ``progress`` is an optional callable invoked with each log row.
    """
    rng = np.random.default_rng([cfg.seed, 0])
    gen_rng = np.random.default_rng([cfg.seed, 1])
    net = QNetwork(model, rng=np.random.default_rng([cfg.seed, 2]),
                   meta={"agent": cfg.variant, "task": cfg.task})
    target = net.copy() if cfg.variant == "rl" else None
    buffer = ReplayBuffer(cfg.capacity, np.random.default_rng([cfg.seed, 3]))
    val = _validation_set(gen, cfg) if cfg.validate_every else []
    rl = cfg.variant == "rl"
    rows = []
    grad_steps = 0
    env_steps = 0

    for ep in range(cfg.episodes):
        eps = cfg.epsilon(ep)
        frac = float(rng.uniform(cfg.budget_frac_min, cfg.budget_frac_max))
        inst = generate_instance(gen, gen_rng, variant=cfg.task, budget=frac)
        env = env_factory(inst)
        env.reset()
        snaps = [snapshot(env.decision, inst)]
        actions, rewards, losses = [], [], []
        while not env.done:
            snap = snaps[-1]
            if eps >= 1.0 or rng.random() < eps:
                a = select_action(None, snap.mask, 1.0, rng)
            else:
                a = select_action(net.q_values([snap])[0], snap.mask, 0.0, rng)
            res = env.step(a)
            actions.append(a)
            rewards.append(res.reward)
            snaps.append(snapshot(env.decision, inst))
            env_steps += 1
            if len(buffer) >= cfg.batch and env_steps % cfg.train_every == 0:
                batch = buffer.sample(cfg.batch)
                y = td_targets(batch, target, cfg.gamma) if rl else np.array([t.ret for t in batch])
                last_good = net.store.copy()
                q = net.q_selected([t.state for t in batch], [t.action for t in batch])
                loss = nn.mean(nn.square(nn.sub(q, nn.const(y[:, None]))))
                lval = float(loss.value)
                if not np.isfinite(lval):
                    raise TrainingDiverged(f"non-finite loss at episode {ep}",
                                           checkpoint=QNetwork(model, store=last_good, meta=net.meta))
                nn.backward(loss)
                nn.adam_step(net.store, cfg.lr)
                grad_steps += 1
                losses.append(lval)
                if rl and grad_steps % cfg.target_sync_every == 0:
                    target.store.load_values(net.store)
        push_nstep(snaps, actions, rewards, cfg.gamma, cfg.n_step if rl else 1, buffer, bootstrap=rl)

        row = {
            "episode": ep,
            "epsilon": eps,
            "n": inst.n,
            "k": inst.budget,
            "episode_return": float(sum(rewards)),
            "mean_loss": float(np.mean(losses)) if losses else "",
            "grad_steps": grad_steps,
            "val_anp": "",
        }
        if val and ((ep + 1) % cfg.validate_every == 0 or ep == cfg.episodes - 1):
            row["val_anp"] = float(np.mean([evaluate_plan(v, deploy(v, net)).anp for v in val]))
        rows.append(row)
        if progress is not None:
            progress(row)
    if log_path is not None:
        write_log(rows, log_path)
    return net, rows


def write_log(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LOG_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def deploy(inst: Instance, net: QNetwork, variant=None) -> Plan:
    """Greedy feed-forward plan: encode, score, pick the best feasible node, repeat."""
    if inst.budget > inst.n:
        raise InvalidBudget(f"budget {inst.budget} exceeds {inst.n} nodes")
    ds = DecisionState.initial(inst)
    actions = []
    for _ in range(inst.budget):
        if not ds.mask.any():
            break
        q = net.q_values([snapshot(ds, inst)])[0]
        a = select_action(q, ds.mask, 0.0, None)
        apply_action(ds, a, inst.variant)
        actions.append(a)
    name = variant or f"pacifier-{net.meta.get('agent', 'rl')}"
    return Plan(actions, name)
