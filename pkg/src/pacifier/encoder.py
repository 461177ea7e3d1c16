"""State encoding: marked node features, polarization-aware auxiliary
features, and a GraphSAGE-style message-passing stack with sum pooling.

Node features are ``[s_t, s_0, mark_t, c]``.  The mark is what separates two
states that share topology and current attributes but differ in history.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import neural as nn
from .environment import DecisionState, Instance
from .errors import ShapeError
from .graph import Graph

__all__ = [
    "NodeFeatures",
    "Snapshot",
    "Encoding",
    "build_node_features",
    "build_aux_features",
    "snapshot",
    "init_encoder_params",
    "encode_batch",
    "encode",
    "N_NODE_FEATURES",
    "N_AUX_FEATURES",
]

N_NODE_FEATURES = 4
N_AUX_FEATURES = 6


@dataclass
class NodeFeatures:
    x: np.ndarray  # (n, 4)
    mask: np.ndarray  # feasible actions

    @property
    def marks(self) -> np.ndarray:
        return self.x[:, 2]


def build_node_features(ds: DecisionState, inst: Instance) -> NodeFeatures:
    marks = (ds.marks | ds.removed).astype(float)
    x = np.stack([ds.s, ds.s0, marks, inst.costs], axis=1)
    return NodeFeatures(x=x, mask=ds.mask.copy())


def _pairs(deg: np.ndarray) -> float:
    return float((deg * (deg - 1)).sum() / 2.0)


def build_aux_features(ds: DecisionState, g: Graph) -> np.ndarray:
    """``[covered nodes, covered edges, cross-sign active edges, two-hop all/+/-]``.

    Ratios use the original ``n`` and ``m``; two-hop counts are taken on the
    subgraph induced by the uncovered nodes.
    """
    n, m = g.n, g.m
    covered = ds.marks | ds.removed
    u = np.zeros(N_AUX_FEATURES)
    u[0] = covered.sum() / n
    if m == 0:
        return u
    src, dst = g.src, g.dst
    cov_e = covered[src] | covered[dst]
    live = ~cov_e
    s = ds.s
    u[1] = cov_e.sum() / m
    u[2] = np.count_nonzero(live & (s[src] * s[dst] < 0)) / m
    pos = s > 0
    n2 = float(n) ** 2
    for j, keep in ((3, live), (4, live & pos[src] & pos[dst]), (5, live & ~pos[src] & ~pos[dst])):
        deg = np.bincount(src[keep], minlength=n) + np.bincount(dst[keep], minlength=n)
        u[j] = _pairs(deg) / n2
    return u


@dataclass
class Snapshot:
    """Everything the policy sees at one decision step."""

    adj: sp.csr_matrix  # 0/1 adjacency over participating nodes
    x: np.ndarray
    aux: np.ndarray
    mask: np.ndarray
    active: np.ndarray  # nodes that send/receive messages and enter the pool

    @property
    def n(self) -> int:
        return self.x.shape[0]


def snapshot(ds: DecisionState, inst: Instance) -> Snapshot:
    g = inst.graph
    feats = build_node_features(ds, inst)
    aux = build_aux_features(ds, g)
    active = g.active & ~ds.removed
    adj = g.structure
    if not active.all():
        d = sp.diags(active.astype(float))
        adj = (d @ adj @ d).tocsr()
        adj.eliminate_zeros()
    return Snapshot(adj=adj, x=feats.x, aux=aux, mask=feats.mask, active=active)


@dataclass
class Encoding:
    h: nn.Var  # (N, d) node embeddings, all snapshots stacked
    g: nn.Var  # (B, d) graph embeddings
    aux: np.ndarray  # (B, 6)
    mask: np.ndarray  # (N,)
    seg: np.ndarray  # (N,) snapshot index of each node
    offsets: np.ndarray  # (B + 1,)


def init_encoder_params(store: nn.ParamStore, d: int, rng):
    store.glorot("W0", (N_NODE_FEATURES, d), rng)
    store.glorot("W_nbr", (d, d), rng)
    store.glorot("W_self", (d, d), rng)
    store.glorot("W_sage", (2 * d, d), rng)


def _block_diag_csr(mats, offsets) -> sp.csr_matrix:
    nnz = np.concatenate([[0], np.cumsum([m.nnz for m in mats])])
    indptr = np.concatenate([[0]] + [m.indptr[1:] + nnz[i] for i, m in enumerate(mats)])
    indices = np.concatenate([m.indices + offsets[i] for i, m in enumerate(mats)])
    data = np.concatenate([m.data for m in mats])
    total = int(offsets[-1])
    return sp.csr_matrix((data, indices, indptr), shape=(total, total))


def _stack(snaps):
    sizes = np.array([s.n for s in snaps])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    seg = np.repeat(np.arange(len(snaps)), sizes)
    adj = snaps[0].adj if len(snaps) == 1 else _block_diag_csr([s.adj for s in snaps], offsets)
    x = np.concatenate([s.x for s in snaps])
    active = np.concatenate([s.active for s in snaps])
    aux = np.stack([s.aux for s in snaps])
    mask = np.concatenate([s.mask for s in snaps])
    return adj, x, active, aux, mask, seg, offsets


def encode_batch(snaps, store: nn.ParamStore, K: int = 3) -> Encoding:
    """Encode a batch of snapshots as one block-diagonal graph."""
    if K < 1:
        raise ValueError("need at least one message-passing round")
    adj, x, active, aux, mask, seg, offsets = _stack(snaps)
    if x.shape[1] != store["W0"].shape[0]:
        raise ShapeError(f"features have width {x.shape[1]}, W0 expects {store['W0'].shape[0]}")
    gate = None if active.all() else nn.const(active.astype(float)[:, None])

    def masked(h):
        return h if gate is None else nn.scale_rows(h, gate)

    h = masked(nn.l2_normalize_rows(nn.relu(nn.matmul(nn.const(x), store["W0"]))))
    # concat(a Wn, h Ws) Wsage == a (Wn Wsage_top) + h (Ws Wsage_bottom); folding
    # the d x d products first halves the per-node work
    d = store["W_nbr"].shape[1]
    w_sage = store["W_sage"]
    top = nn.gather_rows(w_sage, np.arange(d))
    bottom = nn.gather_rows(w_sage, np.arange(d, 2 * d))
    m_nbr = nn.matmul(store["W_nbr"], top)
    m_self = nn.matmul(store["W_self"], bottom)
    for _ in range(K):
        a = nn.spmm(adj, h)
        pre = nn.add(nn.matmul(a, m_nbr), nn.matmul(h, m_self))
        h = masked(nn.l2_normalize_rows(nn.relu(pre)))
    g = nn.segment_sum(h, seg, len(snaps))
    return Encoding(h=h, g=g, aux=aux, mask=mask, seg=seg, offsets=offsets)


def encode(features: NodeFeatures, aux, graph: Graph, store: nn.ParamStore, K: int = 3,
           active=None) -> Encoding:
    """Single-state convenience wrapper around :func:`encode_batch`."""
    active = graph.active if active is None else active
    adj = graph.structure
    if not active.all():
        d = sp.diags(active.astype(float))
        adj = (d @ adj @ d).tocsr()
    snap = Snapshot(adj=adj, x=features.x, aux=np.asarray(aux, float), mask=features.mask,
                    active=active)
    return encode_batch([snap], store, K)
