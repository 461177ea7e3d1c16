"""Weighted undirected graphs with self-weights, plus edge-list I/O.

A :class:`Graph` is immutable.  Node removal returns a new view that shares
the edge arrays and only flips an ``active`` mask, so node ids (and therefore
opinion vectors and intervention marks) stay aligned along a trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import IngestError, InvalidAction, InvalidGraph

__all__ = [
    "Graph",
    "build_graph",
    "laplacian",
    "is_connected",
    "remove_node",
    "read_edge_list",
    "write_edge_list",
]


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    self_weights: np.ndarray
    active: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.active is None:
            object.__setattr__(self, "active", _frozen(np.ones(self.n, bool), bool))

    @property
    def m(self) -> int:
        """Number of edges in the original (unmasked) graph."""
        return len(self.src)

    @cached_property
    def edge_active(self) -> np.ndarray:
        return self.active[self.src] & self.active[self.dst]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weighted adjacency over active edges (CSR, sorted indices)."""
        keep = self.edge_active
        u, v, w = self.src[keep], self.dst[keep], self.weight[keep]
        a = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(self.n, self.n),
        ).tocsr()
        a.sort_indices()
        return a

    @cached_property
    def structure(self) -> sp.csr_matrix:
        """Unweighted 0/1 adjacency over active edges."""
        a = self.adjacency.copy()
        a.data = np.ones_like(a.data)
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    @cached_property
    def weighted_degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def neighbors(self, v: int) -> np.ndarray:
        """Active neighbours of ``v`` in ascending id order."""
        a = self.adjacency
        return a.indices[a.indptr[v]:a.indptr[v + 1]]

    def edges(self):
        """Iterate active edges as ``(u, v, w)`` with ``u < v``."""
        keep = self.edge_active
        for u, v, w in zip(self.src[keep], self.dst[keep], self.weight[keep]):
            yield int(u), int(v), float(w)

    @property
    def n_active(self) -> int:
        return int(self.active.sum())


def build_graph(n, edges, self_weights=None) -> Graph:
    """Build a validated graph on nodes ``0..n-1``.

    ``edges`` holds ``(u, v)`` or ``(u, v, w)`` tuples; missing weights are 1.
    Self-loops, out-of-range ids, negative weights and duplicate undirected
    edges raise :class:`InvalidGraph`.
    """
    if n < 1:
        raise InvalidGraph(f"graph needs at least one node, got n={n}")
    src, dst, wts = [], [], []
    seen = set()
    for e in edges:
        if len(e) == 2:
            u, v = e
            w = 1.0
        else:
            u, v, w = e
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidGraph(f"edge ({u}, {v}) has an id outside 0..{n - 1}")
        if u == v:
            raise InvalidGraph(f"self-loop on node {u}")
        if not w >= 0:
            raise InvalidGraph(f"edge ({u}, {v}) has negative weight {w}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise InvalidGraph(f"duplicate edge {key}")
        seen.add(key)
        src.append(key[0])
        dst.append(key[1])
        wts.append(w)
    if self_weights is None:
        sw = np.ones(n)
    else:
        sw = np.asarray(self_weights, dtype=float)
        if sw.shape != (n,):
            raise InvalidGraph(f"self_weights must have shape ({n},), got {sw.shape}")
        if not np.all(sw > 0):
            raise InvalidGraph("self weights must be strictly positive")
    return Graph(
        n=int(n),
        src=_frozen(src, np.int64),
        dst=_frozen(dst, np.int64),
        weight=_frozen(wts, float),
        self_weights=_frozen(sw, float),
    )


def _from_arrays(n, src, dst, weight=None, self_weights=None) -> Graph:
    """Fast constructor for generated graphs already known to be valid."""
    src = np.asarray(src, np.int64)
    dst = np.asarray(dst, np.int64)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    if weight is None:
        weight = np.ones(len(lo))
    if self_weights is None:
        self_weights = np.ones(n)
    return Graph(
        n=int(n),
        src=_frozen(lo, np.int64),
        dst=_frozen(hi, np.int64),
        weight=_frozen(weight, float),
        self_weights=_frozen(self_weights, float),
    )


def laplacian(g: Graph, sparse: bool = False):
    """Weighted Laplacian ``D - A`` over active edges.

    Rows of removed nodes are zero.  Returns a dense array unless ``sparse``.
    """
    a = g.adjacency
    lap = sp.diags(g.weighted_degrees) - a
    lap = lap.tocsr()
    return lap if sparse else lap.toarray()


def is_connected(g: Graph) -> bool:
    """True iff the active nodes form a single connected component."""
    idx = np.flatnonzero(g.active)
    if len(idx) <= 1:
        return True
    sub = g.adjacency[idx][:, idx]
    ncomp, _ = connected_components(sub, directed=False)
    return ncomp == 1


def remove_node(g: Graph, v: int) -> Graph:
    """Return a view of ``g`` with node ``v`` and its incident edges inactive."""
    if not 0 <= v < g.n:
        raise InvalidAction(f"node {v} does not exist")
    if not g.active[v]:
        raise InvalidAction(f"node {v} already removed")
    active = g.active.copy()
    active[v] = False
    return Graph(
        n=g.n,
        src=g.src,
        dst=g.dst,
        weight=g.weight,
        self_weights=g.self_weights,
        active=_frozen(active, bool),
    )


def _sort_key(label):
    try:
        return (0, int(label), label)
    except ValueError:
        return (1, 0, label)


def read_edge_list(path, extra_ids=()):
    """Parse an edge-list file into ``(n, edges, id_map)``.

    Lines are ``u v [w]``; ``#`` starts a comment.  On-disk ids are arbitrary
    tokens, remapped densely in (numeric-aware) sorted order.  ``id_map`` maps
    the original token to its dense id.  ``extra_ids`` adds nodes that may
    have no edges.
    """
    raw = []
    path = Path(path)
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise IngestError(f"{path}:{lineno}: expected 'u v [w]', got {line!r}")
            try:
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise IngestError(f"{path}:{lineno}: bad weight {parts[2]!r}") from None
            raw.append((parts[0], parts[1], w, lineno))
    labels = {a for a, _, _, _ in raw} | {b for _, b, _, _ in raw} | set(extra_ids)
    ordered = sorted(labels, key=_sort_key)
    id_map = {lab: i for i, lab in enumerate(ordered)}
    edges = []
    for a, b, w, lineno in raw:
        if a == b:
            raise IngestError(f"{path}:{lineno}: self-loop on node {a}")
        edges.append((id_map[a], id_map[b], w))
    return len(ordered), edges, id_map


def write_edge_list(g: Graph, path, labels=None):
    """Write active edges as ``u v w`` lines; ``labels`` maps dense id -> token."""
    with Path(path).open("w") as fh:
        fh.write(f"# nodes {g.n}\n")
        for u, v, w in g.edges():
            a = labels[u] if labels is not None else u
            b = labels[v] if labels is not None else v
            fh.write(f"{a} {b} {float(w)!r}\n")
