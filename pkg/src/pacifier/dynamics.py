"""Settled expressed opinions under FJ, grounded (ME), biased-assimilation and
node-removal dynamics.

All solvers work on the active part of a :class:`~pacifier.graph.Graph`;
inactive (removed) nodes get ``z = 0`` and exert no influence.  With
self-weights ``W = diag(w_ii)`` the steady state solves ``(L + W) z = W s``,
which is ``z = (L + I)^{-1} s`` for the default unit self-weights.
"""
from __future__ import annotations

import contextlib
import warnings
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import cg, spsolve

from .errors import InvalidInput, NonConverged, NonConvergedWarning, NumericalFailure
from .graph import Graph
from .variants import get_variant

__all__ = [
    "OpinionState",
    "BiasConfig",
    "system_matrix",
    "solve_fj_direct",
    "solve_fj_iterative",
    "solve_me_constrained",
    "solve_bias_assimilation",
    "settle",
    "count_settles",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 2000
RESIDUAL_TOL = 1e-10


@dataclass
class OpinionState:
    s: np.ndarray
    fixed_zero: np.ndarray = None
    removed: np.ndarray = None
    z: np.ndarray = None
    dirty: bool = True

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float).copy()
        n = len(self.s)
        if self.fixed_zero is None:
            self.fixed_zero = np.zeros(n, bool)
        if self.removed is None:
            self.removed = np.zeros(n, bool)
        if np.any(self.fixed_zero & self.removed):
            raise InvalidInput("a node cannot be both pinned and removed")


@dataclass(frozen=True)
class BiasConfig:
    b: float = 1.0
    max_iters: int = 10_000
    tol: float = 1e-10

    def __post_init__(self):
        if self.b < 0 or self.max_iters < 1 or self.tol <= 0:
            raise InvalidInput(f"invalid BiasConfig {self}")


class _SettleCounter:
    def __init__(self):
        self.calls = 0


_counters: list[_SettleCounter] = []


@contextlib.contextmanager
def count_settles():
    """Count :func:`settle` calls made inside the ``with`` block."""
    c = _SettleCounter()
    _counters.append(c)
    try:
        yield c
    finally:
        _counters.remove(c)


# Cholesky factors keyed by graph view; graphs are immutable so this is safe.
_factor_cache: "weakref.WeakKeyDictionary[Graph, tuple]" = weakref.WeakKeyDictionary()


def _check(g: Graph, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (g.n,):
        raise InvalidInput(f"opinion vector has shape {s.shape}, graph has {g.n} nodes")
    return s


def system_matrix(g: Graph) -> sp.csr_matrix:
    """``L + W`` over the active nodes (inactive rows/cols are identity)."""
    diag = g.weighted_degrees + np.where(g.active, g.self_weights, 1.0)
    return (sp.diags(diag) - g.adjacency).tocsr()


def _solve_spd(a: sp.csr_matrix, b: np.ndarray, dense_limit: int) -> np.ndarray:
    n = a.shape[0]
    if n == 0:
        return np.zeros(0)
    if n <= dense_limit:
        c = sla.cho_factor(a.toarray(), lower=True, check_finite=False)
        return sla.cho_solve(c, b, check_finite=False)
    diag = a.diagonal()
    precond = sp.diags(1.0 / diag)
    x, info = cg(a, b, rtol=0.0, atol=RESIDUAL_TOL * 0.1, maxiter=20 * n, M=precond)
    if info != 0 or np.max(np.abs(a @ x - b)) >= RESIDUAL_TOL:
        x = spsolve(a.tocsc(), b)
    return x


def solve_fj_direct(g: Graph, s, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Steady-state expressed opinions ``z`` with ``(L + W) z = W s``."""
    s = _check(g, s)
    act = g.active
    z = np.zeros(g.n)
    if not act.any():
        return z
    rhs = g.self_weights * s
    if act.all():
        if g.n <= dense_limit:
            c = _factor_cache.get(g)
            if c is None:
                c = sla.cho_factor(system_matrix(g).toarray(), lower=True, check_finite=False)
                _factor_cache[g] = c
            return sla.cho_solve(c, rhs, check_finite=False)
        return _solve_spd(system_matrix(g), rhs, dense_limit)
    idx = np.flatnonzero(act)
    a = system_matrix(g)[idx][:, idx]
    z[idx] = _solve_spd(a, rhs[idx], dense_limit)
    return z


def solve_fj_iterative(g: Graph, s, tol: float = 1e-10, max_iters: int = 100_000) -> np.ndarray:
    """Synchronous fixed-point iteration of the FJ averaging rule from ``z = s``."""
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    s = _check(g, s)
    act = g.active
    a = g.adjacency
    w = g.self_weights
    denom = w + g.weighted_degrees
    anchor = np.where(act, w * s, 0.0)
    z = np.where(act, s, 0.0)
    for it in range(1, max_iters + 1):
        z_new = (anchor + a @ z) / denom
        z_new[~act] = 0.0
        if np.max(np.abs(z_new - z), initial=0.0) < tol:
            return z_new
        z = z_new
    raise NonConverged(f"FJ iteration did not reach tol={tol} in {max_iters} iterations",
                       last=z, iterations=max_iters)


def solve_me_constrained(g: Graph, s, fixed_zero, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Steady state with ``z_i = 0`` pinned for ``i`` in ``fixed_zero``.

    Free nodes solve the grounded system ``(L + W)_FF z_F = (W s)_F``; edges
    to pinned nodes still count in the degrees but contribute value 0.
    """
    s = _check(g, s)
    pinned = np.zeros(g.n, bool)
    fz = np.asarray(fixed_zero)
    if fz.dtype == bool:
        if fz.shape != (g.n,):
            raise InvalidInput("fixed_zero mask has wrong shape")
        pinned |= fz
    else:
        pinned[fz.astype(int)] = True
    z = np.zeros(g.n)
    free = np.flatnonzero(g.active & ~pinned)
    if len(free) == 0:
        return z
    if not pinned.any():
        return solve_fj_direct(g, s, dense_limit)
    a = system_matrix(g)[free][:, free]
    z[free] = _solve_spd(a, (g.self_weights * s)[free], dense_limit)
    return z


def solve_bias_assimilation(g: Graph, s, cfg: BiasConfig = BiasConfig()) -> np.ndarray:
    """Biased-assimilation dynamics on ``x = (s + 1) / 2``; returns ``2x - 1``.

    Neighbour mass is ``sum_j w_ij x_j`` and ``d_i`` the weighted degree.
    Emits :class:`NonConvergedWarning` and returns the last iterate when
    ``max_iters`` is exhausted.
    """
    s = _check(g, s)
    if np.any(np.abs(s) > 1 + 1e-12):
        raise InvalidInput("biased assimilation needs opinions in [-1, 1]")
    act = g.active
    a = g.adjacency
    d = g.weighted_degrees
    w = g.self_weights
    b = cfg.b
    x = np.clip((s + 1.0) / 2.0, 0.0, 1.0)
    converged = False
    with np.errstate(all="ignore"):
        for _ in range(cfg.max_iters):
            mass = a @ x
            xb = x ** b
            yb = (1.0 - x) ** b
            x_new = (w * x + xb * mass) / (w + xb * mass + yb * (d - mass))
            if not np.all(np.isfinite(x_new)):
                raise NumericalFailure("biased assimilation produced non-finite values")
            x_new = np.clip(x_new, 0.0, 1.0)
            delta = np.max(np.abs(x_new - x), initial=0.0)
            x = x_new
            if delta < cfg.tol:
                converged = True
                break
    if not converged:
        warnings.warn(
            f"biased assimilation did not converge in {cfg.max_iters} iterations",
            NonConvergedWarning,
            stacklevel=2,
        )
    z = 2.0 * x - 1.0
    z[~act] = 0.0
    return z


def _active_view(g: Graph, removed: np.ndarray) -> Graph:
    if not removed.any():
        return g
    active = g.active & ~removed
    active.flags.writeable = False
    return Graph(n=g.n, src=g.src, dst=g.dst, weight=g.weight,
                 self_weights=g.self_weights, active=active)


def settle(state: OpinionState, g: Graph, variant, bias: BiasConfig | None = None) -> np.ndarray:
    """Recompute ``state.z`` for the given task variant and clear ``dirty``."""
    for c in _counters:
        c.calls += 1
    variant = get_variant(variant)
    gv = _active_view(g, state.removed)
    if variant.dynamics == "bias":
        z = solve_bias_assimilation(gv, state.s, bias or BiasConfig())
    elif variant.action == "expressed":
        z = solve_me_constrained(gv, state.s, state.fixed_zero)
    else:
        z = solve_fj_direct(gv, state.s)
    z[state.fixed_zero] = 0.0
    z[state.removed] = 0.0
    state.z = z
    state.dirty = False
    return z
