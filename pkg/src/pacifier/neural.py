"""A tiny reverse-mode autodiff over dense numpy arrays.

Only the handful of ops the encoder/decoder need are provided.  Each op
returns a :class:`Var` that remembers its parents and how to push gradients
back to them; :func:`backward` walks that record in reverse topological order.
"""
from __future__ import annotations

import contextlib
import json
from pathlib import Path

import numpy as np

from .errors import ShapeError, StateError

__all__ = [
    "Var", "const", "no_grad", "backward",
    "matmul", "spmm", "add", "sub", "add_bias", "relu", "l2_normalize_rows",
    "concat", "segment_sum", "gather_rows", "scale_rows", "scale_cols", "mul", "square",
    "mean", "total",
    "ParamStore", "adam_step",
]

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable recording (inference only)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Var:
    __slots__ = ("value", "grad", "parents", "backward_fn", "name", "needs_grad")

    def __init__(self, value, parents=(), backward_fn=None, name=None, needs_grad=True):
        self.value = value
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name
        self.needs_grad = needs_grad

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g):
        if not self.needs_grad:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=float, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Var{label}(shape={self.value.shape})"


def const(value) -> Var:
    return Var(np.asarray(value, dtype=float), needs_grad=False)


def _make(value, parents, fn):
    if not _grad_enabled or not any(p.needs_grad for p in parents):
        return Var(value, needs_grad=False)
    return Var(value, parents, fn)


def backward(loss: Var) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``."""
    if loss.value.size != 1:
        raise ShapeError("backward() needs a scalar loss")
    if not loss.parents:
        raise StateError("no recorded computation behind this value; run a forward pass first")
    order, seen = [], set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    # clear stale intermediate grads; leaves keep accumulating
    for node in order:
        if node.parents:
            node.grad = None
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)


def _check_2d(*vs):
    for v in vs:
        if v.value.ndim != 2:
            raise ShapeError(f"expected a 2-d array, got shape {v.value.shape}")


def matmul(x: Var, w: Var) -> Var:
    _check_2d(x, w)
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"matmul shape mismatch {x.shape} @ {w.shape}")
    out = x.value @ w.value

    def fn(g):
        if x.needs_grad:
            x.accumulate(g @ w.value.T)
        if w.needs_grad:
            w.accumulate(x.value.T @ g)

    return _make(out, (x, w), fn)


def spmm(a, x: Var) -> Var:
    """Constant sparse matrix times ``x``."""
    if a.shape[1] != x.shape[0]:
        raise ShapeError(f"spmm shape mismatch {a.shape} @ {x.shape}")
    out = np.asarray(a @ x.value)

    def fn(g):
        x.accumulate(np.asarray(a.T @ g))

    return _make(out, (x,), fn)


def add(a: Var, b: Var) -> Var:
    if a.shape != b.shape:
        raise ShapeError(f"add shape mismatch {a.shape} vs {b.shape}")

    def fn(g):
        a.accumulate(g)
        b.accumulate(g)

    return _make(a.value + b.value, (a, b), fn)


def sub(a: Var, b: Var) -> Var:
    if a.shape != b.shape:
        raise ShapeError(f"sub shape mismatch {a.shape} vs {b.shape}")

    def fn(g):
        a.accumulate(g)
        b.accumulate(-g)

    return _make(a.value - b.value, (a, b), fn)


def add_bias(x: Var, b: Var) -> Var:
    _check_2d(x)
    if b.shape != (x.shape[1],):
        raise ShapeError(f"bias shape {b.shape} does not match width {x.shape[1]}")

    def fn(g):
        x.accumulate(g)
        b.accumulate(g.sum(axis=0))

    return _make(x.value + b.value, (x, b), fn)


def relu(x: Var) -> Var:
    pos = x.value > 0

    def fn(g):
        x.accumulate(g * pos)

    return _make(np.where(pos, x.value, 0.0), (x,), fn)


def l2_normalize_rows(x: Var) -> Var:
    """Row-wise unit norm; exact-zero rows stay zero (their gradient is zero)."""
    _check_2d(x)
    norms = np.sqrt(np.einsum("ij,ij->i", x.value, x.value))
    nz = norms > 0
    safe = np.where(nz, norms, 1.0)[:, None]
    y = x.value / safe

    def fn(g):
        proj = np.einsum("ij,ij->i", y, g)[:, None]
        gx = (g - y * proj) / safe
        gx[~nz] = 0.0
        x.accumulate(gx)

    return _make(y, (x,), fn)


def concat(vs, axis: int = 1) -> Var:
    vs = list(vs)
    _check_2d(*vs)
    other = 1 - axis
    if len({v.shape[other] for v in vs}) != 1:
        raise ShapeError("concat inputs disagree on the non-concatenated axis")
    sizes = np.cumsum([v.shape[axis] for v in vs])[:-1]

    def fn(g):
        for v, part in zip(vs, np.split(g, sizes, axis=axis)):
            v.accumulate(part)

    return _make(np.concatenate([v.value for v in vs], axis=axis), tuple(vs), fn)


def segment_sum(x: Var, seg: np.ndarray, nseg: int) -> Var:
    """Sum rows of ``x`` into ``nseg`` buckets given by ``seg``."""
    _check_2d(x)
    if len(seg) != x.shape[0]:
        raise ShapeError("segment ids must have one entry per row")
    seg = np.asarray(seg, dtype=np.int64)
    if len(seg) and np.all(seg[1:] >= seg[:-1]):
        counts = np.bincount(seg, minlength=nseg)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        out = np.zeros((nseg, x.shape[1]))
        nonempty = counts > 0
        out[nonempty] = np.add.reduceat(x.value, starts[nonempty], axis=0)
    else:
        out = np.zeros((nseg, x.shape[1]))
        np.add.at(out, seg, x.value)

    def fn(g):
        x.accumulate(g[seg])

    return _make(out, (x,), fn)


def gather_rows(x: Var, idx: np.ndarray) -> Var:
    _check_2d(x)
    idx = np.asarray(idx, dtype=np.int64)
    unique = len(np.unique(idx)) == len(idx)

    def fn(g):
        gx = np.zeros_like(x.value)
        if unique:
            gx[idx] = g
        else:
            np.add.at(gx, idx, g)
        x.accumulate(gx)

    return _make(x.value[idx], (x,), fn)


def scale_rows(x: Var, c: Var) -> Var:
    """``x * c`` with ``c`` a column (n x 1) broadcast across each row."""
    _check_2d(x, c)
    if c.shape != (x.shape[0], 1):
        raise ShapeError(f"row scale must have shape ({x.shape[0]}, 1), got {c.shape}")

    def fn(g):
        x.accumulate(g * c.value)
        if c.needs_grad:
            c.accumulate(np.einsum("ij,ij->i", g, x.value)[:, None])

    return _make(x.value * c.value, (x, c), fn)


def scale_cols(x: Var, v: Var) -> Var:
    """``x * v`` with ``v`` a vector (d,) broadcast down the rows."""
    _check_2d(x)
    if v.shape != (x.shape[1],):
        raise ShapeError(f"column scale must have shape ({x.shape[1]},), got {v.shape}")

    def fn(g):
        x.accumulate(g * v.value)
        v.accumulate(np.einsum("ij,ij->j", g, x.value))

    return _make(x.value * v.value, (x, v), fn)


def mul(a: Var, b: Var) -> Var:
    if a.shape != b.shape:
        raise ShapeError(f"mul shape mismatch {a.shape} vs {b.shape}")

    def fn(g):
        a.accumulate(g * b.value)
        b.accumulate(g * a.value)

    return _make(a.value * b.value, (a, b), fn)


def square(x: Var) -> Var:
    def fn(g):
        x.accumulate(2.0 * g * x.value)

    return _make(x.value ** 2, (x,), fn)


def total(x: Var) -> Var:
    def fn(g):
        x.accumulate(np.full_like(x.value, float(g)))

    return _make(np.array(x.value.sum()), (x,), fn)


def mean(x: Var) -> Var:
    size = x.value.size

    def fn(g):
        x.accumulate(np.full_like(x.value, float(g) / size))

    return _make(np.array(x.value.mean()), (x,), fn)


CHECKPOINT_VERSION = 1


class ParamStore:
    """Named trainable arrays with Adam moments."""

    def __init__(self):
        self.params: dict[str, Var] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, value) -> Var:
        if name in self.params:
            raise KeyError(f"parameter {name!r} already exists")
        p = Var(np.array(value, dtype=float), name=name)
        self.params[name] = p
        self.m[name] = np.zeros_like(p.value)
        self.v[name] = np.zeros_like(p.value)
        return p

    def glorot(self, name: str, shape, rng) -> Var:
        fan_in, fan_out = shape[0], shape[-1] if len(shape) > 1 else 1
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return self.add(name, rng.uniform(-limit, limit, size=shape))

    def zeros(self, name: str, shape) -> Var:
        return self.add(name, np.zeros(shape))

    def __getitem__(self, name) -> Var:
        return self.params[name]

    def __iter__(self):
        return iter(self.params.items())

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def values(self) -> dict:
        return {k: p.value for k, p in self.params.items()}

    def copy(self) -> "ParamStore":
        new = ParamStore()
        for k, p in self.params.items():
            new.add(k, p.value)
            new.m[k] = self.m[k].copy()
            new.v[k] = self.v[k].copy()
        new.step_count = self.step_count
        return new

    def load_values(self, other: "ParamStore"):
        for k, p in self.params.items():
            q = other.params[k].value
            if q.shape != p.value.shape:
                raise ShapeError(f"shape mismatch for {k}: {q.shape} vs {p.value.shape}")
            p.value = q.copy()

    def save(self, path, meta=None):
        arrays = {f"param/{k}": p.value for k, p in self.params.items()}
        header = {"version": CHECKPOINT_VERSION, "names": list(self.params), "meta": meta or {}}
        arrays["__header__"] = np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)
        with Path(path).open("wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            header = json.loads(bytes(data["__header__"]).decode())
            if header.get("version") != CHECKPOINT_VERSION:
                raise StateError(f"unsupported checkpoint version {header.get('version')}")
            store = cls()
            for k in header["names"]:
                store.add(k, data[f"param/{k}"])
        return store, header["meta"]


def adam_step(store: ParamStore, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update from the accumulated gradients, which are then cleared."""
    store.step_count += 1
    t = store.step_count
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for k, p in store.params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.value)
        m = store.m[k]
        v = store.v[k]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        p.value = p.value - lr * (m / c1) / (np.sqrt(v / c2) + eps)
        p.grad = None
