"""Experiment plumbing: dataset ingestion, instance files, INI configs and
benchmark sweeps over instances x methods x seeds.

Output CSVs are written with ``repr`` floats and a fixed row order so that a
repeated run with the same seeds is byte-identical.  Wall time is only
recorded when explicitly requested.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (
    plan_bomp,
    plan_exhaustive,
    plan_extreme_expressed,
    plan_extreme_neighbours,
    plan_pagerank,
    plan_random,
)
from .dynamics import BiasConfig
from .environment import Instance, evaluate_plan, initial_opinions
from .errors import ConfigError, IngestError, PacifierError
from .graph import build_graph, is_connected, read_edge_list, write_edge_list
from .synthgen import GenConfig, generate_instances

__all__ = [
    "METHODS",
    "RESULT_HEADER",
    "TRAJECTORY_HEADER",
    "ExperimentConfig",
    "ResultRow",
    "BenchmarkResult",
    "ingest_dataset",
    "read_labels",
    "save_instance",
    "load_instance",
    "read_config",
    "section_to_dataclass",
    "load_experiment_config",
    "make_plan",
    "run_benchmark",
    "write_results",
    "read_results",
    "write_trajectory",
    "read_trajectory",
    "thread_count",
]

log = logging.getLogger(__name__)

METHODS = (
    "random",
    "pagerank",
    "extreme-expressed",
    "extreme-neighbours",
    "bomp",
    "exhaustive",
    "pacifier-rl",
    "pacifier-greedy",
)
RESULT_HEADER = ["dataset", "method", "seed", "n", "k", "anp", "final_pol", "wall_time_ms"]
TRAJECTORY_HEADER = ["t", "x", "pol", "pol_hat", "cost_spent", "action"]
ERROR_HEADER = ["dataset", "method", "seed", "error"]
CONFIG_VERSION = "1"
THREADS_ENV = "PACIFIER_THREADS"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# -- dataset ingestion ------------------------------------------------------

def read_labels(path) -> dict:
    """``node_id camp`` lines with camp in {+1, -1}; returns token -> camp."""
    path = Path(path)
    labels = {}
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise IngestError(f"{path}:{lineno}: expected 'node_id camp', got {line!r}")
            try:
                camp = int(float(parts[1]))
            except ValueError:
                raise IngestError(f"{path}:{lineno}: bad camp label {parts[1]!r}") from None
            if camp not in (-1, 1) or float(parts[1]) != camp:
                raise IngestError(f"{path}:{lineno}: camp must be +1 or -1, got {parts[1]!r}")
            if parts[0] in labels:
                raise IngestError(f"{path}:{lineno}: duplicate label for node {parts[0]}")
            labels[parts[0]] = camp
    return labels


def ingest_dataset(edge_path, label_path, force: bool = False):
    """Load a labelled graph; returns ``(graph, camps, s0, id_map)``.

    Self-loops always fail.  A disconnected graph fails unless ``force``.
    """
    labels = read_labels(label_path)
    n, edges, id_map = read_edge_list(edge_path, extra_ids=labels)
    missing = [tok for tok in id_map if tok not in labels]
    if missing:
        raise IngestError(f"{label_path}: no camp label for nodes {missing[:5]}")
    try:
        g = build_graph(n, edges)
    except PacifierError as exc:
        raise IngestError(f"{edge_path}: {exc}") from None
    if not is_connected(g):
        if not force:
            raise IngestError(f"{edge_path}: graph is not a single connected component")
        log.warning("%s: graph is disconnected; continuing because force=True", edge_path)
    camps = np.empty(n, dtype=int)
    for tok, i in id_map.items():
        camps[i] = labels[tok]
    return g, camps, camps.astype(float), id_map


# -- instance files ---------------------------------------------------------

def save_instance(inst: Instance, out_dir, name: str | None = None) -> Path:
    """Write ``<name>.edges``, ``.opinions``, ``.costs`` and the ``.instance`` index."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = name or inst.name or "instance"
    write_edge_list(inst.graph, out / f"{name}.edges")
    with (out / f"{name}.opinions").open("w") as fh:
        for i, v in enumerate(inst.s0):
            camp = "" if inst.camps is None else f" {int(inst.camps[i]):+d}"
            fh.write(f"{i} {float(v)!r}{camp}\n")
    with (out / f"{name}.costs").open("w") as fh:
        for i, c in enumerate(inst.costs):
            fh.write(f"{i} {float(c)!r}\n")
    cp = configparser.ConfigParser()
    cp["meta"] = {"version": CONFIG_VERSION}
    cp["instance"] = {
        "name": name,
        "n": str(inst.n),
        "budget": str(inst.budget),
        "variant": inst.variant.name,
        "edges": f"{name}.edges",
        "opinions": f"{name}.opinions",
        "costs": f"{name}.costs",
    }
    if inst.bias is not None:
        cp["bias"] = {k: _fmt(v) for k, v in dataclasses.asdict(inst.bias).items()}
    path = out / f"{name}.instance"
    with path.open("w") as fh:
        cp.write(fh)
    return path


def _read_node_values(path, n, columns):
    vals = np.zeros((n, columns))
    seen = np.zeros(n, bool)
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                i = int(parts[0])
                row = [float(p) for p in parts[1:]]
            except (ValueError, IndexError):
                raise IngestError(f"{path}:{lineno}: malformed line {line!r}") from None
            if not 0 <= i < n or not 1 <= len(row) <= columns:
                raise IngestError(f"{path}:{lineno}: bad node id or column count")
            vals[i, : len(row)] = row
            seen[i] = True
    if not seen.all():
        raise IngestError(f"{path}: missing values for {int((~seen).sum())} nodes")
    return vals


def load_instance(path, variant=None, budget=None) -> Instance:
    """Read an ``.instance`` index; ``variant``/``budget`` override the stored ones.

    ``budget`` may be an int or a fraction of ``n``.
    """
    path = Path(path)
    cp = read_config(path, {"instance": {"name", "n", "budget", "variant", "edges", "opinions",
                                         "costs"},
                            "bias": {"b", "max_iters", "tol"}})
    sec = cp["instance"]
    base = path.parent
    n = int(sec["n"])
    nn_, edges, id_map = read_edge_list(base / sec["edges"], extra_ids=[str(i) for i in range(n)])
    if nn_ != n or any(id_map[str(i)] != i for i in range(n)):
        raise IngestError(f"{path}: edge file ids do not match n={n}")
    g = build_graph(n, edges)
    op = _read_node_values(base / sec["opinions"], n, 2)
    costs = _read_node_values(base / sec["costs"], n, 1)[:, 0]
    camps = op[:, 1].astype(int) if np.all(np.isin(op[:, 1], (-1, 1))) else None
    bias = section_to_dataclass(cp["bias"], BiasConfig) if cp.has_section("bias") else None
    k = int(sec["budget"]) if budget is None else _resolve_budget(budget, n)
    return Instance(
        graph=g,
        s0=op[:, 0],
        costs=costs,
        budget=k,
        variant=variant or sec["variant"],
        bias=bias,
        camps=camps,
        name=sec.get("name", path.stem),
    )


def _resolve_budget(budget, n: int) -> int:
    if isinstance(budget, str):
        budget = float(budget) if "." in budget else int(budget)
    if isinstance(budget, float):
        if not 0 < budget <= 1:
            raise ConfigError(f"fractional budget must lie in (0, 1], got {budget}")
        return max(1, int(round(budget * n)))
    return int(budget)


# -- configs ----------------------------------------------------------------

def read_config(path, allowed: dict) -> configparser.ConfigParser:
    """Parse a versioned INI file, rejecting unknown sections and keys."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with Path(path).open() as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if cp.get("meta", "version", fallback=None) != CONFIG_VERSION:
        raise ConfigError(f"{path}: expected [meta] version = {CONFIG_VERSION}")
    for sec in cp.sections():
        if sec == "meta":
            extra = set(cp[sec]) - {"version"}
        elif sec in allowed:
            extra = set(cp[sec]) - set(allowed[sec])
        else:
            raise ConfigError(f"{path}: unknown section [{sec}]")
        if extra:
            raise ConfigError(f"{path}: unknown keys in [{sec}]: {sorted(extra)}")
    return cp


def _coerce(raw: str, default):
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"expected a boolean, got {raw!r}")
        return low in ("true", "1", "yes")
    if isinstance(default, int) and not isinstance(default, bool):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(int(x) for x in raw.replace(",", " ").split())
    return raw.strip()


def _field_default(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return ""


def section_to_dataclass(section, cls, **overrides):
    """Build ``cls`` from an INI section, coercing by each field's default type."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in section.items():
        if key not in fields:
            raise ConfigError(f"unknown key {key!r} for {cls.__name__}")
        default = _field_default(fields[key])
        try:
            kwargs[key] = None if raw.strip().lower() == "none" else _coerce(raw, default)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    kwargs.update(overrides)
    try:
        return cls(**kwargs)
    except PacifierError as exc:
        raise ConfigError(str(exc)) from None


def dataclass_keys(cls) -> set:
    return {f.name for f in dataclasses.fields(cls)}


@dataclass
class ExperimentConfig:
    methods: list
    instances: list = field(default_factory=list)  # .instance paths
    generator: GenConfig | None = None
    generate_count: int = 0
    variant: str = "mi"
    budget: object = 0.1  # int count or fraction of n
    seeds: list = field(default_factory=lambda: [0])
    output: str = "results"
    checkpoint_rl: str = ""
    checkpoint_greedy: str = ""
    norm_mode: str = "per-node"
    timing: bool = False

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if not self.instances and not (self.generator and self.generate_count > 0):
            raise ConfigError("need instance paths or a generator section with count > 0")
        if not self.seeds:
            raise ConfigError("at least one seed is required")


_EXPERIMENT_KEYS = {"methods", "variant", "budget", "seeds", "output", "checkpoint_rl",
                    "checkpoint_greedy", "norm_mode", "timing"}


def _split_list(raw: str) -> list:
    return [x for x in raw.replace(",", " ").split() if x]


def load_experiment_config(path) -> ExperimentConfig:
    """``[experiment]`` plus either ``[instances] paths`` or a ``[generator]`` section."""
    path = Path(path)
    cp = read_config(path, {
        "experiment": _EXPERIMENT_KEYS,
        "instances": {"paths"},
        "generator": dataclass_keys(GenConfig) | {"count"},
    })
    if not cp.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")
    ex = cp["experiment"]
    gen, count = None, 0
    if cp.has_section("generator"):
        sec = dict(cp["generator"])
        count = int(sec.pop("count", "0"))
        gen = section_to_dataclass(sec, GenConfig)
    paths = []
    if cp.has_section("instances"):
        paths = [str((path.parent / p) if not Path(p).is_absolute() else Path(p))
                 for p in _split_list(cp["instances"].get("paths", ""))]
    try:
        return ExperimentConfig(
            methods=_split_list(ex.get("methods", "")),
            instances=paths,
            generator=gen,
            generate_count=count,
            variant=ex.get("variant", "mi"),
            budget=ex.get("budget", "0.1"),
            seeds=[int(s) for s in _split_list(ex.get("seeds", "0"))],
            output=ex.get("output", "results"),
            checkpoint_rl=ex.get("checkpoint_rl", ""),
            checkpoint_greedy=ex.get("checkpoint_greedy", ""),
            norm_mode=ex.get("norm_mode", "per-node"),
            timing=_coerce(ex.get("timing", "false"), False),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# -- planning and sweeps -----------------------------------------------------

def make_plan(method: str, inst: Instance, z0, seed: int = 0, nets: dict | None = None):
    """Dispatch to a planner.  ``nets`` maps ``pacifier-rl``/``pacifier-greedy`` to networks."""
    if method == "random":
        return plan_random(inst, np.random.default_rng(seed))
    if method == "pagerank":
        return plan_pagerank(inst)
    if method == "extreme-expressed":
        return plan_extreme_expressed(inst, z0)
    if method == "extreme-neighbours":
        return plan_extreme_neighbours(inst, z0)
    if method == "bomp":
        return plan_bomp(inst, z0)
    if method == "exhaustive":
        return plan_exhaustive(inst)
    if method in ("pacifier-rl", "pacifier-greedy"):
        from .agent import deploy

        net = (nets or {}).get(method)
        if net is None:
            raise ConfigError(f"method {method} needs a checkpoint")
        return deploy(inst, net, variant=method)
    raise ConfigError(f"unknown method {method!r}")


@dataclass
class ResultRow:
    dataset: str
    method: str
    seed: int
    n: int
    k: int
    anp: float
    final_pol: float
    wall_time_ms: float | None = None

    def cells(self) -> list:
        wt = "" if self.wall_time_ms is None else _fmt(float(self.wall_time_ms))
        return [self.dataset, self.method, str(self.seed), str(self.n), str(self.k),
                _fmt(self.anp), _fmt(self.final_pol), wt]


@dataclass
class BenchmarkResult:
    rows: list
    trajectories: dict  # (dataset, method, seed) -> Trajectory
    errors: list  # (dataset, method, seed, message)

    @property
    def ok(self) -> bool:
        return not self.errors


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _load_nets(cfg: ExperimentConfig) -> dict:
    from .agent import QNetwork

    nets = {}
    for method, path in (("pacifier-rl", cfg.checkpoint_rl), ("pacifier-greedy", cfg.checkpoint_greedy)):
        if method in cfg.methods and path:
            nets[method] = QNetwork.load(path)
    return nets


def _instances(cfg: ExperimentConfig) -> list:
    out = [load_instance(p, variant=cfg.variant, budget=cfg.budget) for p in cfg.instances]
    if cfg.generator is not None and cfg.generate_count > 0:
        budget = cfg.budget
        if isinstance(budget, str):
            budget = float(budget) if "." in budget else int(budget)
        out += generate_instances(cfg.generator, cfg.generate_count, variant=cfg.variant,
                                  budget=budget)
    return out


def _run_one(inst, z0, method, seed, nets, norm_mode, timing):
    t0 = time.perf_counter()
    plan = make_plan(method, inst, z0, seed, nets)
    wall = (time.perf_counter() - t0) * 1e3 if timing else None
    traj = evaluate_plan(inst, plan, norm_mode)
    row = ResultRow(inst.name, method, seed, inst.n, len(plan), traj.anp, traj.final_pol, wall)
    return row, traj


def run_benchmark(cfg: ExperimentConfig, write: bool = True) -> BenchmarkResult:
    """Plan once and evaluate once per (instance, method, seed); failures are per row."""
    insts = _instances(cfg)
    nets = _load_nets(cfg)
    jobs = []
    for inst in insts:
        z0 = initial_opinions(inst)
        for method in cfg.methods:
            for seed in cfg.seeds:
                jobs.append((inst, z0, method, seed))

    def work(job):
        inst, z0, method, seed = job
        try:
            return _run_one(inst, z0, method, seed, nets, cfg.norm_mode, cfg.timing), None
        except PacifierError as exc:
            return None, f"{type(exc).__name__}: {exc}"

    threads = thread_count()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            outcomes = list(pool.map(work, jobs))
    else:
        outcomes = [work(j) for j in jobs]

    rows, trajs, errors = [], {}, []
    for (inst, _, method, seed), (ok, err) in zip(jobs, outcomes):
        if err is not None:
            log.warning("%s / %s / seed %d failed: %s", inst.name, method, seed, err)
            errors.append((inst.name, method, seed, err))
            continue
        row, traj = ok
        rows.append(row)
        trajs[(inst.name, method, seed)] = traj
    result = BenchmarkResult(rows, trajs, errors)
    if write:
        write_benchmark(result, cfg.output)
    return result


def write_benchmark(result: BenchmarkResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results(result.rows, out / "results.csv")
    tdir = out / "trajectories"
    tdir.mkdir(exist_ok=True)
    for (ds, method, seed), traj in result.trajectories.items():
        write_trajectory(traj, tdir / f"{ds}__{method}__s{seed}.csv")
    err_path = out / "errors.csv"
    if result.errors:
        with err_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ERROR_HEADER)
            for ds, method, seed, msg in result.errors:
                w.writerow([ds, method, seed, msg])
    elif err_path.exists():
        err_path.unlink()
    return out


def write_results(rows, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in rows:
            w.writerow(r.cells())


def read_results(path) -> list:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_HEADER:
            raise IngestError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            ResultRow(
                dataset=r["dataset"], method=r["method"], seed=int(r["seed"]), n=int(r["n"]),
                k=int(r["k"]), anp=float(r["anp"]), final_pol=float(r["final_pol"]),
                wall_time_ms=float(r["wall_time_ms"]) if r["wall_time_ms"] else None,
            )
            for r in reader
        ]


def write_trajectory(traj, path):
    k = traj.k
    spent = traj.costs_spent or [0.0] * (k + 1)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for t in range(k + 1):
            action = "" if t == 0 else traj.actions[t - 1]
            w.writerow([t, _fmt(t / k if k else 0.0), _fmt(traj.pol_steps[t]), _fmt(traj.pol_hat_steps[t]),
                        _fmt(float(spent[t])), action])


def read_trajectory(path) -> dict:
    """Columns of a trajectory CSV as lists (``action`` is ``None`` at t = 0)."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAJECTORY_HEADER:
            raise IngestError(f"{path}: unexpected header {reader.fieldnames}")
        cols = {h: [] for h in TRAJECTORY_HEADER}
        for r in reader:
            cols["t"].append(int(r["t"]))
            for h in ("x", "pol", "pol_hat", "cost_spent"):
                cols[h].append(float(r[h]))
            cols["action"].append(int(r["action"]) if r["action"] else None)
    return cols
