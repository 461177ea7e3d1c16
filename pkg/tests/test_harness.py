import logging

import numpy as np
import pytest

from pacifier.environment import evaluate_plan
from pacifier.errors import ConfigError, IngestError
from pacifier.harness import (
    RESULT_HEADER,
    TRAJECTORY_HEADER,
    ExperimentConfig,
    ResultRow,
    ingest_dataset,
    load_experiment_config,
    load_instance,
    read_labels,
    read_results,
    read_trajectory,
    run_benchmark,
    save_instance,
    write_results,
    write_trajectory,
)
from pacifier.plots import emit_plots
from pacifier.synthgen import GenConfig, generate_instance

from helpers import make_instance


def _write(path, text):
    path.write_text(text)
    return path


def test_ingest_p2(tmp_path):
    e = _write(tmp_path / "g.edges", "a b\n")
    lab = _write(tmp_path / "g.labels", "a 1\nb -1\n")
    g, camps, s0, id_map = ingest_dataset(e, lab)
    assert g.n == 2 and list(g.edges()) == [(0, 1, 1.0)]
    assert list(camps) == [1, -1] and list(s0) == [1.0, -1.0]
    assert id_map == {"a": 0, "b": 1}


def test_ingest_rejects_self_loop(tmp_path):
    e = _write(tmp_path / "g.edges", "0 1\n0 0\n")
    lab = _write(tmp_path / "g.labels", "0 1\n1 -1\n")
    with pytest.raises(IngestError, match=":2:"):
        ingest_dataset(e, lab)


def test_ingest_disconnected_needs_force(tmp_path, caplog):
    e = _write(tmp_path / "g.edges", "0 1\n2 3\n")
    lab = _write(tmp_path / "g.labels", "0 1\n1 1\n2 -1\n3 -1\n")
    with pytest.raises(IngestError, match="connected"):
        ingest_dataset(e, lab)
    with caplog.at_level(logging.WARNING):
        g, *_ = ingest_dataset(e, lab, force=True)
    assert g.n == 4 and "disconnected" in caplog.text


def test_labels_validation(tmp_path):
    with pytest.raises(IngestError, match=":2:"):
        read_labels(_write(tmp_path / "a", "0 1\n1 0\n"))
    with pytest.raises(IngestError, match="duplicate"):
        read_labels(_write(tmp_path / "b", "0 1\n0 -1\n"))
    with pytest.raises(IngestError, match="no camp label"):
        ingest_dataset(_write(tmp_path / "e", "0 1\n1 2\n"), _write(tmp_path / "c", "0 1\n1 1\n"))


def test_isolated_labelled_node_is_kept(tmp_path):
    e = _write(tmp_path / "g.edges", "0 1\n")
    lab = _write(tmp_path / "g.labels", "0 1\n1 -1\n2 1\n")
    g, *_ = ingest_dataset(e, lab, force=True)
    assert g.n == 3


def test_instance_round_trip(tmp_path):
    inst = generate_instance(GenConfig(cost_mode="random", opinion_mode="continuous", seed=4),
                             variant="me-cost", budget=0.2, name="demo")
    path = save_instance(inst, tmp_path)
    back = load_instance(path)
    assert back.name == "demo" and back.variant.name == "me-cost" and back.budget == inst.budget
    assert list(back.graph.edges()) == list(inst.graph.edges())
    np.testing.assert_array_equal(back.s0, inst.s0)
    np.testing.assert_array_equal(back.costs, inst.costs)
    np.testing.assert_array_equal(back.camps, inst.camps)
    assert load_instance(path, variant="mi", budget=0.5).budget == round(0.5 * inst.n)


def test_unknown_config_keys_rejected(tmp_path):
    good = "[meta]\nversion = 1\n[experiment]\nmethods = random\n[generator]\ncount = 1\n"
    assert load_experiment_config(_write(tmp_path / "ok.ini", good)).methods == ["random"]
    for bad in (good + "colour = red\n",
                good.replace("[experiment]", "[experimant]"),
                good.replace("version = 1", "version = 2"),
                good.replace("random", "oracle")):
        with pytest.raises(ConfigError):
            load_experiment_config(_write(tmp_path / "bad.ini", bad))


def test_experiment_config_needs_sources():
    with pytest.raises(ConfigError):
        ExperimentConfig(methods=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(methods=["random"])


def _cfg(tmp_path, methods, n=(18, 20), count=1, seeds=(0,)):
    return ExperimentConfig(methods=list(methods), generator=GenConfig(n_min=n[0], n_max=n[1], seed=2),
                            generate_count=count, seeds=list(seeds), output=str(tmp_path / "out"))


def test_bench_rows_per_method(tmp_path):
    res = run_benchmark(_cfg(tmp_path, ["random", "pagerank"]))
    assert res.ok and len(res.rows) == 2
    assert [r.method for r in res.rows] == ["random", "pagerank"]
    assert all(r.anp >= 0 for r in res.rows)
    files = sorted(p.name for p in (tmp_path / "out" / "trajectories").iterdir())
    assert len(files) == 2 and all(f.count("__") == 2 for f in files)


def test_bench_is_deterministic(tmp_path):
    cfg_a = _cfg(tmp_path / "a", ["random", "bomp", "extreme-neighbours"], count=2, seeds=(0, 1))
    cfg_b = _cfg(tmp_path / "b", ["random", "bomp", "extreme-neighbours"], count=2, seeds=(0, 1))
    run_benchmark(cfg_a)
    run_benchmark(cfg_b)
    a, b = tmp_path / "a" / "out", tmp_path / "b" / "out"
    names = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert names == sorted(p.relative_to(b) for p in b.rglob("*.csv"))
    for rel in names:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


def test_bench_isolates_failing_rows(tmp_path):
    res = run_benchmark(_cfg(tmp_path, ["exhaustive", "random"], n=(20, 20)))
    assert [r.method for r in res.rows] == ["random"]
    assert len(res.errors) == 1 and res.errors[0][1] == "exhaustive"
    assert "Refused" in res.errors[0][3]
    assert (tmp_path / "out" / "errors.csv").read_text().startswith("dataset,method,seed,error")


def test_parallel_bench_matches_serial(tmp_path, monkeypatch):
    serial = run_benchmark(_cfg(tmp_path / "s", ["random", "bomp"], count=2), write=False)
    monkeypatch.setenv("PACIFIER_THREADS", "3")
    parallel = run_benchmark(_cfg(tmp_path / "p", ["random", "bomp"], count=2), write=False)
    assert [r.cells() for r in serial.rows] == [r.cells() for r in parallel.rows]


def test_results_csv_round_trip(tmp_path):
    rows = [ResultRow("d", "random", 0, 10, 2, 0.1 + 0.2, 1 / 3), ResultRow("d", "bomp", 1, 10, 2, 0.0, 1e-17, 12.5)]
    write_results(rows, tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == ",".join(RESULT_HEADER)
    assert read_results(tmp_path / "r.csv") == rows


def test_trajectory_csv_round_trip(tmp_path, k3):
    inst = make_instance(k3, [1, 1, -1], budget=2)
    traj = evaluate_plan(inst, [0, 2])
    write_trajectory(traj, tmp_path / "t.csv")
    cols = read_trajectory(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == ",".join(TRAJECTORY_HEADER)
    assert cols["x"] == [0.0, 0.5, 1.0]
    assert cols["pol"] == list(traj.pol_steps)
    assert cols["action"] == [None, 0, 2]


def test_plots_single_series(tmp_path):
    rows = [ResultRow("d", "random", 0, 10, 4, 0.3, 0.2)]
    written = emit_plots(rows, {("d", "random", 0): [0.5, 0.4, 0.3, 0.3, 0.2]}, tmp_path)
    names = sorted(p.name for p in written)
    assert names == ["anp_bars.svg", "heat_grid.svg", "trajectory_d.svg"]
    bars = (tmp_path / "anp_bars.svg").read_text()
    assert bars.count("<rect x=") - bars.count('width="10"') == 1
    line = (tmp_path / "trajectory_d.svg").read_text()
    assert line.count("<polyline") == 1
    pts = line.split('points="')[1].split('"')[0].split()
    xs = [float(p.split(",")[0]) for p in pts]
    # plot area spans [LEFT, W - RIGHT]; first point at x=0, last at x=1
    from pacifier.plots import LEFT, RIGHT, W
    assert xs[0] == LEFT and xs[-1] == W - RIGHT


def test_plots_empty_rows_warn(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert emit_plots([], {}, tmp_path / "p") == []
    assert not (tmp_path / "p").exists()
    assert "nothing to plot" in caplog.text
