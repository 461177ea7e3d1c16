import csv

import pytest

from pacifier.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main, read_plan

TRAIN_INI = """[meta]
version = 1
[agent]
variant = rl
task = mi
episodes = 6
batch = 4
[model]
embed_dim = 8
hidden = 8, 4
[generator]
n_min = 10
n_max = 14
"""


@pytest.fixture
def workdir(tmp_path):
    assert main(["generate", "--count", "2", "--n-min", "12", "--n-max", "16", "--seed", "5",
                 "--budget", "3", "--out", str(tmp_path / "inst")]) == EXIT_OK
    return tmp_path


def _instance(workdir):
    return str(sorted((workdir / "inst").glob("*.instance"))[0])


def test_generate_is_byte_identical(workdir, tmp_path_factory):
    other = tmp_path_factory.mktemp("again")
    main(["generate", "--count", "2", "--n-min", "12", "--n-max", "16", "--seed", "5",
          "--budget", "3", "--out", str(other)])
    for path in (workdir / "inst").iterdir():
        assert path.read_bytes() == (other / path.name).read_bytes()


def test_stats_prints_one_row(workdir, capsys):
    assert main(["stats", "--instance", _instance(workdir)]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2


def test_plan_then_evaluate(workdir, capsys):
    plan_path = workdir / "p.csv"
    assert main(["plan", "--instance", _instance(workdir), "--method", "bomp", "--out", str(plan_path)]) == EXIT_OK
    assert len(read_plan(plan_path)) == 3
    capsys.readouterr()
    assert main(["evaluate", "--instance", _instance(workdir), "--plan", str(plan_path),
                 "--out", str(workdir / "traj")]) == EXIT_OK
    row = list(csv.DictReader(capsys.readouterr().out.splitlines()))[0]
    assert int(row["k"]) == 3 and float(row["anp"]) > 0
    assert (workdir / "traj" / "p.trajectory.csv").exists()


def test_train_and_plan_with_checkpoint(workdir, capsys):
    ini = workdir / "train.ini"
    ini.write_text(TRAIN_INI)
    ckpt = workdir / "net.npz"
    logs = [workdir / "a.csv", workdir / "b.csv"]
    for log in logs:
        assert main(["train", "--config", str(ini), "--seed", "1", "--out", str(ckpt), "--log", str(log)]) == EXIT_OK
    assert logs[0].read_bytes() == logs[1].read_bytes()
    capsys.readouterr()
    assert main(["plan", "--instance", _instance(workdir), "--method", "pacifier-rl",
                 "--checkpoint", str(ckpt)]) == EXIT_OK
    assert len(capsys.readouterr().out.split()) == 3


def test_bench_partial_failure_and_plot(workdir):
    ini = workdir / "bench.ini"
    paths = " ".join(f"inst/{p.name}" for p in sorted((workdir / "inst").glob("*.instance")))
    ini.write_text("[meta]\nversion = 1\n[experiment]\nmethods = random, exhaustive\nseeds = 0 1\n"
                   f"output = {workdir / 'res'}\n[instances]\npaths = {paths}\n")
    assert main(["bench", "--config", str(ini)]) == EXIT_PARTIAL
    res = workdir / "res"
    assert len((res / "results.csv").read_text().splitlines()) == 1 + 4
    assert main(["plot", "--results", str(res / "results.csv"), "--trajectories", str(res / "trajectories"),
                 "--out", str(workdir / "plots")]) == EXIT_OK
    assert len(list((workdir / "plots").glob("*.svg"))) == 4


def test_config_errors_exit_2(workdir, capsys):
    bad = workdir / "bad.ini"
    bad.write_text("[meta]\nversion = 1\n[experiment]\nmethods = random\nfoo = 1\n")
    assert main(["bench", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["bench", "--config", str(workdir / "missing.ini")]) == EXIT_CONFIG
    assert main(["plan", "--instance", _instance(workdir), "--method", "pacifier-rl"]) == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
