import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from eals.cli import main, sweep_rows
from eals.core import Hyperparams, init_model
from eals.evaluation import evaluate, leave_one_out, mae_between
from eals.ingest import parse_ratings
from eals.solver_fast import load_checkpoint, train_fast
from eals.weights import uniform_missing

TINY = str(resources.files("eals") / "data" / "tiny.tsv")


def _train(tmp_path, *extra, name="ck"):
    out = tmp_path / name
    log = tmp_path / (name + ".log")
    code = main(["train", "--data", TINY, "--out", str(out), "--log", str(log), *extra])
    return code, out, log


def test_train_tiny(tmp_path):
    code, out, log = _train(tmp_path, "--solver", "fast", "--k", "4", "--iters", "10",
                            "--tol", "0")
    assert code == 0
    lines = log.read_text().splitlines()
    assert len(lines) == 10
    objs = [float(line.split(",")[1]) for line in lines]
    assert all(b <= a * (1 + 1e-10) for a, b in zip(objs, objs[1:]))
    assert all(len(line.split(",")) == 3 for line in lines)
    assert load_checkpoint(out).K == 4
    assert (tmp_path / "ck.users.tsv").exists() and (tmp_path / "ck.items.tsv").exists()


def test_zero_iters_is_init(tmp_path):
    code, out, log = _train(tmp_path, "--k", "3", "--iters", "0", "--seed", "5")
    assert code == 0 and log.read_text() == ""
    split = leave_one_out(parse_ratings(TINY))
    start = init_model(split.train, 3, seed=5, stddev=0.01)
    ck = load_checkpoint(out)
    assert np.array_equal(ck.P, start.P) and np.array_equal(ck.Q, start.Q)


def test_solvers_agree(tmp_path):
    flags = ["--k", "3", "--iters", "15", "--tol", "0", "--scheme", "popularity",
             "--c0", "8", "--alpha", "0.5"]
    _, fast, _ = _train(tmp_path, "--solver", "fast", *flags, name="f")
    _, van, _ = _train(tmp_path, "--solver", "vanilla", *flags, name="v")
    split = leave_one_out(parse_ratings(TINY))
    assert mae_between(load_checkpoint(fast), load_checkpoint(van), split.train) <= 1e-8


@pytest.mark.parametrize("flags", [
    ["--alpha", "0.4"],
    ["--scheme", "file"],
    ["--weights-file", "w.txt"],
    ["--scheme", "file", "--weights-file", "w.txt", "--c0", "2"],
    ["--lambda-guard", "0.1"],
])
def test_conflicting_flags(tmp_path, flags, capsys):
    code, _, _ = _train(tmp_path, *flags)
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_data_errors(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("u\ti\tfive\n")
    assert main(["train", "--data", str(bad), "--out", str(tmp_path / "x")]) == 3
    assert main(["stats", "--data", str(tmp_path / "nope.tsv")]) == 3


def test_eval_dimension_mismatch(tmp_path, capsys):
    ck = tmp_path / "ck"
    ck.write_text("1 1 1\n0.5\n0.5\n")
    assert main(["eval", "--data", TINY, "--checkpoint", str(ck)]) == 3


def test_numeric_error(tmp_path):
    # a weight file with negative cells drives denominators below zero at lambda 0
    split = leave_one_out(parse_ratings(TINY))
    M, N = split.train.shape
    w = tmp_path / "w.txt"
    rows = ["1 %d %d" % (M, N)] + ["-5.0"] * M + ["1.0"] * N
    w.write_text("\n".join(rows) + "\n")
    code, _, _ = _train(tmp_path, "--scheme", "file", "--weights-file", str(w),
                        "--lambda", "0", "--lambda-guard", "0", "--iters", "2")
    assert code == 4
    code, _, _ = _train(tmp_path, "--scheme", "file", "--weights-file", str(w), "--iters", "2")
    assert code == 4  # uncertified without a guard


def test_eval_report(tmp_path, capsys):
    _, out, _ = _train(tmp_path, "--k", "4", "--iters", "5")
    capsys.readouterr()
    per_user = tmp_path / "pu.csv"
    assert main(["eval", "--data", TINY, "--checkpoint", str(out), "--topn", "10",
                 "--per-user", str(per_user)]) == 0
    report = dict(line.split("=") for line in capsys.readouterr().out.splitlines())
    assert set(report) == {"HR@10", "NDCG@10", "users_evaluated"}
    assert 0 <= float(report["NDCG@10"]) <= float(report["HR@10"]) <= 1
    assert len(per_user.read_text().splitlines()) == int(report["users_evaluated"]) + 1


def test_stats(capsys):
    assert main(["stats", "--data", TINY]) == 0
    out = capsys.readouterr().out
    assert out.startswith("users=") and "entries=192" in out


def test_bench_synthetic(capsys):
    assert main(["bench", "--synthetic", "60", "50", "0.05", "1", "--grid-k", "2,4",
                 "--grid-z", "1,2", "--solvers", "fast,vanilla", "--iters", "1",
                 "--repeats", "1"]) == 0
    out = capsys.readouterr().out
    assert "solver,K,Z,mean_seconds" in out and "speedup K=2" in out and "fit c1=" in out
    assert main(["bench", "--synthetic", "10", "10", "0.1", "1", "--solvers", "slow"]) == 2


def test_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    args = ["sweep", "--data", TINY, "--k", "3", "--iters", "5", "--grid-c0", "1,4,16",
            "--grid-alpha", "0,0.5,1", "--topn", "10", "--out", str(out)]
    assert main(args) == 0
    first = out.read_text()
    lines = first.splitlines()
    assert lines[0] == "c0,alpha,hr@10,ndcg@10" and len(lines) == 10
    assert main(args) == 0
    assert out.read_text() == first


def test_sweep_single_cell_alpha_zero_is_uniform():
    split = leave_one_out(parse_ratings(TINY))
    hp = Hyperparams(K=3, max_iters=5, rel_tol=0.0)
    (row,) = list(sweep_rows(split, hp, [6.0], [0.0], 10))
    M, N = split.train.shape
    uni = train_fast(split.train, uniform_missing(M, N, 6.0 / N), hp)
    m = evaluate(uni.model, split, 10)
    assert row[2:] == pytest.approx((m.hr, m.ndcg), abs=1e-12)


def test_determinism(tmp_path):
    flags = ["--k", "4", "--iters", "8", "--no-timing", "--scheme", "user", "--c0", "20"]
    _, a, la = _train(tmp_path, *flags, name="a")
    _, b, lb = _train(tmp_path, *flags, name="b")
    assert a.read_bytes() == b.read_bytes() and la.read_bytes() == lb.read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "eals", "stats", "--data", TINY],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "entries=192" in proc.stdout
