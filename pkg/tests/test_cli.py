import csv
import json

import numpy as np
import pytest

from moneyflow import io
from moneyflow.cli import main
from moneyflow.graph import DirectedGraph

TRIANGLE = "0\t1\n1\t2\n2\t0\n"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def tri(tmp_path):
    p = tmp_path / "tri.tsv"
    p.write_text(TRIANGLE)
    return p


def test_lscc_triangle_identity(tmp_path, tri):
    out = tmp_path / "core.tsv"
    assert main(["lscc", "--in", str(tri), "--out", str(out)]) == 0
    assert out.read_text() == TRIANGLE


def test_lscc_keeps_original_ids(tmp_path):
    src = tmp_path / "g.tsv"
    src.write_text("a\tb\nb\tc\nc\tb\nc\td\n")
    out = tmp_path / "core.tsv"
    assert main(["lscc", "--in", str(src), "--out", str(out)]) == 0
    assert out.read_text() == "b\tc\nc\tb\n"


def test_usage_errors_exit_2(tri, capsys):
    with pytest.raises(SystemExit) as e:
        main(["lscc", "--in", str(tri), "--bogus"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["reproduce", "--experiment", "nope"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2


def test_stage_failure_exit_1(tmp_path, capsys):
    assert main(["simulate", "--graph", str(tmp_path / "missing.tsv"), "--model", "1",
                 "--out", str(tmp_path / "x.csv")]) == 1
    err = capsys.readouterr().err
    assert "stage 'ingest' failed" in err
    events = [json.loads(line) for line in err.splitlines() if line.startswith("{")]
    assert events[-1]["event"] == "error" and events[-1]["stage"] == "ingest"


def test_closed_on_non_scc_fails_in_simulate(tmp_path, capsys):
    g = tmp_path / "chain.tsv"
    g.write_text("0\t1\n1\t2\n")
    assert main(["simulate", "--graph", str(g), "--model", "1", "--out", str(tmp_path / "x.csv")]) == 1
    assert "stage 'simulate' failed" in capsys.readouterr().err


def test_simulate_outputs(tmp_path, tri):
    out = tmp_path / "x.csv"
    log = tmp_path / "log.jsonl"
    assert main(["simulate", "--graph", str(tri), "--model", "2", "--mode", "open", "--r", "0.5",
                 "--f", "1", "--out", str(out), "--log", str(log)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["node_id", "x_steady"]
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    assert np.allclose([float(r[1]) for r in rows[1:]], 2.0, rtol=1e-9)
    report = json.loads((tmp_path / "x.csv.report.jsonl").read_text())
    assert report["converged"] and report["total"] == pytest.approx(6.0)
    assert {"iterations", "residual", "total"} <= set(report)
    events = [json.loads(line) for line in log.read_text().splitlines()]
    assert events[0]["event"] == "start" and events[-1]["event"] == "simulate_done"


def test_simulate_init_file_and_calibrate(tmp_path):
    g = tmp_path / "g.tsv"
    g.write_text("0\t1\n1\t2\n2\t0\n2\t3\n3\t0\n")
    init = tmp_path / "init.csv"
    init.write_text("node_id,x\n3,4\n0,0\n1,0\n2,0\n")
    out = tmp_path / "x.csv"
    assert main(["simulate", "--graph", str(g), "--model", "1", "--init", f"file:{init}",
                 "--out", str(out)]) == 0
    x = io.read_state(out)
    assert np.allclose(x, np.array([2, 2, 2, 1]) / 7 * 4, rtol=1e-9)
    assert main(["simulate", "--graph", str(g), "--model", "2", "--mode", "open", "--r", "0.95",
                 "--calibrate", "1000", "--out", str(out)]) == 0
    assert io.read_state(out).sum() == pytest.approx(1000, rel=1e-9)


def test_threads_env(tmp_path, tri, monkeypatch):
    monkeypatch.setenv("MONEYFLOW_THREADS", "3")
    log = tmp_path / "log.jsonl"
    assert main(["lscc", "--in", str(tri), "--out", str(tmp_path / "o.tsv"), "--log", str(log)]) == 0
    assert json.loads(log.read_text().splitlines()[0])["threads"] == 3
    assert main(["lscc", "--in", str(tri), "--out", str(tmp_path / "o.tsv"), "--log", str(log),
                 "--threads", "2"]) == 0
    starts = [json.loads(x) for x in log.read_text().splitlines() if '"event": "start"' in x]
    assert starts[-1]["threads"] == 2


def test_synth_shuffle_stats_chain(tmp_path, capsys):
    g = tmp_path / "g.tsv"
    assert main(["synth", "--nodes", "3000", "--k-min", "2", "--k-max", "120", "--inout-coupling", "0.9",
                 "--correlation", "-0.2", "--seed", "1", "--out", str(g)]) == 0
    rep = json.loads((tmp_path / "g.tsv.report.jsonl").read_text())
    assert rep["realized_in_total"] == rep["realized_out_total"]
    assert {"requested_in_total", "final_correlation"} <= set(rep)

    core, sh = tmp_path / "core.tsv", tmp_path / "sh.tsv"
    assert main(["lscc", "--in", str(g), "--out", str(core)]) == 0
    capsys.readouterr()
    assert main(["shuffle", "--in", str(core), "--out", str(sh), "--seed", "2"]) == 0
    line = capsys.readouterr().out.strip()
    parts = dict(kv.split("=") for kv in line.split())
    assert int(parts["attempts"]) == int(parts["accepted"]) + int(parts["rejected"])

    x = tmp_path / "x.csv"
    assert main(["simulate", "--graph", str(sh), "--model", "2", "--out", str(x)]) == 0
    expect = {
        "ccdf": ["value", "ccdf"],
        "fit": ["method", "exponent", "tail_fraction", "x_min", "n_tail"],
        "knn": ["bin_center", "mean", "count", "p05", "p95", "mode"],
        "condmean": ["bin_center", "mean", "count", "p05", "p95", "mode"],
        "nbrsums": ["node_id", "s", "s1", "s2"],
    }
    args = {
        "ccdf": ["--values", str(x)], "fit": ["--values", str(x), "--method", "rank"],
        "knn": ["--graph", str(sh)], "condmean": ["--graph", str(sh), "--state", str(x)],
        "nbrsums": ["--graph", str(sh), "--sales", str(x), "--column", "x_steady"],
    }
    for mode, header in expect.items():
        out = tmp_path / f"{mode}.csv"
        assert main(["stats", mode, *args[mode], "--out", str(out)]) == 0, mode
        rows = read_csv(out)
        assert rows[0] == header and len(rows) > 1
    # the neighbor sum of the steady state reproduces it
    rows = read_csv(tmp_path / "nbrsums.csv")[1:]
    s, s2 = np.array([[float(r[1]), float(r[3])] for r in rows]).T
    assert np.max(np.abs(s2 - s) / s) < 1e-8


def test_reproduce_deterministic_and_readable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["reproduce", "--experiment", "model2-shuffled", "--seed", "7", "--nodes", "3000",
                     "--workdir", str(d)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert "report.csv" in names and "x_model2_shuffled.csv" in names
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    # the standalone subcommand reads the intermediate graph and reproduces the state
    x = tmp_path / "x.csv"
    assert main(["simulate", "--graph", str(a / "shuffled_lscc.tsv"), "--model", "2", "--out", str(x)]) == 0
    assert x.read_bytes() == (a / "x_model2_shuffled.csv").read_bytes()


def test_io_state_alignment(tmp_path):
    g = DirectedGraph.from_edges([0, 1], [1, 0], labels=["p", "q"])
    path = tmp_path / "s.csv"
    path.write_text("node_id,v\nq,2.5\np,1.5\n")
    assert io.read_state(path, g, "v").tolist() == [1.5, 2.5]
    path.write_text("node_id,v\nq,2.5\n")
    with pytest.raises(ValueError):
        io.read_state(path, g, "v")
