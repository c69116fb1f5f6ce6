"""Command-line entry point: synth, lscc, shuffle, simulate, stats, reproduce.

Every run logs JSON lines (one object per event) to stderr, or to the
file given with ``--log``.  Usage errors exit with status 2; a failing
stage exits with status 1 and names the stage.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import experiments, io
from .graph import IngestOptions, IngestReport, largest_scc, load_edge_list, write_edge_list
from .shuffle import ShuffleConfig, SwapReport, degree_preserving_shuffle
from .stats import (ccdf, conditional_mean_log_binned, fit_tail_exponent, knn_curve,
                    weighted_neighbor_sums, degree_vector)
from .synth import SynthConfig, generate
from .transport import (Mode, ModelKind, TransportConfig, build_kernel, calibrate_injection,
                        run_to_steady)

THREADS_ENV = "MONEYFLOW_THREADS"
log = logging.getLogger("moneyflow")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


class _JsonLines(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {"ts": round(record.created, 3), "level": record.levelname.lower(),
                   "event": record.getMessage()}
        payload.update(getattr(record, "fields", {}))
        return json.dumps(payload, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return str(obj)


def _emit(event: str, **fields) -> None:
    log.info(event, extra={"fields": fields})


def _configure_logging(path) -> logging.Handler:
    handler = logging.FileHandler(path, mode="a") if path else logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLines())
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO)
    log.propagate = False
    return handler


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise SystemExit(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return max(value, 1)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _load(path, integer_ids: bool = False):
    rep = IngestReport()
    g = load_edge_list(path, IngestOptions(integer_ids=integer_ids), rep)
    _emit("ingest", path=str(path), nodes=g.n, **asdict(rep))
    return g


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # re-raised with the stage attached
        raise StageError(name, exc) from exc


def _write_jsonl(path, record: dict) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(record, default=_jsonable) + "\n")


def _report_path(out: str, explicit) -> Path:
    return Path(explicit) if explicit else Path(str(out) + ".report.jsonl")


# subcommands -----------------------------------------------------------

def cmd_synth(args) -> None:
    cfg = _stage("synth", SynthConfig, node_count=args.nodes, alpha_in=args.alpha_in,
                 alpha_out=args.alpha_out, k_min=args.k_min, correlation_target=args.correlation,
                 seed=args.seed, rewire_budget=args.rewire_budget,
                 inout_coupling=args.inout_coupling, k_max=args.k_max)
    _emit("stage", stage="synth", **asdict(cfg))
    g, rep = _stage("synth", generate, cfg)
    write_edge_list(g, args.out)
    record = asdict(rep)
    _write_jsonl(_report_path(args.out, args.report), record)
    _emit("synth_done", out=args.out, nodes=g.n, edges=g.n_edges,
          final_correlation=rep.final_correlation)


def cmd_lscc(args) -> None:
    g = _stage("ingest", _load, args.inp, args.integer_ids)
    core, nodes = _stage("lscc", largest_scc, g)
    write_edge_list(core, args.out)
    _emit("lscc_done", out=args.out, nodes=core.n, edges=core.n_edges,
          fraction_of_nodes=core.n / g.n)


def cmd_shuffle(args) -> None:
    g = _stage("ingest", _load, args.inp, args.integer_ids)
    cfg = _stage("shuffle", ShuffleConfig, args.multiplier, args.seed)
    rep = SwapReport()
    out = _stage("shuffle", degree_preserving_shuffle, g, cfg, rep)
    write_edge_list(out, args.out)
    print(f"attempts={rep.attempts} accepted={rep.accepted} rejected={rep.rejected}")
    _emit("shuffle_done", out=args.out, attempts=rep.attempts, accepted=rep.accepted,
          rejected=rep.rejected)


def _parse_init(spec: str, g):
    kind, _, value = spec.partition(":")
    if kind == "uniform":
        return float(value) if value else 1.0
    if kind == "file":
        return io.read_state(value, g, column=_single_value_column(value))
    raise ValueError(f"--init must be uniform:<c> or file:<path>, got {spec!r}")


def _single_value_column(path) -> str:
    cols = [c for c in io.read_columns(path) if c != "node_id"]
    if len(cols) != 1:
        raise ValueError(f"{path}: expected node_id plus one value column")
    return cols[0]


def cmd_simulate(args) -> None:
    g = _stage("ingest", _load, args.graph, args.integer_ids)
    model = ModelKind.parse(args.model)
    mode = Mode(args.mode)
    kernel = _stage("kernel", build_kernel, g, model)
    t0 = time.perf_counter()
    if args.calibrate is not None:
        if mode is not Mode.OPEN:
            raise StageError("simulate", ValueError("--calibrate needs --mode open"))
        f, res = _stage("simulate", calibrate_injection, g, model, args.r, args.calibrate,
                        tolerance=args.tol, max_iters=args.max_iters, kernel=kernel,
                        threads=args.threads)
    else:
        f = args.f
        init = _stage("init", _parse_init, args.init, g)
        cfg = _stage("simulate", TransportConfig, model=model, mode=mode, r=args.r, f=f,
                     tolerance=args.tol, max_iters=args.max_iters, initial=init,
                     threads=args.threads)
        res = _stage("simulate", run_to_steady, kernel, cfg)
    elapsed = time.perf_counter() - t0
    io.write_state(args.out, g, res.state)
    record = {"model": model.value, "mode": mode.value, "r": args.r,
              "f": f, "tolerance": args.tol, "iterations": res.iterations,
              "change": res.change, "residual": res.residual, "total": res.total,
              "converged": res.converged, "nodes": g.n, "edges": g.n_edges,
              "seconds": round(elapsed, 3)}
    _write_jsonl(_report_path(args.out, args.report), record)
    _emit("simulate_done", out=args.out, **record)
    if not res.converged:
        raise StageError("simulate", RuntimeError(
            f"no convergence after {res.iterations} iterations (change {res.change:.3e})"))


def _read_values(path, column):
    column = column or _single_value_column(path)
    return io.read_state(path, None, column)


def cmd_stats(args) -> None:
    mode = args.stats_mode
    if mode == "ccdf":
        vals = _stage("stats", _read_values, args.values, args.column)
        io.write_ccdf(args.out, _stage("stats", ccdf, vals))
    elif mode == "fit":
        vals = _stage("stats", _read_values, args.values, args.column)
        fit = _stage("stats", fit_tail_exponent, vals, args.method, args.tail_fraction)
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "exponent", "tail_fraction", "x_min", "n_tail"])
            w.writerow([fit.method.value, repr(fit.exponent), fit.tail_fraction,
                        repr(fit.x_min), fit.n_tail])
        _emit("fit", exponent=fit.exponent, method=fit.method.value, n_tail=fit.n_tail)
    elif mode == "knn":
        g = _stage("ingest", _load, args.graph, args.integer_ids)
        curve = _stage("stats", knn_curve, g, args.degree, args.neighbors,
                       args.bins_per_decade, args.min_count)
        io.write_binned(args.out, curve)
    elif mode == "condmean":
        g = _stage("ingest", _load, args.graph, args.integer_ids)
        y = _stage("stats", io.read_state, args.state, g, args.column or "x_steady")
        curve = _stage("stats", conditional_mean_log_binned, degree_vector(g, args.degree), y,
                       args.bins_per_decade, args.min_count)
        io.write_binned(args.out, curve)
    else:  # nbrsums
        g = _stage("ingest", _load, args.graph, args.integer_ids)
        s = _stage("stats", io.read_state, args.sales, g, args.column or "s")
        s1, s2 = _stage("stats", weighted_neighbor_sums, g, s)
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node_id", "s", "s1", "s2"])
            for i in range(g.n):
                w.writerow([g.label(i), repr(float(s[i])), repr(float(s1[i])), repr(float(s2[i]))])
    _emit("stats_done", mode=mode, out=args.out)


def cmd_reproduce(args) -> None:
    workdir = args.workdir or f"runs/{args.experiment}-seed{args.seed}"
    metrics = _stage("reproduce", experiments.reproduce, args.experiment, args.seed, workdir,
                     nodes=args.nodes, log=_emit)
    print(Path(workdir) / "report.csv")
    _emit("reproduce_done", **{k: v for k, v in metrics.items() if not isinstance(v, str)})


# parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log", metavar="PATH", help="append JSON-lines log here instead of stderr")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker threads for transport (default ${THREADS_ENV} or 1)")
    common.add_argument("--integer-ids", action="store_true",
                        help="require integer node ids in edge lists")

    p = argparse.ArgumentParser(prog="moneyflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic scale-free digraph")
    d = SynthConfig()
    s.add_argument("--nodes", type=int, default=d.node_count)
    s.add_argument("--alpha-in", type=float, default=d.alpha_in)
    s.add_argument("--alpha-out", type=float, default=d.alpha_out)
    s.add_argument("--k-min", type=int, default=d.k_min)
    s.add_argument("--k-max", type=int, default=d.k_max)
    s.add_argument("--correlation", type=float, default=d.correlation_target,
                   help="target edge-wise degree correlation")
    s.add_argument("--inout-coupling", type=float, default=d.inout_coupling)
    s.add_argument("--rewire-budget", type=float, default=d.rewire_budget)
    s.add_argument("--seed", type=int, default=d.seed)
    s.add_argument("--out", required=True)
    s.add_argument("--report", help="JSON-lines generation report (default <out>.report.jsonl)")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("lscc", parents=[common], help="extract the largest strongly connected component")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_lscc)

    s = sub.add_parser("shuffle", parents=[common], help="degree-preserving edge-swap shuffle")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--multiplier", type=float, default=10.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_shuffle)

    s = sub.add_parser("simulate", parents=[common], help="run transport dynamics to steady state")
    s.add_argument("--graph", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--model", choices=["1", "2"], required=True)
    s.add_argument("--mode", choices=["closed", "open"], default="closed")
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--f", type=float, default=0.0)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iters", type=int, default=100_000)
    s.add_argument("--init", default="uniform:1", help="uniform:<c> or file:<path>")
    s.add_argument("--calibrate", type=float, metavar="TOTAL",
                   help="open mode: choose f so the steady total equals TOTAL")
    s.add_argument("--report", help="JSON-lines run report (default <out>.report.jsonl)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("stats", help="empirical statistics as CSV")
    modes = s.add_subparsers(dest="stats_mode", required=True, metavar="MODE")
    m = modes.add_parser("ccdf", parents=[common], help="value,ccdf")
    m.add_argument("--values", required=True, help="CSV with node_id and a value column")
    m.add_argument("--column")
    m.add_argument("--out", required=True)
    m = modes.add_parser("fit", parents=[common], help="tail exponent")
    m.add_argument("--values", required=True)
    m.add_argument("--column")
    m.add_argument("--method", choices=["hill", "rank"], default="hill")
    m.add_argument("--tail-fraction", type=float, default=0.1)
    m.add_argument("--out", required=True)
    for name, helptext in (("knn", "neighbor degree vs degree"),
                           ("condmean", "binned mean of a node value vs degree")):
        m = modes.add_parser(name, parents=[common], help=helptext)
        m.add_argument("--graph", required=True)
        m.add_argument("--degree", choices=["in", "out", "total"],
                       default="total" if name == "knn" else "in")
        if name == "knn":
            m.add_argument("--neighbors", choices=["in", "out", "both"], default="both")
        else:
            m.add_argument("--state", required=True, help="CSV node_id,<column>")
            m.add_argument("--column")
        m.add_argument("--bins-per-decade", type=int, default=5)
        m.add_argument("--min-count", type=int, default=10)
        m.add_argument("--out", required=True)
    m = modes.add_parser("nbrsums", parents=[common], help="s1/s2 weighted customer-sales sums")
    m.add_argument("--graph", required=True)
    m.add_argument("--sales", required=True, help="CSV node_id,<column>")
    m.add_argument("--column")
    m.add_argument("--out", required=True)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("reproduce", parents=[common], help="run a named experiment preset")
    s.add_argument("--experiment", choices=experiments.EXPERIMENTS, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workdir", help="output directory (default runs/<experiment>-seed<seed>)")
    s.add_argument("--nodes", type=int, help=f"override the preset size ({experiments.ANALOG_NODES})")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    handler = _configure_logging(getattr(args, "log", None))
    if getattr(args, "threads", None) is None:
        args.threads = _default_threads()
    fields = {k: v for k, v in vars(args).items() if k != "func"}
    _emit("start", **fields)
    try:
        args.func(args)
    except StageError as exc:
        _emit("error", stage=exc.stage, message=str(exc.__cause__ or exc))
        print(f"moneyflow: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        _emit("error", stage="io", message=str(exc))
        print(f"moneyflow: stage 'io' failed: {exc}", file=sys.stderr)
        return 1
    finally:
        handler.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
