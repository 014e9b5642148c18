"""Command-line driver.

Commands:

    analyze      whole-program analysis; writes a fact store and prints a
                 JSON run report
    diff         compare two CFG files and write a change file
    incremental  apply a change file to an existing store (naive or
                 optimized mode); prints an impact + run report
    verify       run all four solvers and check they agree vertex by vertex

Exit codes: 0 success/verified, 1 verification divergence, 2 usage or
input/store errors, 3 non-convergence. Reports carry no wall-clock fields,
so identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine, incremental, sequential
from .analyses import analysis_from_fingerprint, const_prop, lru_must_cache, reaching_defs
from .cfg import diff_graphs, parse_changes_for_new, parse_graph, render_changes
from .engine import Algorithm, EngineConfig
from .errors import LatticeflowError, NonConvergenceError
from .lattice import Analysis
from .store import FactStore, write_result

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3

# Analysis name -> factory(args). Extensible: tests register synthetic
# analyses here to drive engine failure paths through the real CLI.
ANALYSES = {
    "rd": lambda args: reaching_defs(),
    "cp": lambda args: const_prop(),
    "cache": lambda args: lru_must_cache(sets=args.sets, assoc=args.assoc),
}

_CHAOTIC_SEED = 0x5EED


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (LatticeflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeflow",
        description="Interprocedural dataflow analysis on a partitioned "
                    "superstep engine, with incremental re-analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="whole-program analysis")
    p_an.add_argument("--cfg", required=True, help="CFG file")
    p_an.add_argument("--analysis", required=True,
                      help="client analysis (rd, cp, cache)")
    p_an.add_argument("--algo", choices=["classic", "opt"], default="opt")
    p_an.add_argument("--workers", type=int, default=1)
    p_an.add_argument("--store", required=True, help="output fact-store path")
    p_an.add_argument("--sets", type=int, default=4, help="cache sets (cache analysis)")
    p_an.add_argument("--assoc", type=int, default=2,
                      help="cache associativity (cache analysis)")
    p_an.add_argument("--superstep-cap", type=int, default=None)
    p_an.add_argument("--report", default=None, help="also write the report here")
    p_an.set_defaults(func=cmd_analyze)

    p_diff = sub.add_parser("diff", help="diff two CFG files into a change file")
    p_diff.add_argument("--old", required=True)
    p_diff.add_argument("--new", required=True)
    p_diff.add_argument("--out", required=True)
    p_diff.set_defaults(func=cmd_diff)

    p_inc = sub.add_parser("incremental", help="incremental re-analysis")
    p_inc.add_argument("--cfg", required=True, help="updated CFG file")
    p_inc.add_argument("--changes", required=True, help="change file (old -> updated)")
    p_inc.add_argument("--store", required=True, help="fact store from the old version")
    p_inc.add_argument("--mode", choices=["naive", "opt"], default="opt")
    p_inc.add_argument("--workers", type=int, default=1)
    p_inc.add_argument("--superstep-cap", type=int, default=None)
    p_inc.add_argument("--report", default=None)
    p_inc.set_defaults(func=cmd_incremental)

    p_ver = sub.add_parser("verify", help="cross-check all four solvers")
    p_ver.add_argument("--cfg", required=True)
    p_ver.add_argument("--analysis", required=True)
    p_ver.add_argument("--workers", type=int, default=2)
    p_ver.add_argument("--sets", type=int, default=4)
    p_ver.add_argument("--assoc", type=int, default=2)
    p_ver.add_argument("--seed", type=int, default=_CHAOTIC_SEED,
                       help="chaotic-order seed")
    p_ver.set_defaults(func=cmd_verify)

    return parser


def _make_analysis(args) -> Analysis:
    factory = ANALYSES.get(args.analysis)
    if factory is None:
        raise LatticeflowError(
            f"unknown analysis {args.analysis!r}; expected one of {sorted(ANALYSES)}")
    return factory(args)


def _load_graph(path: str):
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def _emit_report(report: dict, report_path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if report_path:
        Path(report_path).write_text(text + "\n", encoding="utf-8")


def cmd_analyze(args) -> int:
    graph = _load_graph(args.cfg)
    analysis = _make_analysis(args)
    config = EngineConfig(
        worker_count=args.workers,
        algorithm=Algorithm.CLASSIC if args.algo == "classic" else Algorithm.OPTIMIZED,
        superstep_cap=args.superstep_cap)
    result = engine.run(graph, analysis, config)
    store = FactStore.create(args.store, analysis)
    write_result(store, result.in_facts, result.out_facts)
    report = {
        "command": "analyze",
        "analysis": analysis.name,
        "algorithm": config.algorithm.value,
        "workers": config.worker_count,
        "graph": {"vertices": len(graph.vertices), "edges": len(graph.edges)},
        "run": result.to_report(),
    }
    _emit_report(report, args.report)
    return EXIT_OK


def cmd_diff(args) -> int:
    old = _load_graph(args.old)
    new = _load_graph(args.new)
    batch = diff_graphs(old, new)
    Path(args.out).write_text(render_changes(batch), encoding="utf-8")
    print(f"{len(batch)} atomic changes written to {args.out}")
    return EXIT_OK


def cmd_incremental(args) -> int:
    graph = _load_graph(args.cfg)
    fingerprint = FactStore.read_fingerprint(args.store)
    analysis = analysis_from_fingerprint(fingerprint)
    store = FactStore.open(args.store, analysis)
    config = EngineConfig(worker_count=args.workers, superstep_cap=args.superstep_cap)
    batch = parse_changes_for_new(Path(args.changes).read_text(encoding="utf-8"), graph)

    runner = (incremental.run_incremental_optimized if args.mode == "opt"
              else incremental.run_incremental_naive)
    run = runner(graph, batch, store, analysis, config)

    impact = run.impact
    n_vertices = max(1, len(graph.vertices))
    n_edges = max(1, len(graph.edges))
    sub = impact.sub_graph
    report = {
        "command": "incremental",
        "mode": args.mode,
        "analysis": analysis.name,
        "atomic_changes": len(batch),
        "affected": {
            "all": len(impact.affected_all),
            "add": len(impact.affected_add),
            "delete": len(impact.affected_delete),
            "change": len(impact.affected_change),
            "reused": len(impact.reuse),
            "purged": len(run.purged),
        },
        "sub_cfg": {
            "vertices": len(sub.vertices),
            "edges": len(sub.edges),
            "vertex_pct": round(100.0 * len(sub.vertices) / n_vertices, 3),
            "edge_pct": round(100.0 * len(sub.edges) / n_edges, 3),
        },
        "run": run.result.to_report(),
    }
    _emit_report(report, args.report)
    return EXIT_OK


def cmd_verify(args) -> int:
    graph = _load_graph(args.cfg)
    analysis = _make_analysis(args)
    config = EngineConfig(worker_count=args.workers)
    runs = [
        ("classic", engine.run_classic(graph, analysis, config)),
        ("optimized", engine.run_optimized(graph, analysis, config)),
        ("sequential", sequential.run_sequential(graph, analysis)),
        ("chaotic", sequential.run_chaotic(graph, analysis, args.seed)),
    ]
    base_name, base = runs[0]
    for name, result in runs[1:]:
        for vid in sorted(graph.vertices):
            for slot, facts, base_facts in (("IN", result.in_facts, base.in_facts),
                                            ("OUT", result.out_facts, base.out_facts)):
                if facts[vid] != base_facts[vid]:
                    print(f"divergence at vertex {vid}: {name} {slot} != "
                          f"{base_name} {slot}")
                    return EXIT_DIVERGED
    print(f"verified: 4 solvers agree on {len(graph.vertices)} vertices "
          f"({analysis.name})")
    return EXIT_OK
