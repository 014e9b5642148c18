"""Partitioned synchronous execution of the two worklist algorithms.

The graph's vertices are split into partitions by ``vertex_id mod
worker_count``; each partition's state (incoming/outgoing facts, pending
inbox, active flags) is owned by exactly one worker. Execution proceeds in
globally barriered supersteps: within a superstep the partitions run
independently (concurrently when ``worker_count > 1``), and everything a
vertex produced in superstep t becomes visible to other vertices only at
superstep t+1.

Two algorithms share this skeleton and reach the same fixed point:

* classic  -- an active vertex pulls the complete outgoing-fact set of all
  its predecessors (snapshot reads from the previous barrier), re-merges it
  from the initial element, transfers, and on a changed result activates
  its successors.
* optimized -- an active vertex folds only the messages received at the
  barrier into its retained incoming fact; on a changed result it pushes
  its new outgoing fact as a message to each successor. Commutativity and
  associativity of the client merge make the accumulated incoming fact
  equal to the classic re-merge.

A vertex that has never produced an outgoing fact holds the sentinel
``None``; the first computation at a vertex therefore always propagates.
Gathered facts are folded in ascending sender order, which together with
merge commutativity makes runs bit-reproducible for any worker count.

``seed_and_run`` is the optimized algorithm with caller-supplied
superstep-0 state (per-vertex facts, pending messages, active set); the
incremental pipeline uses it to resume analysis on a sub-graph.

Termination is only guaranteed for monotone clients over finite-height
lattices, so every run carries a superstep cap (default ``10 * |V|``) and
raises ``NonConvergenceError`` instead of looping.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .cfg import SuperGraph, VertexId
from .errors import GraphError, NonConvergenceError, SeedMismatchError
from .lattice import Analysis, Fact


class Algorithm(Enum):
    CLASSIC = "classic"
    OPTIMIZED = "optimized"


@dataclass(frozen=True)
class EngineConfig:
    worker_count: int = 1
    algorithm: Algorithm = Algorithm.OPTIMIZED
    superstep_cap: int | None = None  # None: 10 * |V|

    def __post_init__(self):
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.superstep_cap is not None and self.superstep_cap < 1:
            raise ValueError("superstep_cap must be >= 1")

    def cap_for(self, vertex_count: int) -> int:
        if self.superstep_cap is not None:
            return self.superstep_cap
        return max(1, 10 * vertex_count)


@dataclass
class AnalysisResult:
    """Converged facts plus run accounting.

    ``messages_sent`` counts fact traffic: facts pushed to successors for
    the optimized algorithm, facts pulled from predecessor snapshots for
    the classic one. ``supersteps`` counts barriered rounds (worklist pops
    for the sequential runners).
    """

    in_facts: dict[VertexId, Fact]
    out_facts: dict[VertexId, Fact]
    supersteps: int
    messages_sent: int
    fact_updates: int
    active_per_superstep: list[int] = field(default_factory=list)

    def to_report(self) -> dict:
        return {
            "supersteps": self.supersteps,
            "messages_sent": self.messages_sent,
            "fact_updates": self.fact_updates,
            "active_per_superstep": list(self.active_per_superstep),
        }

    def facts_equal(self, other: "AnalysisResult") -> bool:
        return self.in_facts == other.in_facts and self.out_facts == other.out_facts


class _Partition:
    """Vertex state owned by one worker."""

    __slots__ = ("pid", "vertex_ids", "in_facts", "out_facts", "active", "inbox")

    def __init__(self, pid: int, vertex_ids: tuple[VertexId, ...]):
        self.pid = pid
        self.vertex_ids = vertex_ids
        self.in_facts: dict[VertexId, Fact] = {}
        self.out_facts: dict[VertexId, Fact | None] = {}
        self.active: set[VertexId] = set()
        self.inbox: dict[VertexId, list[tuple[VertexId, Fact]]] = {}


def run_classic(g: SuperGraph, analysis: Analysis, config: EngineConfig) -> AnalysisResult:
    """Whole-program analysis with the gather-all worklist algorithm."""
    seeds = _whole_program_seeds(g, analysis)
    return _execute(g, analysis, config, Algorithm.CLASSIC, *seeds)


def run_optimized(g: SuperGraph, analysis: Analysis, config: EngineConfig) -> AnalysisResult:
    """Whole-program analysis with the delta-message worklist algorithm."""
    seeds = _whole_program_seeds(g, analysis)
    return _execute(g, analysis, config, Algorithm.OPTIMIZED, *seeds)


def run(g: SuperGraph, analysis: Analysis, config: EngineConfig) -> AnalysisResult:
    """Dispatch on ``config.algorithm``."""
    if config.algorithm is Algorithm.CLASSIC:
        return run_classic(g, analysis, config)
    return run_optimized(g, analysis, config)


def seed_and_run(g: SuperGraph, analysis: Analysis, config: EngineConfig,
                 initial_in: Mapping[VertexId, Fact],
                 initial_out: Mapping[VertexId, Fact | None],
                 initial_messages: Mapping[VertexId, Sequence[tuple[VertexId, Fact]]],
                 initial_active: Sequence[VertexId]) -> AnalysisResult:
    """The optimized algorithm with caller-supplied superstep-0 state.

    ``initial_in``/``initial_out`` must cover exactly ``g``'s vertices;
    message targets and active vertices must belong to ``g``. Message
    sender ids may lie outside the graph (facts seeded from storage for
    boundary predecessors); they only canonicalize gather order.
    """
    vids = set(g.vertices)
    if set(initial_in) != vids:
        raise SeedMismatchError("initial_in must cover exactly the graph's vertices")
    if set(initial_out) != vids:
        raise SeedMismatchError("initial_out must cover exactly the graph's vertices")
    bad_targets = set(initial_messages) - vids
    if bad_targets:
        raise SeedMismatchError(f"messages target unknown vertices {sorted(bad_targets)}")
    bad_active = set(initial_active) - vids
    if bad_active:
        raise SeedMismatchError(f"active set references unknown vertices {sorted(bad_active)}")
    return _execute(g, analysis, config, Algorithm.OPTIMIZED,
                    dict(initial_in), dict(initial_out),
                    {k: list(v) for k, v in initial_messages.items()},
                    set(initial_active))


def _whole_program_seeds(g: SuperGraph, analysis: Analysis):
    if g.vertices and not g.entries:
        raise GraphError("graph has no entry vertices")
    initial_in = {}
    initial_out: dict[VertexId, Fact | None] = {}
    for vid in g.vertices:
        base = analysis.entry_fact() if vid in g.entries else analysis.initial()
        initial_in[vid] = base
        initial_out[vid] = None
    return initial_in, initial_out, {}, set(g.entries)


def _execute(g: SuperGraph, analysis: Analysis, config: EngineConfig,
             algorithm: Algorithm,
             initial_in: dict[VertexId, Fact],
             initial_out: dict[VertexId, Fact | None],
             initial_messages: dict[VertexId, list[tuple[VertexId, Fact]]],
             initial_active: set[VertexId]) -> AnalysisResult:
    classic = algorithm is Algorithm.CLASSIC
    n_parts = config.worker_count
    partitions = _build_partitions(g, n_parts, initial_in, initial_out,
                                   initial_messages, initial_active)
    # Classic gathers pull from the state as of the previous barrier.
    snapshot: dict[VertexId, Fact | None] = dict(initial_out) if classic else {}
    bases = {vid: analysis.entry_fact() if vid in g.entries else analysis.initial()
             for vid in g.vertices} if classic else {}

    cap = config.cap_for(len(g.vertices))
    supersteps = 0
    messages_sent = 0
    fact_updates = 0
    active_counts: list[int] = []

    pool = ThreadPoolExecutor(max_workers=n_parts) if n_parts > 1 else None
    try:
        while True:
            active_now = sum(len(p.active) for p in partitions)
            if active_now == 0:
                break
            if supersteps >= cap:
                raise NonConvergenceError(
                    f"no fixed point after {supersteps} supersteps "
                    f"(cap {cap}); the analysis may not be monotone",
                    steps=supersteps)
            supersteps += 1
            active_counts.append(active_now)

            def step(p: _Partition):
                return _step_partition(p, g, analysis, classic, snapshot, bases, n_parts)

            if pool is not None:
                outcomes = list(pool.map(step, partitions))
            else:
                outcomes = [step(p) for p in partitions]

            # Barrier: route messages and activations in partition order.
            for (outgoing, activated, changed, traffic, updates) in outcomes:
                messages_sent += traffic
                fact_updates += updates
                if classic:
                    snapshot.update(changed)
                for (dst, sender, fact) in outgoing:
                    target = partitions[dst % n_parts]
                    target.inbox.setdefault(dst, []).append((sender, fact))
                    target.active.add(dst)
                for dst in activated:
                    partitions[dst % n_parts].active.add(dst)
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    in_facts: dict[VertexId, Fact] = {}
    out_facts: dict[VertexId, Fact] = {}
    for p in partitions:
        in_facts.update(p.in_facts)
        for vid, out in p.out_facts.items():
            out_facts[vid] = analysis.initial() if out is None else out
    # Quiescence: nothing active, nothing pending.
    assert all(not p.active and not p.inbox for p in partitions)
    return AnalysisResult(in_facts=in_facts, out_facts=out_facts,
                          supersteps=supersteps, messages_sent=messages_sent,
                          fact_updates=fact_updates,
                          active_per_superstep=active_counts)


def _build_partitions(g: SuperGraph, n_parts: int,
                      initial_in: dict[VertexId, Fact],
                      initial_out: dict[VertexId, Fact | None],
                      initial_messages: dict[VertexId, list[tuple[VertexId, Fact]]],
                      initial_active: set[VertexId]) -> list[_Partition]:
    by_pid: dict[int, list[VertexId]] = {pid: [] for pid in range(n_parts)}
    for vid in sorted(g.vertices):
        by_pid[vid % n_parts].append(vid)
    partitions = []
    for pid in range(n_parts):
        p = _Partition(pid, tuple(by_pid[pid]))
        for vid in p.vertex_ids:
            p.in_facts[vid] = initial_in[vid]
            p.out_facts[vid] = initial_out[vid]
        partitions.append(p)
    for dst, msgs in initial_messages.items():
        p = partitions[dst % n_parts]
        p.inbox[dst] = list(msgs)
        p.active.add(dst)  # a pending message activates its target
    for vid in initial_active:
        partitions[vid % n_parts].active.add(vid)
    return partitions


def _step_partition(p: _Partition, g: SuperGraph, analysis: Analysis, classic: bool,
                    snapshot: dict[VertexId, Fact | None],
                    bases: dict[VertexId, Fact], n_parts: int):
    """Process one partition's active vertices for one superstep.

    Touches only partition-local state plus read-only shared structures;
    facts that cross a partition boundary are copied (value semantics).
    """
    outgoing: list[tuple[VertexId, VertexId, Fact]] = []
    activated: list[VertexId] = []
    changed: list[tuple[VertexId, Fact]] = []
    traffic = 0
    updates = 0
    for k in sorted(p.active):
        if classic:
            gathered = []
            for q in g.preds(k):  # preds are id-sorted: canonical merge order
                out_q = snapshot[q]
                if out_q is not None:
                    gathered.append(out_q.copy() if q % n_parts != p.pid else out_q)
            traffic += len(gathered)
            new_in = analysis.merge(gathered, bases[k])
        else:
            msgs = p.inbox.pop(k, [])
            msgs.sort(key=lambda m: m[0])
            new_in = analysis.merge([fact for (_, fact) in msgs], p.in_facts[k])
        new_out = analysis.transfer(g.vertices[k].stmts, new_in)
        p.in_facts[k] = new_in
        if analysis.propagate(p.out_facts[k], new_out):
            p.out_facts[k] = new_out
            updates += 1
            succs = g.succs(k)
            if classic:
                changed.append((k, new_out))
                activated.extend(succs)
            else:
                for d in succs:
                    fact = new_out.copy() if d % n_parts != p.pid else new_out
                    outgoing.append((d, k, fact))
                traffic += len(succs)
    p.active = set()
    return outgoing, activated, changed, traffic, updates
