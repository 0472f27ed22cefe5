"""Benchmarks: scheduled search vs the nested-loop baseline, and
constrained vs unconstrained tracking.

Timings are medians over several iterations after a warmup. A timing row
is only ever reported when both execution paths produced identical result
sets (checked by hashing the event fingerprints); a mismatch aborts the
benchmark instead of reporting numbers for wrong answers.

The report path writes a CSV per benchmark plus rendered figures next to
them.
"""

from __future__ import annotations

import csv
import hashlib
import os
import random
import statistics
import time
from dataclasses import dataclass

from .errors import ProvqlError
from .lang import parse_one
from .model import EntityKind, Event, EventCategory, EventGraph, make_entity
from .naive import naive_search
from .runtime import Session
from .search import execute_search
from .store import Store

CSV_COLUMNS = ("query-id", "mode", "ms-median", "nodes", "edges", "hash")


class BenchIntegrityError(ProvqlError):
    """Two execution paths disagreed; timings would be meaningless."""


@dataclass
class BenchRow:
    query_id: str
    mode: str
    ms_median: float
    nodes: int
    edges: int
    hash: str

    def as_csv(self) -> list:
        return [self.query_id, self.mode, f"{self.ms_median:.3f}", self.nodes, self.edges, self.hash]


def result_hash(graph: EventGraph) -> str:
    digest = hashlib.sha256()
    for fp in sorted(graph.fingerprints()):
        digest.update(repr(fp).encode())
    return digest.hexdigest()[:16]


def _timed(fn, iterations: int, warmup: int):
    graph = None
    for _ in range(warmup):
        graph = fn()
    samples = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        graph = fn()
        samples.append((time.perf_counter() - t0) * 1000.0)
    return statistics.median(samples), graph


def bench_search(store: Store, queries, iterations: int = 5, warmup: int = 1) -> list:
    """Rows for scheduled and naive runs of each (query-id, SearchStmt)."""
    rows = []
    for qid, stmt in queries:
        sched_ms, sched = _timed(lambda: execute_search(stmt, store), iterations, warmup)
        naive_ms, naive = _timed(lambda: naive_search(stmt, store), iterations, warmup)
        sched_hash, naive_hash = result_hash(sched), result_hash(naive)
        if sched_hash != naive_hash:
            raise BenchIntegrityError(
                f"{qid}: scheduled and naive result sets differ ({sched_hash} vs {naive_hash})")
        rows.append(BenchRow(qid, "scheduled", sched_ms, sched.node_count(), sched.edge_count(), sched_hash))
        rows.append(BenchRow(qid, "naive", naive_ms, naive.node_count(), naive.edge_count(), naive_hash))
    return rows


def bench_track(session: Session, cases, iterations: int = 5, warmup: int = 1) -> list:
    """Rows for (query-id, constrained text, unconstrained text) cases.

    Both statements must track from the same start; the constrained result
    is expected to be a subset, so only sizes (not hashes) are compared.
    """
    rows = []
    for qid, constrained, unconstrained in cases:
        for mode, text in (("constrained", constrained), ("unconstrained", unconstrained)):
            stmt = parse_one(text)

            def run():
                return session.execute(stmt).graph

            ms, graph = _timed(run, iterations, warmup)
            rows.append(BenchRow(qid, mode, ms, graph.node_count(), graph.edge_count(), result_hash(graph)))
    return rows


def write_csv(rows, path: str) -> None:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())


def render_figures(search_rows, track_rows, outdir: str) -> list:
    """Bar charts for the two comparisons, written as PNGs."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []

    def grouped(rows, value):
        by_query: dict = {}
        for row in rows:
            by_query.setdefault(row.query_id, {})[row.mode] = value(row)
        return by_query

    if search_rows:
        data = grouped(search_rows, lambda r: r.ms_median)
        qids = sorted(data)
        fig, ax = plt.subplots(figsize=(8, 4.5))
        xs = range(len(qids))
        ax.bar([x - 0.2 for x in xs], [data[q].get("scheduled", 0) for q in qids],
               width=0.4, label="scheduled")
        ax.bar([x + 0.2 for x in xs], [data[q].get("naive", 0) for q in qids],
               width=0.4, label="naive")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(qids, rotation=20, ha="right")
        ax.set_ylabel("median ms")
        ax.set_yscale("log")
        ax.set_title("Search: scheduled vs naive")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(outdir, "search_times.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)

    if track_rows:
        data = grouped(track_rows, lambda r: r.edges)
        qids = sorted(data)
        fig, ax = plt.subplots(figsize=(8, 4.5))
        xs = range(len(qids))
        ax.bar([x - 0.2 for x in xs], [data[q].get("constrained", 0) for q in qids],
               width=0.4, label="constrained")
        ax.bar([x + 0.2 for x in xs], [data[q].get("unconstrained", 0) for q in qids],
               width=0.4, label="unconstrained")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(qids, rotation=20, ha="right")
        ax.set_ylabel("events in result")
        ax.set_title("Tracking: result size with and without constraints")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(outdir, "track_sizes.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)

    return paths


# -- synthetic store for scale runs ---------------------------------------------------

_EXENAMES = ("nginx", "postgres", "python3", "bash", "sshd", "systemd", "chrome",
             "slack", "worker", "gcc", "rsync", "java", "node", "redis")


def build_synthetic_store(n_events: int, seed: int = 7, name: str = "bench") -> Store:
    """A store of random events with a handful of planted needles.

    The needle process reads a specific secret file and writes to one
    socket, giving the selective benchmark queries small known answers.
    """
    rng = random.Random(seed)
    store = Store(name)
    n_proc = max(20, n_events // 100)
    n_file = max(40, n_events // 50)
    n_net = max(10, n_events // 200)

    entities: list = []

    def add(kind: EntityKind, attrs: dict) -> int:
        ent = make_entity(len(entities), kind, attrs)
        entities.append(ent)
        return ent.id

    procs = [
        add(EntityKind.PROCESS, {
            "exename": rng.choice(_EXENAMES), "exepath": "/usr/bin/app", "pid": 1000 + i,
            "user": "svc", "group": "svc", "cmdline": "app --serve",
        })
        for i in range(n_proc)
    ]
    files = [
        add(EntityKind.FILE, {"path": f"/srv/blob/{i // 64}/f{i}.dat", "user": "svc", "group": "svc"})
        for i in range(n_file)
    ]
    nets = [
        add(EntityKind.NETWORK, {
            "srcip": f"10.0.{rng.randrange(16)}.{rng.randrange(1, 255)}",
            "srcport": rng.randrange(1024, 65000),
            "dstip": f"10.9.{rng.randrange(16)}.{rng.randrange(1, 255)}",
            "dstport": rng.choice((80, 443, 5432, 22)),
            "protocol": "tcp",
        })
        for i in range(n_net)
    ]
    needle_proc = add(EntityKind.PROCESS, {
        "exename": "beacon-client", "exepath": "/opt/beacon", "pid": 666,
        "user": "svc", "group": "svc", "cmdline": "beacon-client --pull",
    })
    needle_file = add(EntityKind.FILE, {"path": "/opt/secrets/plan.txt", "user": "root", "group": "root"})
    needle_net = add(EntityKind.NETWORK, {
        "srcip": "10.0.0.3", "srcport": 51515, "dstip": "198.18.0.9", "dstport": 443, "protocol": "tcp",
    })

    day = 86_400 * 1_000_000_000
    events: list = []

    def emit(src: int, dst: int, optype: str, category: EventCategory, ts: int, amount: int):
        events.append(Event(len(events), src, dst, optype, ts, ts + 50_000_000, amount, category))

    # needles: paired read-then-send activity at well-separated times
    for i in range(12):
        ts = (i + 1) * day // 16
        emit(needle_file, needle_proc, "read", EventCategory.PROCESS_TO_FILE, ts, 4096)
        emit(needle_proc, needle_net, "write", EventCategory.PROCESS_TO_NETWORK, ts + 2_000_000_000, 4096)

    while len(events) < n_events:
        ts = rng.randrange(0, day)
        roll = rng.random()
        p = procs[rng.randrange(n_proc)]
        if roll < 0.45:
            emit(files[rng.randrange(n_file)], p, "read", EventCategory.PROCESS_TO_FILE, ts, rng.randrange(1, 65536))
        elif roll < 0.7:
            emit(p, files[rng.randrange(n_file)], "write", EventCategory.PROCESS_TO_FILE, ts, rng.randrange(1, 65536))
        elif roll < 0.8:
            q = procs[rng.randrange(n_proc)]
            if p != q:
                emit(p, q, "fork", EventCategory.PROCESS_TO_PROCESS, ts, 0)
        elif roll < 0.9:
            emit(nets[rng.randrange(n_net)], p, "recvfrom", EventCategory.PROCESS_TO_NETWORK, ts, rng.randrange(1, 16384))
        else:
            emit(p, nets[rng.randrange(n_net)], "sendto", EventCategory.PROCESS_TO_NETWORK, ts, rng.randrange(1, 16384))

    events.sort(key=lambda e: (e.starttime, e.endtime, e.srcid, e.dstid))
    events = [Event(i, e.srcid, e.dstid, e.optype, e.starttime, e.endtime, e.amount, e.category)
              for i, e in enumerate(events)]
    store.commit_batch(entities, events)
    return store


SELECTIVE_QUERIES = (
    ("needle-read",
     'search from db({db}) where p{{exename="beacon-client", type=process}}, '
     'f{{path="/opt/secrets/plan.txt"}} with f[read]->p return *;'),
    ("needle-exfil",
     'search from db({db}) where p{{exename="beacon-client", type=process}}, '
     'f{{path like "/opt/secrets/%"}}, n{{dstip="198.18.0.9", type=network}} '
     'with f[read]->p &&[<=5s] p[write]->n return *;'),
    ("needle-or",
     'search from db({db}) where p{{exename="beacon-client", type=process}}, '
     'f{{path="/opt/secrets/plan.txt"}}, n{{dstip="198.18.0.9", type=network}} '
     'with f[read]->p || p[write]->n return *;'),
)


def selective_queries(db_name: str) -> list:
    return [(qid, parse_one(text.format(db=db_name))) for qid, text in SELECTIVE_QUERIES]
