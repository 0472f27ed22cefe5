"""Shared builders for tests: small stores, random stores, random queries."""

from __future__ import annotations

import random

from provql.lang import ast
from provql.model import Entity, EntityKind, Event, EventCategory, make_entity
from provql.store import Store

SEC = 1_000_000_000

EXENAME_POOL = ("bash", "curl", "scp", "vscode", "nginx", "python3", "worker", "gcc", "sshd", "tar")
PATH_POOL = tuple(f"/srv/d{i // 6}/file{i}.dat" for i in range(24)) + (
    "/etc/passwd", "/tmp/out.tar", "/usr/lib/libz.so", "/home/user/notes.md",
)
IP_POOL = ("10.0.0.1", "10.0.0.2", "172.16.3.9", "198.51.100.7", "20.69.152.188", "192.0.2.4")

READ_LIKE = ("read", "readv", "recvfrom")
WRITE_LIKE = ("write", "writev", "sendto")


class StoreBuilder:
    """Direct store construction for tests, bypassing JSONL ingest."""

    def __init__(self, name: str = "test"):
        self.name = name
        self.entities: list = []
        self.events: list = []
        self._keys: dict = {}

    def entity(self, kind: EntityKind, **attrs) -> int:
        ent = make_entity(len(self.entities), kind, attrs)
        known = self._keys.get((kind, ent.key))
        if known is not None:
            return known
        self._keys[(kind, ent.key)] = ent.id
        self.entities.append(ent)
        return ent.id

    def process(self, exename: str, pid: int, **extra) -> int:
        attrs = {"exename": exename, "exepath": f"/usr/bin/{exename}", "pid": pid,
                 "user": "u", "group": "u", "cmdline": exename}
        attrs.update(extra)
        return self.entity(EntityKind.PROCESS, **attrs)

    def file(self, path: str, **extra) -> int:
        attrs = {"path": path, "user": "u", "group": "u"}
        attrs.update(extra)
        return self.entity(EntityKind.FILE, **attrs)

    def sock(self, srcip: str, srcport: int, dstip: str, dstport: int) -> int:
        return self.entity(EntityKind.NETWORK, srcip=srcip, srcport=srcport,
                           dstip=dstip, dstport=dstport, protocol="tcp")

    def event(self, src: int, dst: int, optype: str, ts: int, te: int = None,
              amount: int = 0, note=None) -> int:
        te = ts + SEC // 20 if te is None else te
        src_kind = self.entities[src].kind
        dst_kind = self.entities[dst].kind
        object_kind = dst_kind if src_kind is EntityKind.PROCESS else src_kind
        category = (
            EventCategory.PROCESS_TO_FILE if object_kind is EntityKind.FILE
            else EventCategory.PROCESS_TO_PROCESS if object_kind is EntityKind.PROCESS
            else EventCategory.PROCESS_TO_NETWORK
        )
        ev = Event(len(self.events), src, dst, optype, ts, te, amount, category, note)
        self.events.append(ev)
        return ev.id

    def build(self) -> Store:
        store = Store(self.name)
        order = sorted(range(len(self.events)),
                       key=lambda i: (self.events[i].starttime, self.events[i].endtime, i))
        events = []
        for new_id, old_id in enumerate(order):
            e = self.events[old_id]
            events.append(Event(new_id, e.srcid, e.dstid, e.optype, e.starttime,
                                e.endtime, e.amount, e.category, e.note))
        store.commit_batch(self.entities, events)
        return store


def chain_store() -> Store:
    """file1 -> proc1 -> file2, the minimal two-hop dependency chain."""
    b = StoreBuilder("chain")
    f1 = b.file("/a/f1")
    p1 = b.process("worker", 100)
    f2 = b.file("/a/f2")
    b.event(f1, p1, "read", ts=10 * SEC, te=11 * SEC)
    b.event(p1, f2, "write", ts=20 * SEC, te=21 * SEC)
    return b.build()


def random_store(rng: random.Random, n_events: int, name: str = "rand") -> Store:
    """Random but category-consistent store with small attribute pools."""
    b = StoreBuilder(name)
    n_proc = max(3, n_events // 12)
    n_file = max(3, n_events // 8)
    n_net = max(2, n_events // 25)
    procs = [b.process(rng.choice(EXENAME_POOL), 100 + i) for i in range(n_proc)]
    files = [b.file(rng.choice(PATH_POOL) + f".{i}") for i in range(n_file)]
    nets = [b.sock(rng.choice(IP_POOL), rng.randrange(1024, 60000),
                   rng.choice(IP_POOL), rng.choice((80, 443, 22)))
            for _ in range(n_net)]
    horizon = 2_000 * SEC
    for _ in range(n_events):
        ts = rng.randrange(0, horizon)
        te = ts + rng.randrange(1, SEC)
        p = rng.choice(procs)
        roll = rng.random()
        if roll < 0.35:
            b.event(rng.choice(files), p, rng.choice(("read", "readv")), ts, te,
                    amount=rng.randrange(0, 4096))
        elif roll < 0.6:
            b.event(p, rng.choice(files), rng.choice(("write", "writev", "rename")), ts, te,
                    amount=rng.randrange(0, 4096))
        elif roll < 0.72:
            q = rng.choice(procs)
            if p == q:
                continue
            b.event(p, q, rng.choice(("fork", "clone", "execve")), ts, te)
        elif roll < 0.86:
            b.event(rng.choice(nets), p, rng.choice(("read", "recvfrom")), ts, te,
                    amount=rng.randrange(0, 9000))
        else:
            b.event(p, rng.choice(nets), rng.choice(("write", "sendto")), ts, te,
                    amount=rng.randrange(0, 9000))
    return b.build()


# -- random expressions and statements ---------------------------------------------

def _string_atom(rng: random.Random) -> ast.Comparison:
    roll = rng.random()
    if roll < 0.3:
        return ast.Comparison("name", "=", rng.choice(EXENAME_POOL))
    if roll < 0.5:
        return ast.Comparison("exename", rng.choice(("=", "!=")), rng.choice(EXENAME_POOL))
    if roll < 0.65:
        return ast.Comparison("path", "like", rng.choice(("/srv/d0/%", "%.dat%", "/etc/%", "%.tar%")))
    if roll < 0.8:
        return ast.Comparison(rng.choice(("srcip", "dstip")), "=", rng.choice(IP_POOL))
    return ast.Comparison("type", "=", rng.choice(("process", "file", "network")))


def _numeric_atom(rng: random.Random) -> ast.Comparison:
    attr = rng.choice(("pid", "srcport", "dstport", "id"))
    op = rng.choice((">", ">=", "<", "<=", "=", "!="))
    value = rng.randrange(0, 200) if attr in ("pid", "id") else rng.randrange(0, 65536)
    return ast.Comparison(attr, op, value)


def random_entity_expr(rng: random.Random, depth: int = 0) -> ast.Expr:
    roll = rng.random()
    if depth >= 2 or roll < 0.55:
        atom = _string_atom(rng) if rng.random() < 0.75 else _numeric_atom(rng)
        if rng.random() < 0.12:
            return ast.Not(atom)
        return atom
    op = "&&" if rng.random() < 0.7 else "||"
    return ast.BoolOp(op, random_entity_expr(rng, depth + 1), random_entity_expr(rng, depth + 1))


def random_event_expr(rng: random.Random) -> ast.Expr:
    roll = rng.random()
    if roll < 0.5:
        return ast.Comparison("optype", rng.choice(("=", "!=")),
                              rng.choice(READ_LIKE + WRITE_LIKE + ("fork",)))
    if roll < 0.8:
        return ast.Comparison("amount", rng.choice((">", "<=")), rng.randrange(0, 5000))
    return ast.BoolOp("||",
                      ast.Comparison("optype", "=", rng.choice(READ_LIKE)),
                      ast.Comparison("amount", ">", rng.randrange(0, 3000)))


def selective_node_expr(rng: random.Random) -> ast.Expr:
    """At least one equality so oracle candidate lists stay small."""
    base = _string_atom(rng)
    while base.op not in ("=", "like"):
        base = _string_atom(rng)
    if rng.random() < 0.4:
        extra = _numeric_atom(rng) if rng.random() < 0.5 else _string_atom(rng)
        return ast.BoolOp("&&", base, extra)
    return base


# possible (source kinds, sink kinds) per operation, mirroring flow direction
_OPTYPE_KINDS = {
    "read": (("file", "network"), ("process",)),
    "readv": (("file", "network"), ("process",)),
    "recvfrom": (("network",), ("process",)),
    "write": (("process",), ("file", "network")),
    "writev": (("process",), ("file", "network")),
    "sendto": (("process",), ("network",)),
    "rename": (("process",), ("file",)),
    "fork": (("process",), ("process",)),
    "clone": (("process",), ("process",)),
    "execve": (("process",), ("file", "process")),
    None: (("process", "file", "network"), ("process", "file", "network")),
}

_FILE_NAME_POOL = tuple(sorted({p.rsplit("/", 1)[-1] for p in PATH_POOL}))


def _kinded_atom(rng: random.Random, kind: str) -> ast.Comparison:
    if kind == "process":
        roll = rng.random()
        if roll < 0.4:
            return ast.Comparison("name", "=", rng.choice(EXENAME_POOL))
        if roll < 0.7:
            return ast.Comparison("exename", rng.choice(("=", "!=")), rng.choice(EXENAME_POOL))
        if roll < 0.85:
            return ast.Comparison("pid", rng.choice((">", "<", ">=", "<=")), rng.randrange(90, 380))
        return ast.Comparison("cmdline", "like", rng.choice(EXENAME_POOL)[:3] + "%")
    if kind == "file":
        roll = rng.random()
        if roll < 0.55:
            return ast.Comparison("path", "like", rng.choice(("/srv/d0/%", "/srv/d1/%", "%.dat%", "/etc/%")))
        if roll < 0.8:
            return ast.Comparison("name", "=", rng.choice(_FILE_NAME_POOL))
        return ast.Comparison("path", "!=", "/nothing")
    roll = rng.random()
    if roll < 0.45:
        return ast.Comparison("srcip", "=", rng.choice(IP_POOL))
    if roll < 0.8:
        return ast.Comparison("dstip", "=", rng.choice(IP_POOL))
    return ast.Comparison("dstport", rng.choice(("=", ">", "<")), rng.choice((80, 443, 22, 30000)))


def _kinded_decl(rng: random.Random, kinds: tuple) -> ast.Expr:
    kind = rng.choice(kinds)
    expr: ast.Expr = _kinded_atom(rng, kind)
    if rng.random() < 0.45:
        expr = ast.BoolOp("&&", ast.Comparison("type", "=", kind), expr)
    if rng.random() < 0.25:
        expr = ast.BoolOp(rng.choice(("&&", "||")), expr, _kinded_atom(rng, kind))
    if rng.random() < 0.08:
        expr = ast.BoolOp("&&", expr, ast.Not(_kinded_atom(rng, kind)))
    return expr


def random_search_stmt(rng: random.Random, source_name: str, max_rels: int = 3) -> ast.SearchStmt:
    """Random statement whose declarations usually suit the operations used.

    A small fraction of declarations stay deliberately contradictory so the
    empty-result path is exercised too.
    """
    n_rels = rng.randrange(1, max_rels + 1)
    var_names = [f"v{i}" for i in range(n_rels + 2)]
    used: list = []

    rels = []
    for i in range(n_rels):
        if i > 0 and used and rng.random() < 0.75:
            shared = rng.choice(used)
            other = rng.choice([v for v in var_names if v != shared])
            pair = (shared, other) if rng.random() < 0.5 else (other, shared)
        else:
            pair = tuple(rng.sample(var_names, 2))
        used.extend(pair)
        optype = rng.choice(READ_LIKE + WRITE_LIKE + ("fork", "execve", None, None))
        rels.append(ast.SearchRel(pair[0], optype, pair[1]))

    tree: ast.RelExpr = rels[0]
    for rel in rels[1:]:
        if rng.random() < 0.72:
            window = None
            if rng.random() < 0.5:
                window = ast.Window(rng.choice(("<", "<=")), rng.randrange(1, 60),
                                    rng.choice(("s", "ms", "m")))
            tree = ast.RelOp("&&", tree, rel, window)
        else:
            tree = ast.RelOp("||", tree, rel)

    # allowed kinds per variable, intersected over every relation touching it
    allowed = {v: {"process", "file", "network"} for v in var_names}
    for rel in rels:
        src_kinds, dst_kinds = _OPTYPE_KINDS[rel.optype]
        allowed[rel.from_var] &= set(src_kinds)
        allowed[rel.to_var] &= set(dst_kinds)

    nodes = []
    for v in sorted(set(used)):
        kinds = tuple(sorted(allowed[v])) or ("process", "file", "network")
        if rng.random() < 0.08:
            nodes.append(ast.NodeDecl(v, selective_node_expr(rng)))
        else:
            nodes.append(ast.NodeDecl(v, _kinded_decl(rng, kinds)))
    return ast.SearchStmt(ast.DbSource(source_name), nodes, tree, ast.ReturnSpec(None))


GRAMMAR_CORPUS = [
    'search from db(h) where a{name="curl"} with a[read]->a return *;',
    'search from db(h) where a{name="curl", type=process}, b{path like "%.tar"} with b[read]->a return * as g1;',
    'search from db(h) where a{type=process}, b{type=network} with a[sendto]->b return *;',
    'search from db(h) where a{exename!="bash" && pid > 10}, b{path="/etc/passwd"} with b[read]->a return *;',
    'search from db(h) where a{!(name="x") || type=file}, b{srcip="10.0.0.1"} with b[recvfrom]->a return * as out;',
    'search from g2 where a{name="scp", type=process}, b{type=network} with b[read]->a return *;',
    'search from db(h) where a{type=process}, b{type=file}, c{type=network} '
    'with b[read]->a &&[<1s] a[write]->c return *;',
    'search from db(h) where a{type=process}, b{type=file}, c{type=network} '
    'with b[read]->a &&[<=500ms] a[write]->c || a[sendto]->c return *;',
    'search from db(h) where a{pid >= 1 && pid <= 99999}, b{dstport=443} with a[write]->b return *;',
    'search from db(h) where a{cmdline like "%--insecure%"}, b{type=network} with a[write]->b return *;',
    'back track where exename="curl" from db(h);',
    'back track where exename="curl" from db(host1) exclude nodes where name="vscode" limit step 2;',
    'g9 = back track poi1 from db(h) include nodes where type=process, edges where optype="read";',
    'forward track where srcip="20.69.152.188" from g4;',
    'forward track g1 from db(h) exclude nodes where path like "/usr/lib/%", edges where amount <= 0 limit step 3, time 10;',
    'x = forward track where name="lighttpd" from db(h) limit time 30;',
    'g4 = g2 | g3;',
    'g5 = (g1 | g2) & g3;',
    'g6 = g1 - (g2 & g3);',
    'display g5;',
    'display (g1 | g2) - g3;',
    'export g5 as "out/attack.json";',
    'export g1 & g2 as "overlap.dot";',
    'back track where starttime > 0 from db(h) exclude edges where endtime < 100;',
]
