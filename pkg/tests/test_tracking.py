import random

from provql.lang import ast, parse_one
from provql.search import execute_search
from provql.tracking import TrackRequest, resolve_poi, track

from helpers import StoreBuilder, chain_store, random_entity_expr, random_event_expr, random_store
from oracles import fixed_point_track, mirror_store

SEC = 1_000_000_000


def run(store, direction, seeds, **kw):
    req = TrackRequest(direction=direction, seeds=list(seeds), **kw)
    graph, truncated = track(req, store)
    return graph, truncated


def event_ids(graph):
    return {k[1] for k in graph.events}


def test_backward_chain_collects_both_events():
    store = chain_store()
    f2 = store.scan_entities(pred=ast.Comparison("path", "=", "/a/f2"))[0]
    graph, _ = run(store, "back", [(("chain", f2), None)])
    assert event_ids(graph) == {0, 1}
    assert graph.node_count() == 3


def test_backward_respects_time_rule():
    # first event starts only after the second one ended: no dependency
    b = StoreBuilder("c2")
    f1, p1, f2 = b.file("/a/f1"), b.process("worker", 100), b.file("/a/f2")
    b.event(f1, p1, "read", ts=30 * SEC, te=31 * SEC)
    b.event(p1, f2, "write", ts=20 * SEC, te=21 * SEC)
    store = b.build()
    f2_id = store.scan_entities(pred=ast.Comparison("path", "=", "/a/f2"))[0]
    graph, _ = run(store, "back", [(("c2", f2_id), None)])
    assert [ev.optype for ev in graph.events.values()] == ["write"]


def test_forward_chain():
    store = chain_store()
    f1 = store.scan_entities(pred=ast.Comparison("path", "=", "/a/f1"))[0]
    graph, _ = run(store, "forward", [(("chain", f1), None)])
    assert event_ids(graph) == {0, 1}


def test_step_limit_counts_event_hops():
    b = StoreBuilder("deep")
    nodes = [b.file(f"/f{i}") if i % 2 == 0 else b.process("w", i) for i in range(6)]
    for i in range(5):
        b.event(nodes[i], nodes[i + 1], "read" if i % 2 == 0 else "write",
                ts=(i + 1) * 10 * SEC, te=(i + 1) * 10 * SEC + SEC)
    store = b.build()
    last = nodes[-1]
    sizes = []
    for limit in (0, 1, 2, 3, None):
        graph, _ = run(store, "back", [(("deep", last), None)], step_limit=limit)
        sizes.append(graph.edge_count())
    assert sizes == [0, 1, 2, 3, 5]


def test_step_limit_monotone_on_random_stores():
    rng = random.Random(31)
    for _ in range(20):
        store = random_store(rng, 150)
        seed_id = rng.randrange(store.entity_count())
        direction = rng.choice(("back", "forward"))
        prev = set()
        for limit in (1, 2, 3, 5, 8):
            graph, _ = run(store, direction, [((store.name, seed_id), None)], step_limit=limit)
            assert prev <= set(graph.events)
            prev = set(graph.events)


def test_exclude_nodes_stop_expansion_and_drop_edge():
    b = StoreBuilder("ex")
    f1, mid, f2 = b.file("/a/f1"), b.process("vscode", 7), b.file("/a/f2")
    b.event(f1, mid, "read", ts=10 * SEC, te=11 * SEC)
    b.event(mid, f2, "write", ts=20 * SEC, te=21 * SEC)
    store = b.build()
    f2_id = store.scan_entities(pred=ast.Comparison("path", "=", "/a/f2"))[0]
    graph, _ = run(store, "back", [(("ex", f2_id), None)],
                   exclude_nodes=ast.Comparison("name", "=", "vscode"))
    assert graph.edge_count() == 0
    assert graph.node_count() == 1  # just the seed


def test_include_nodes_is_a_whitelist_for_non_seeds():
    store = chain_store()
    f2 = store.scan_entities(pred=ast.Comparison("path", "=", "/a/f2"))[0]
    graph, _ = run(store, "back", [(("chain", f2), None)],
                   include_nodes=ast.Comparison("type", "=", "process"))
    # the process hop is allowed; the file f1 behind it is not
    assert [ev.optype for ev in graph.events.values()] == ["write"]


def test_edge_filters():
    store = chain_store()
    f2 = store.scan_entities(pred=ast.Comparison("path", "=", "/a/f2"))[0]
    graph, _ = run(store, "back", [(("chain", f2), None)],
                   exclude_edges=ast.Comparison("optype", "=", "read"))
    assert [ev.optype for ev in graph.events.values()] == ["write"]
    graph, _ = run(store, "back", [(("chain", f2), None)],
                   include_edges=ast.Comparison("optype", "=", "write"))
    assert [ev.optype for ev in graph.events.values()] == ["write"]


def test_time_limit_truncates_with_flag():
    rng = random.Random(32)
    store = random_store(rng, 400)
    seeds = [((store.name, i), None) for i in range(store.entity_count())]
    graph, truncated = run(store, "back", seeds, time_limit_s=0.0)
    assert truncated


def test_resolve_poi_var_seeds_from_events():
    from provql.search import execute_search

    b = StoreBuilder("p")
    tar, curl = b.file("/t/x.tar"), b.process("curl", 5)
    sock = b.sock("10.0.0.1", 1, "2.2.2.2", 80)
    b.event(tar, curl, "read", ts=10 * SEC, te=11 * SEC)
    b.event(curl, sock, "write", ts=12 * SEC, te=13 * SEC)
    store = b.build()
    stmt = parse_one('search from db(p) where a{name="curl", type=process}, t{path like "%.tar"}, '
                     "s{type=network} with t[read]->a && a[write]->s return * as poi;")
    poi = execute_search(stmt, store)
    seeds, seed_events = resolve_poi(ast.VarPoi("poi"), store, {"poi": poi}, "back")
    bounds = dict(seeds)
    assert bounds[("p", tar)] == 11 * SEC
    assert bounds[("p", curl)] == 13 * SEC
    assert len(seed_events) == 2


def test_resolve_poi_expr_open_bound():
    store = chain_store()
    seeds, seed_events = resolve_poi(ast.Comparison("exename", "=", "worker"), store, {}, "back")
    assert seeds == [(("chain", 1), None)]
    assert seed_events == []


def test_unsatisfied_poi_expr_yields_empty_track():
    store = chain_store()
    seeds, _ = resolve_poi(ast.Comparison("exename", "=", "ghost"), store, {}, "back")
    graph, truncated = run(store, "back", seeds)
    assert graph.edge_count() == 0 and graph.node_count() == 0 and not truncated


def _random_filters(rng):
    kw = {}
    if rng.random() < 0.35:
        kw["exclude_nodes"] = random_entity_expr(rng)
    if rng.random() < 0.25:
        kw["include_nodes"] = random_entity_expr(rng)
    if rng.random() < 0.3:
        kw["exclude_edges"] = random_event_expr(rng)
    if rng.random() < 0.2:
        kw["include_edges"] = random_event_expr(rng)
    return kw


def test_oracle_equivalence_smoke():
    rng = random.Random(33)
    for trial in range(80):
        store = random_store(rng, rng.randrange(20, 200))
        direction = rng.choice(("back", "forward"))
        n_seeds = rng.randrange(1, 4)
        seeds = []
        for _ in range(n_seeds):
            eid = rng.randrange(store.entity_count())
            bound = None if rng.random() < 0.5 else rng.randrange(0, 2000 * SEC)
            seeds.append(((store.name, eid), bound))
        kw = _random_filters(rng)
        graph, _ = run(store, direction, seeds, **kw)
        want = fixed_point_track(store, direction, seeds, (), **kw)
        assert set(graph.events) == want, f"trial {trial}"


def test_forward_backward_duality():
    rng = random.Random(34)
    for _ in range(40):
        store = random_store(rng, 120)
        mirrored = mirror_store(store)
        eid = rng.randrange(store.entity_count())
        bound = None if rng.random() < 0.5 else rng.randrange(0, 2000 * SEC)
        back, _ = run(store, "back", [((store.name, eid), bound)])
        fwd, _ = run(mirrored, "forward", [((store.name, eid), None if bound is None else -bound)])
        assert event_ids(back) == event_ids(fwd)


def test_filter_soundness_random():
    rng = random.Random(35)
    for _ in range(40):
        store = random_store(rng, 150)
        exclude = random_entity_expr(rng)
        from provql.lang.eval import compile_entity_pred

        check = compile_entity_pred(exclude)
        seeds = [((store.name, rng.randrange(store.entity_count())), None)]
        graph, _ = run(store, "back", seeds, exclude_nodes=exclude)
        for ent in graph.entities.values():
            assert not check(ent)


def test_track_over_graph_source_stays_inside_it():
    rng = random.Random(36)
    store = random_store(rng, 200)
    stmt = parse_one(
        'search from db(rand) where a{type=process}, b{type=file} with b[read]->a return * as g;')
    base = execute_search(stmt, store)
    if base.edge_count() == 0:
        return
    key = next(iter(base.entities))
    graph, _ = run(base, "back", [(key, None)])
    assert set(graph.events) <= set(base.events)
