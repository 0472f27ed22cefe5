"""Command-line front end: ingest, generate, run scripts, REPL, serve, bench.

Exit codes: 0 success, 1 usage problems, 2 parse or semantic errors in
query text, 3 runtime failures. Statement timings go to stderr so stdout
stays machine-parseable.
"""

from __future__ import annotations

import glob
import os
import re
import sys
import time

import click

from .errors import LexError, ParseError, ProvqlError, SemanticError
from .ingest import ingest_file
from .reduction import ReductionConfig
from .runtime import Session, StatementResult
from .scenario import (
    MITIGATION_CONSTRAINED,
    MITIGATION_UNCONSTRAINED,
    ScenarioSpec,
    write_scenario,
)
from .store import Store

_DURATION_RE = re.compile(r"^(\d+)(ms|s|m)$")
_NS = {"ms": 1_000_000, "s": 1_000_000_000, "m": 60_000_000_000}


def parse_duration(text: str) -> int:
    m = _DURATION_RE.match(text.strip())
    if not m:
        raise click.UsageError(f"bad duration {text!r}; use forms like 500ms, 1s, 2m")
    return int(m.group(1)) * _NS[m.group(2)]


def _load_sources(session: Session, db_specs) -> None:
    for spec in db_specs:
        if "=" not in spec:
            raise click.UsageError(f"--db expects name=path, got {spec!r}")
        name, path = spec.split("=", 1)
        store = Store.load(path)
        store.name = name
        session.register_source(store)


def _print_result(res: StatementResult, preview: int = 8) -> None:
    click.echo(res.summary())
    if res.display and res.graph is not None:
        graph = res.graph
        for key in sorted(graph.entities)[:preview]:
            ent = graph.entities[key]
            click.echo(f"  node {key[0]}/{key[1]} {ent.kind.value} {ent.key}")
        if graph.node_count() > preview:
            click.echo(f"  ... {graph.node_count() - preview} more nodes")
        for key in sorted(graph.events)[:preview]:
            ev = graph.events[key]
            src = graph.entities[(key[0], ev.srcid)]
            dst = graph.entities[(key[0], ev.dstid)]
            click.echo(f"  edge {src.key} -[{ev.optype}]-> {dst.key} @{ev.starttime}")
        if graph.edge_count() > preview:
            click.echo(f"  ... {graph.edge_count() - preview} more edges")


@click.group()
def cli():
    """Audit-log search and dependency tracking."""


@cli.command()
@click.argument("jsonl", type=click.Path(exists=True, dir_okay=False))
@click.option("--source", required=True, help="Data source name for the store.")
@click.option("--merge-threshold", default="1s", show_default=True,
              help="Merge window for repeated events.")
@click.option("--out", default=None, help="Snapshot path (default <source>.snap).")
def ingest(jsonl, source, merge_threshold, out):
    """Parse an audit log and build a store snapshot."""
    store = Store(source)
    cfg = ReductionConfig(parse_duration(merge_threshold))
    t0 = time.perf_counter()
    stats = ingest_file(jsonl, store, cfg)
    elapsed = time.perf_counter() - t0
    out = out or f"{source}.snap"
    store.save(out)
    click.echo(stats.summary())
    click.echo(f"entities={store.entity_count()} events={store.event_count()} snapshot={out}")
    click.echo(f"ingest took {elapsed:.2f}s", err=True)


@cli.command()
@click.option("--template", default="data-leakage", show_default=True,
              type=click.Choice(["data-leakage", "shellshock-penetration", "wget-executable"]))
@click.option("--noise", default=100_000, show_default=True, help="Benign events per host.")
@click.option("--seed", default=1, show_default=True)
@click.option("--hosts", default=2, show_default=True)
@click.option("--time-span", default=3600, show_default=True, help="Scenario window in seconds.")
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False))
def gen(template, noise, seed, hosts, time_span, outdir):
    """Generate a synthetic attack scenario with ground truth."""
    spec = ScenarioSpec(template=template, seed=seed, hosts=hosts,
                        noise_events=noise, time_span_s=time_span)
    paths = write_scenario(spec, outdir)
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")


@cli.group()
def db():
    """Inspect and manage store snapshots."""


@db.command("list")
@click.argument("directory", default=".", type=click.Path(exists=True, file_okay=False))
def db_list(directory):
    """Summarize the snapshots in a directory."""
    found = sorted(glob.glob(os.path.join(directory, "*.snap")))
    if not found:
        click.echo("no snapshots")
        return
    for path in found:
        store = Store.load(path)
        click.echo(f"{store.name}\t{store.entity_count()} entities\t{store.event_count()} events\t{path}")


@db.command("save")
@click.option("--from-jsonl", "jsonl", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--source", required=True)
@click.option("--merge-threshold", default="1s", show_default=True)
@click.option("--out", default=None)
@click.pass_context
def db_save(ctx, jsonl, source, merge_threshold, out):
    """Build a snapshot from an audit log (same as `provql ingest`)."""
    ctx.invoke(ingest, jsonl=jsonl, source=source, merge_threshold=merge_threshold, out=out)


@db.command("load")
@click.argument("snapshot", type=click.Path(exists=True, dir_okay=False))
def db_load(snapshot):
    """Validate a snapshot and print its summary."""
    store = Store.load(snapshot)
    click.echo(f"{store.name}: {store.entity_count()} entities, {store.event_count()} events")


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@click.option("--db", "db_specs", multiple=True, help="name=snapshot, repeatable.")
@click.option("--export-dir", default=".", show_default=True)
def run(script, db_specs, export_dir):
    """Execute a .tstl script against the given snapshots."""
    session = Session(export_dir=export_dir)
    _load_sources(session, db_specs)
    with open(script) as fp:
        text = fp.read()
    results = session.execute_text(text)
    for res in results:
        _print_result(res)
        click.echo(f"[{res.kind}] {res.elapsed_ms:.1f} ms", err=True)


@cli.command()
@click.option("--db", "db_specs", multiple=True, help="name=snapshot, repeatable.")
@click.option("--export-dir", default=".", show_default=True)
def repl(db_specs, export_dir):
    """Interactive session. Statements end with ';'; :vars, :sources, :quit."""
    session = Session(export_dir=export_dir)
    _load_sources(session, db_specs)
    click.echo("provql interactive session. :quit leaves.", err=True)
    buffer = ""
    while True:
        prompt = "... " if buffer else ">>> "
        try:
            line = input(prompt)
        except EOFError:
            break
        if not buffer and line.strip().startswith(":"):
            meta = line.strip()
            if meta == ":quit":
                break
            if meta == ":vars":
                for name, g in session.vars.items():
                    click.echo(f"{name}: nodes={g.node_count()} edges={g.edge_count()}")
            elif meta == ":sources":
                for name, store in session.sources.items():
                    click.echo(f"{name}: entities={store.entity_count()} events={store.event_count()}")
            else:
                click.echo(f"unknown meta command {meta}", err=True)
            continue
        buffer += line + "\n"
        if not buffer.strip().endswith(";"):
            continue
        text, buffer = buffer, ""
        try:
            t0 = time.perf_counter()
            for res in session.execute_text(text):
                _print_result(res)
            click.echo(f"{(time.perf_counter() - t0) * 1000:.1f} ms", err=True)
        except (LexError, ParseError) as exc:
            click.echo(f"parse error: {exc}", err=True)
        except SemanticError as exc:
            for diag in exc.diagnostics:
                click.echo(f"error: {diag}", err=True)
        except ProvqlError as exc:
            click.echo(f"error: {exc}", err=True)


@cli.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--db", "db_specs", multiple=True, help="name=snapshot, repeatable.")
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve(config_path, db_specs, host, port):
    """Run the HTTP API."""
    from .server import ServerConfig, serve as run_server

    cfg = ServerConfig.load(config_path)
    if host:
        cfg.host = host
    if port:
        cfg.port = port
    stores = []
    for spec in db_specs:
        if "=" not in spec:
            raise click.UsageError(f"--db expects name=path, got {spec!r}")
        name, path = spec.split("=", 1)
        store = Store.load(path)
        store.name = name
        stores.append(store)
    click.echo(f"listening on {cfg.host}:{cfg.port}", err=True)
    run_server(cfg, stores)


@cli.command()
@click.option("--events", default=1_000_000, show_default=True, help="Synthetic store size.")
@click.option("--seed", default=7, show_default=True)
@click.option("--iterations", default=5, show_default=True)
@click.option("--scenario-noise", default=20_000, show_default=True,
              help="Noise size for the tracking comparison scenario.")
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False))
def bench(events, seed, iterations, scenario_noise, outdir):
    """Compare scheduled vs naive search and constrained vs plain tracking.

    Writes search.csv and track.csv plus rendered figures into --out.
    """
    from . import bench as bench_mod

    os.makedirs(outdir, exist_ok=True)
    click.echo(f"building synthetic store with {events} events...", err=True)
    store = bench_mod.build_synthetic_store(events, seed=seed)
    queries = bench_mod.selective_queries(store.name)
    click.echo("running search benchmark...", err=True)
    search_rows = bench_mod.bench_search(store, queries, iterations=iterations)
    bench_mod.write_csv(search_rows, os.path.join(outdir, "search.csv"))

    click.echo("generating tracking scenario...", err=True)
    spec = ScenarioSpec(noise_events=scenario_noise, seed=seed)
    scen_dir = os.path.join(outdir, "scenario")
    paths = write_scenario(spec, scen_dir)
    session = Session(export_dir=outdir)
    for host in ("host1", "host2"):
        host_store = Store(host)
        ingest_file(paths[host], host_store)
        session.register_source(host_store)
    with open(paths["script"]) as fp:
        first_query = fp.read().split("\n\n")[0]
    session.execute_text(first_query)  # binds poi1
    click.echo("running tracking benchmark...", err=True)
    track_rows = bench_mod.bench_track(
        session,
        [("poi1-backward", MITIGATION_CONSTRAINED, MITIGATION_UNCONSTRAINED)],
        iterations=iterations,
    )
    bench_mod.write_csv(track_rows, os.path.join(outdir, "track.csv"))
    figures = bench_mod.render_figures(search_rows, track_rows, outdir)
    for row in search_rows + track_rows:
        click.echo(",".join(str(v) for v in row.as_csv()))
    for path in figures:
        click.echo(f"figure: {path}", err=True)


def main():
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except (LexError, ParseError) as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(2)
    except SemanticError as exc:
        for diag in exc.diagnostics:
            click.echo(f"error: {diag}", err=True)
        sys.exit(2)
    except ProvqlError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
