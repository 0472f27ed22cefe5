import json
import os
import subprocess
import sys

from click.testing import CliRunner

from provql.cli import cli, parse_duration


def invoke(*args, **kw):
    return CliRunner().invoke(cli, list(args), catch_exceptions=False, **kw)


def test_parse_duration():
    assert parse_duration("1s") == 1_000_000_000
    assert parse_duration("500ms") == 500_000_000
    assert parse_duration("2m") == 120_000_000_000


def scenario_snapshots(tmp_path, noise=1500, seed=3):
    outdir = tmp_path / "scen"
    res = invoke("gen", "--noise", str(noise), "--seed", str(seed), "--out", str(outdir))
    assert res.exit_code == 0
    snaps = {}
    for host in ("host1", "host2"):
        res = invoke("ingest", str(outdir / f"{host}.jsonl"), "--source", host,
                     "--out", str(tmp_path / f"{host}.snap"))
        assert res.exit_code == 0, res.output
        snaps[host] = str(tmp_path / f"{host}.snap")
    return outdir, snaps


def test_gen_ingest_run_pipeline(tmp_path):
    outdir, snaps = scenario_snapshots(tmp_path)
    script = outdir / "investigation.tstl"
    text = script.read_text() + '\nexport g5 as "g5.json";\n'
    script.write_text(text)
    res = invoke("run", str(script),
                 "--db", f"host1={snaps['host1']}", "--db", f"host2={snaps['host2']}",
                 "--export-dir", str(tmp_path))
    assert res.exit_code == 0, res.output
    exported = json.load(open(tmp_path / "g5.json"))
    truth = json.load(open(outdir / "ground_truth.json"))
    assert len(exported["events"]) == len(truth["hosts"]["host1"]["events"])


def test_run_reports_semantic_error_exit_2(tmp_path):
    _, snaps = scenario_snapshots(tmp_path, noise=50)
    bad = tmp_path / "bad.tstl"
    bad.write_text("display unknown_var;\n")
    proc = subprocess.run(
        [sys.executable, "-m", "provql.cli", "run", str(bad), "--db", f"host1={snaps['host1']}"],
        capture_output=True, text=True)
    assert proc.returncode == 2
    assert "unknown_var" in proc.stderr


def test_run_reports_parse_error_exit_2(tmp_path):
    _, snaps = scenario_snapshots(tmp_path, noise=50)
    bad = tmp_path / "bad.tstl"
    bad.write_text("search from db(host1) where ;;;\n")
    proc = subprocess.run(
        [sys.executable, "-m", "provql.cli", "run", str(bad), "--db", f"host1={snaps['host1']}"],
        capture_output=True, text=True)
    assert proc.returncode == 2


def test_usage_error_exit_1(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "provql.cli", "run", "--db", "bad-spec"],
        capture_output=True, text=True)
    assert proc.returncode == 1


def test_runtime_error_exit_3(tmp_path):
    script = tmp_path / "s.tstl"
    script.write_text("display g1;\n")
    snap = tmp_path / "missing.snap"
    snap.write_bytes(b"NOPE")
    proc = subprocess.run(
        [sys.executable, "-m", "provql.cli", "run", str(script), "--db", f"h={snap}"],
        capture_output=True, text=True)
    assert proc.returncode == 3


def test_db_list_and_load(tmp_path):
    _, snaps = scenario_snapshots(tmp_path, noise=100)
    res = invoke("db", "list", str(tmp_path))
    assert res.exit_code == 0
    assert "host1" in res.output and "entities" in res.output
    res = invoke("db", "load", snaps["host1"])
    assert res.exit_code == 0
    assert "host1:" in res.output


def test_repl_meta_commands_and_query(tmp_path):
    _, snaps = scenario_snapshots(tmp_path, noise=100)
    stdin = (
        ":sources\n"
        "g1 = back track where name=\"curl\"\n"
        "from db(host1);\n"
        ":vars\n"
        ":quit\n"
    )
    res = invoke("repl", "--db", f"host1={snaps['host1']}", input=stdin)
    assert res.exit_code == 0, res.output
    assert "host1: entities=" in res.output
    assert "g1:" in res.output


def test_timing_goes_to_stderr(tmp_path):
    outdir, snaps = scenario_snapshots(tmp_path, noise=50)
    script = outdir / "investigation.tstl"
    proc = subprocess.run(
        [sys.executable, "-m", "provql.cli", "run", str(script),
         "--db", f"host1={snaps['host1']}", "--db", f"host2={snaps['host2']}"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "ms" in proc.stderr
    assert "ms\n" not in proc.stdout


def test_bench_writes_reports_and_figures(tmp_path):
    out = tmp_path / "rep"
    res = invoke("bench", "--events", "4000", "--iterations", "1",
                 "--scenario-noise", "400", "--out", str(out))
    assert res.exit_code == 0, res.output
    assert (out / "search.csv").exists()
    assert (out / "track.csv").exists()
    assert (out / "search_times.png").exists()
    assert (out / "track_sizes.png").exists()
    header = open(out / "search.csv").readline().strip()
    assert header == "query-id,mode,ms-median,nodes,edges,hash"
