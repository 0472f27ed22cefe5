
import pytest
from fastapi.testclient import TestClient

from provql.ingest import IngestStats, parse_jsonl, resolve
from provql.scenario import INVESTIGATION_SCRIPT, ScenarioSpec, generate
from provql.server import ServerConfig, create_app
from provql.store import Store

ALERT = INVESTIGATION_SCRIPT.split("// 2")[0]


@pytest.fixture(scope="module")
def scenario():
    lines, truth = generate(ScenarioSpec(noise_events=1200, seed=21))
    stores = []
    for host in ("host1", "host2"):
        store = Store(host)
        stats = IngestStats()
        resolve(parse_jsonl(lines[host], stats), store, None, stats)
        stores.append(store)
    return stores, truth


@pytest.fixture()
def client(scenario, tmp_path):
    stores, _ = scenario
    config = ServerConfig(export_dir=str(tmp_path), page_size=50)
    app = create_app(config, stores=stores)
    return TestClient(app)


def _new_session(client):
    res = client.post("/sessions")
    assert res.status_code == 200
    return res.json()["sessionId"]


def test_sources_lists_stores(client):
    docs = client.get("/sources").json()
    names = {d["name"] for d in docs}
    assert names == {"host1", "host2"}
    assert all(d["events"] > 0 for d in docs)


def test_execute_alert_query_summary(client):
    sid = _new_session(client)
    res = client.post(f"/sessions/{sid}/execute", json={"text": ALERT})
    assert res.status_code == 200
    doc = res.json()["results"][0]
    assert doc["graph"] == {"nodes": 3, "edges": 2}
    assert doc["bound"] == "poi1"


def test_execute_garbage_returns_400_with_diagnostics(client):
    sid = _new_session(client)
    res = client.post(f"/sessions/{sid}/execute", json={"text": "search search search"})
    assert res.status_code == 400
    detail = res.json()["detail"]
    assert detail[0]["line"] == 1


def test_semantic_diagnostics_400(client):
    sid = _new_session(client)
    res = client.post(f"/sessions/{sid}/execute", json={"text": "display nope;"})
    assert res.status_code == 400
    assert any("nope" in d["message"] for d in res.json()["detail"])


def test_unknown_session_404(client):
    assert client.post("/sessions/deadbeef/execute", json={"text": "display g;"}).status_code == 404
    assert client.get("/sessions/deadbeef/vars").status_code == 404


def test_unknown_var_404(client):
    sid = _new_session(client)
    assert client.get(f"/sessions/{sid}/vars/g9").status_code == 404


def test_vars_listing_and_paging(client):
    sid = _new_session(client)
    text = ALERT + "\ng2 = back track poi1 from db(host1) limit step 2;\n"
    res = client.post(f"/sessions/{sid}/execute", json={"text": text})
    assert res.status_code == 200
    names = {v["name"] for v in client.get(f"/sessions/{sid}/vars").json()}
    assert names == {"poi1", "g2"}
    page0 = client.get(f"/sessions/{sid}/vars/g2", params={"page": 0}).json()
    assert page0["edges"] > 0
    collected = list(page0["events"])
    next_page = page0["nextPage"]
    while next_page is not None:
        doc = client.get(f"/sessions/{sid}/vars/g2", params={"page": next_page}).json()
        collected.extend(doc["events"])
        next_page = doc["nextPage"]
    assert len(collected) == page0["edges"]


def test_concurrent_execute_conflicts(client):
    sid = _new_session(client)
    slot = client.app.state.sessions[sid]
    assert slot.lock.acquire(blocking=False)
    try:
        res = client.post(f"/sessions/{sid}/execute", json={"text": "display g;"})
        assert res.status_code == 409
    finally:
        slot.lock.release()


def test_statement_budget_408(scenario, tmp_path):
    stores, _ = scenario
    config = ServerConfig(export_dir=str(tmp_path), max_statement_seconds=0.0)
    app = create_app(config, stores=stores)
    client = TestClient(app)
    sid = client.post("/sessions").json()["sessionId"]
    res = client.post(f"/sessions/{sid}/execute", json={"text": ALERT})
    assert res.status_code == 408


def test_cli_and_api_exports_are_identical(scenario, tmp_path):
    # the same snapshots, one script, two front ends: exports must be byte-equal
    from click.testing import CliRunner

    from provql.cli import cli

    stores, _ = scenario
    snaps = []
    for store in stores:
        path = str(tmp_path / f"{store.name}.snap")
        store.save(path)
        snaps.append(f"{store.name}={path}")

    config = ServerConfig(export_dir=str(tmp_path))
    app = create_app(config, stores=stores)
    client = TestClient(app)
    sid = client.post("/sessions").json()["sessionId"]
    res = client.post(f"/sessions/{sid}/execute",
                      json={"text": INVESTIGATION_SCRIPT + '\nexport g5 as "api.json";\n'})
    assert res.status_code == 200

    script = tmp_path / "investigate.tstl"
    script.write_text(INVESTIGATION_SCRIPT + '\nexport g5 as "cli.json";\n')
    result = CliRunner().invoke(cli, [
        "run", str(script), "--db", snaps[0], "--db", snaps[1],
        "--export-dir", str(tmp_path),
    ], catch_exceptions=False)
    assert result.exit_code == 0, result.output

    api_bytes = open(tmp_path / "api.json", "rb").read()
    cli_bytes = open(tmp_path / "cli.json", "rb").read()
    assert api_bytes == cli_bytes


def test_env_override(monkeypatch):
    monkeypatch.setenv("PROVQL_PAGE_SIZE", "123")
    cfg = ServerConfig.load()
    assert cfg.page_size == 123
