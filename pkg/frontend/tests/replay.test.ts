// Session replay against a real server: generate the data-leakage
// scenario, serve it over HTTP, execute the six investigation cells in
// order through the notebook DOM, and check the final graph against the
// ground truth counts.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { GraphView } from "../src/graphView.js";
import { NotebookModel, renderNotebook } from "../src/notebook.js";

const PY = process.env.PROVQL_PYTHON ?? "python3";
const PORT = 8900 + Math.floor(Math.random() * 500);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let truth: { hosts: Record<string, { entities: string[]; events: unknown[][] }> };
let demoCells: string[] = [];

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE}/sources`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("API server did not come up");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "provql-ui-"));
  const run = (args: string[]) =>
    execFileSync(PY, ["-m", "provql.cli", ...args], { stdio: ["ignore", "ignore", "inherit"] });
  run(["gen", "--noise", "2000", "--seed", "17", "--out", join(dir, "scen")]);
  run(["ingest", join(dir, "scen", "host1.jsonl"), "--source", "host1",
       "--out", join(dir, "host1.snap")]);
  run(["ingest", join(dir, "scen", "host2.jsonl"), "--source", "host2",
       "--out", join(dir, "host2.snap")]);

  truth = JSON.parse(readFileSync(join(dir, "scen", "ground_truth.json"), "utf8"));
  // the shipped script's comment-separated blocks become the six cells
  const script = readFileSync(join(dir, "scen", "investigation.tstl"), "utf8");
  demoCells = script.split(/\n\n+/).map((s) => s.trim()).filter(Boolean);

  server = spawn(PY, [
    "-m", "provql.cli", "serve",
    "--db", `host1=${join(dir, "host1.snap")}`,
    "--db", `host2=${join(dir, "host2.snap")}`,
    "--port", String(PORT),
  ], { stdio: ["ignore", "ignore", "inherit"] });
  await waitForServer();
});

afterAll(() => {
  server?.kill();
});

describe("six-cell session replay", () => {
  it("reproduces the final graph counts and renders it", async () => {
    expect(demoCells.length).toBe(6);

    const api = new ApiClient(BASE);
    const sessionId = await api.createSession();
    const model = new NotebookModel(api, sessionId);
    const mount = document.createElement("div");
    document.body.append(mount);
    renderNotebook(model, mount);

    for (const source of demoCells) {
      const cell = model.addCell(source);
      await model.run(cell);
      expect(cell.state).toBe("ok");
    }

    // every cell rendered, none in an error state
    expect(mount.querySelectorAll(".cell").length).toBe(6);
    expect(mount.querySelectorAll(".cell.state-error").length).toBe(0);

    const hostTruth = truth.hosts["host1"]!;
    const wantEdges = hostTruth.events.length;
    const wantNodes = hostTruth.entities.length;

    // the final cell displays g5; its pane must carry the ground-truth counts
    const lastCell = model.cells[model.cells.length - 1]!;
    const display = lastCell.results.find((r) => r.kind === "display");
    expect(display?.graph).toEqual({ nodes: wantNodes, edges: wantEdges });

    // server-side variable summary agrees
    const vars = await api.vars(sessionId);
    const g5 = vars.find((v) => v.name === "g5");
    expect(g5).toMatchObject({ nodes: wantNodes, edges: wantEdges });

    // and the rendered pane in the DOM drew exactly that many elements
    const pane = [...mount.querySelectorAll(".graph-view")].at(-1)!;
    expect(pane.querySelectorAll("circle").length).toBe(wantNodes);
    expect(pane.querySelectorAll("line").length).toBe(wantEdges);

    // the full page payload lists the exact attack entities
    const page = await api.varPage(sessionId, "g5", 0);
    expect(page.nextPage).toBeNull();
    expect(new Set(page.entities.map((e) => e.key))).toEqual(new Set(hostTruth.entities));
  });

  it("surfaces server diagnostics in the failing cell", async () => {
    const api = new ApiClient(BASE);
    const sessionId = await api.createSession();
    const model = new NotebookModel(api, sessionId);
    const cell = model.addCell("search from db(host1) where broken;;");
    await model.run(cell);
    expect(cell.state).toBe("error");
    expect(cell.diagnostics.length).toBeGreaterThan(0);
    expect(cell.diagnostics[0]?.line).toBe(1);
  });
});
