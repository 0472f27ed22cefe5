import { ApiClient } from "./api.js";
import { el } from "./dom.js";
import { GraphView } from "./graphView.js";
import { NotebookModel, renderNotebook } from "./notebook.js";
import { SessionPanel } from "./sessionPanel.js";

// The demo preset mirrors the investigation script the scenario generator
// ships; handy for walking through the data-leakage case cell by cell.
export const DEMO_CELLS = [
  'search from db(host1) where e1{name="curl", type=process}, e2{path like "%.tar"}, e3{type=network} with e2[read]->e1 &&[<1s] e1[write]->e3 return * as poi1;',
  'g2 = back track poi1 from db(host1) exclude nodes where name="vscode" limit step 2;',
  'search from g2 where e1{name="scp", type=process}, e2{type=network} with e2[read]->e1 return *;',
  'g3 = back track where name="curl" from db(host1) exclude nodes where name="vscode";',
  'search from g3 where e1{type=process}, e2{srcip="20.69.152.188", type=network} with e2[read]->e1 return *;',
  'g4 = g2 | g3 | poi1;\ng5 = forward track where srcip="20.69.152.188" from g4;\ndisplay g5;',
];

export async function boot(mount: HTMLElement, baseUrl: string): Promise<NotebookModel> {
  const api = new ApiClient(baseUrl);
  const sessionId = await api.createSession();
  const model = new NotebookModel(api, sessionId);

  const cellsMount = el("div", { class: "cells" });
  const view = new GraphView({ width: 760, height: 460 });
  const panel = new SessionPanel(api, sessionId, view);

  const demoButton = el("button", { class: "demo" }, ["load demo investigation"]);
  demoButton.addEventListener("click", () => {
    for (const source of DEMO_CELLS) model.addCell(source);
  });
  const refreshButton = el("button", { class: "refresh" }, ["refresh variables"]);
  refreshButton.addEventListener("click", () => void panel.refresh());

  mount.append(
    el("header", {}, [el("h1", {}, ["provql notebook"]), demoButton, refreshButton]),
    el("div", { class: "layout" }, [cellsMount, el("aside", {}, [panel.root, view.root])]),
  );

  renderNotebook(model, cellsMount);
  model.addCell("");
  await panel.refresh();
  return model;
}

declare global {
  interface Window {
    PROVQL_API?: string;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? window.PROVQL_API ?? "http://127.0.0.1:8750";
  void boot(document.getElementById("app")!, base);
}
