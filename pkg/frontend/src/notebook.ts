import { ApiClient, ApiError, QueryError } from "./api.js";
import { clear, el } from "./dom.js";
import { GraphView } from "./graphView.js";
import type { Diagnostic, StatementResultDoc } from "./types.js";

export type CellState = "idle" | "running" | "ok" | "error";

export interface Cell {
  id: number;
  source: string;
  state: CellState;
  results: StatementResultDoc[];
  diagnostics: Diagnostic[];
  errorText: string | null;
}

/**
 * Cell list plus the execution lane. Runs are queued client-side so only
 * one execute is in flight per session and cells always run in the order
 * the user asked for them.
 */
export class NotebookModel {
  cells: Cell[] = [];
  onChange: () => void = () => {};
  private nextId = 1;
  private queue: Cell[] = [];
  private running = false;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
  ) {}

  addCell(source = ""): Cell {
    const cell: Cell = {
      id: this.nextId++,
      source,
      state: "idle",
      results: [],
      diagnostics: [],
      errorText: null,
    };
    this.cells.push(cell);
    this.onChange();
    return cell;
  }

  /** Queue a cell; resolves when this cell (and those queued before it) ran. */
  run(cell: Cell): Promise<void> {
    if (cell.state === "running" || this.queue.includes(cell)) {
      return this.drained();
    }
    this.queue.push(cell);
    return this.pump();
  }

  runAll(): Promise<void> {
    for (const cell of this.cells) {
      if (!this.queue.includes(cell) && cell.state !== "running") {
        this.queue.push(cell);
      }
    }
    return this.pump();
  }

  private drainedResolvers: (() => void)[] = [];

  private drained(): Promise<void> {
    if (!this.running && this.queue.length === 0) return Promise.resolve();
    return new Promise((resolve) => this.drainedResolvers.push(resolve));
  }

  private async pump(): Promise<void> {
    if (this.running) return this.drained();
    this.running = true;
    try {
      while (this.queue.length > 0) {
        const cell = this.queue.shift()!;
        await this.executeCell(cell);
      }
    } finally {
      this.running = false;
      const resolvers = this.drainedResolvers;
      this.drainedResolvers = [];
      for (const resolve of resolvers) resolve();
    }
  }

  private async executeCell(cell: Cell): Promise<void> {
    cell.state = "running";
    cell.results = [];
    cell.diagnostics = [];
    cell.errorText = null;
    this.onChange();
    try {
      const res = await this.api.execute(this.sessionId, cell.source);
      cell.results = res.results;
      cell.state = "ok";
    } catch (err) {
      cell.state = "error";
      if (err instanceof QueryError) {
        cell.diagnostics = err.diagnostics;
      } else if (err instanceof ApiError) {
        cell.errorText = err.message;
      } else {
        cell.errorText = String(err);
      }
    }
    this.onChange();
  }
}

/** DOM rendering of one cell: editor, run button, result pane. */
export function renderCell(model: NotebookModel, cell: Cell): HTMLElement {
  const editor = el("textarea", { class: "cell-source", rows: "3" }) as HTMLTextAreaElement;
  editor.value = cell.source;
  editor.addEventListener("input", () => {
    cell.source = editor.value;
  });

  const runButton = el("button", { class: "run" }, ["run"]);
  runButton.addEventListener("click", () => void model.run(cell));
  if (cell.state === "running") runButton.setAttribute("disabled", "true");

  const result = el("div", { class: `cell-result state-${cell.state}` });
  for (const diag of cell.diagnostics) {
    result.append(el("div", { class: "diagnostic" }, [`${diag.line}:${diag.col} ${diag.message}`]));
  }
  if (cell.errorText) {
    result.append(el("div", { class: "diagnostic" }, [cell.errorText]));
  }
  for (const doc of cell.results) {
    const line = el("div", { class: "result-line" }, [
      el("span", { class: "kind" }, [doc.kind]),
      " ",
      doc.summary,
      doc.truncated ? " (truncated)" : "",
    ]);
    result.append(line);
    if (doc.render) {
      const view = new GraphView({ width: 680, height: 360 });
      view.render(doc.render);
      result.append(view.root);
    }
  }

  return el("div", { class: `cell state-${cell.state}`, "data-cell-id": String(cell.id) }, [
    el("div", { class: "cell-tools" }, [runButton, el("span", { class: "state" }, [cell.state])]),
    editor,
    result,
  ]);
}

export function renderNotebook(model: NotebookModel, mount: HTMLElement): void {
  const redraw = () => {
    clear(mount);
    for (const cell of model.cells) {
      mount.append(renderCell(model, cell));
    }
    const add = el("button", { class: "add-cell" }, ["+ cell"]);
    add.addEventListener("click", () => model.addCell());
    const runAll = el("button", { class: "run-all" }, ["run all"]);
    runAll.addEventListener("click", () => void model.runAll());
    mount.append(el("div", { class: "notebook-tools" }, [add, runAll]));
  };
  model.onChange = redraw;
  redraw();
}
