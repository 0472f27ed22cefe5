import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { GraphView } from "./graphView.js";
import type { GraphPage } from "./types.js";

/**
 * Variable and source listing with show/overlap/export actions. Counts are
 * whatever the API reports; the panel never recomputes them client-side.
 */
export class SessionPanel {
  readonly root = el("div", { class: "session-panel" });
  private overlapWith: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly view: GraphView,
    private readonly viewFactory: (highlight: Set<string>) => GraphView = () => view,
  ) {}

  async refresh(): Promise<void> {
    const [vars, sources] = await Promise.all([
      this.api.vars(this.sessionId),
      this.api.sources(),
    ]);
    clear(this.root);

    const sourceList = el("ul", { class: "sources" });
    for (const s of sources) {
      sourceList.append(
        el("li", {}, [`db(${s.name}): ${s.entities} entities, ${s.events} events`]),
      );
    }
    this.root.append(el("h3", {}, ["sources"]), sourceList);

    const varList = el("ul", { class: "vars" });
    for (const v of vars) {
      const item = el("li", { "data-var": v.name }, [
        el("span", { class: "var-name" }, [v.name]),
        ` ${v.nodes} nodes / ${v.edges} edges `,
      ]);
      const show = el("button", { class: "show" }, ["show"]);
      show.addEventListener("click", () => void this.show(v.name));
      const overlap = el("button", { class: "overlap" }, ["overlap"]);
      overlap.addEventListener("click", () => {
        this.overlapWith = this.overlapWith === v.name ? null : v.name;
      });
      const exportButton = el("button", { class: "export" }, ["export"]);
      exportButton.addEventListener("click", () => void this.exportVar(v.name));
      item.append(show, overlap, exportButton);
      varList.append(item);
    }
    this.root.append(el("h3", {}, ["variables"]), varList);
  }

  /** Render a variable; nodes shared with the overlap selection get outlined. */
  async show(name: string): Promise<void> {
    const page = await this.api.varPage(this.sessionId, name, 0);
    let highlight = new Set<string>();
    if (this.overlapWith && this.overlapWith !== name) {
      const other = await this.collectKeys(this.overlapWith);
      highlight = new Set(page.entities.map((e) => e.key).filter((k) => other.has(k)));
    }
    const view = this.viewFactory(highlight);
    view.render(page);
  }

  private async collectKeys(name: string): Promise<Set<string>> {
    const keys = new Set<string>();
    let page: number | null = 0;
    while (page !== null) {
      const doc: GraphPage = await this.api.varPage(this.sessionId, name, page);
      for (const ent of doc.entities) keys.add(ent.key);
      page = doc.nextPage;
    }
    return keys;
  }

  /** Server-side export through the language; full graph, not just a page. */
  private exportVar(name: string): Promise<unknown> {
    return this.api.execute(this.sessionId, `export ${name} as "${name}.json";`);
  }
}
