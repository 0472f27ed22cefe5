import { clear, el, svgEl } from "./dom.js";
import { layout } from "./force.js";
import type { EntityDoc, GraphPage } from "./types.js";

const KIND_COLORS: Record<string, string> = {
  process: "#4c8dd6",
  file: "#e0a03c",
  network: "#57b36a",
};

export interface GraphViewOptions {
  width?: number;
  height?: number;
  /** Entity keys of a second variable; shared nodes are outlined. */
  highlight?: Set<string>;
  onSelect?: (entity: EntityDoc) => void;
}

function entityKey(doc: EntityDoc): string {
  return `${doc.source}/${doc.id}`;
}

/**
 * Force-directed SVG rendering of one graph page. The drawing never
 * mutates the payload; counts shown come straight from the API summary,
 * and a badge appears when the page is truncated.
 */
export class GraphView {
  readonly root: HTMLElement;
  private readonly inspector: HTMLElement;

  constructor(private readonly opts: GraphViewOptions = {}) {
    this.inspector = el("div", { class: "inspector" });
    this.root = el("div", { class: "graph-view" });
  }

  render(page: GraphPage): void {
    clear(this.root);
    const width = this.opts.width ?? 720;
    const height = this.opts.height ?? 480;

    const header = el("div", { class: "graph-header" }, [
      el("span", { class: "counts" }, [`${page.nodes} nodes, ${page.edges} edges`]),
    ]);
    if (page.nextPage !== null) {
      header.append(el("span", { class: "badge truncated" }, ["truncated"]));
    }
    this.root.append(header);

    const byKey = new Map<string, EntityDoc>();
    for (const ent of page.entities) byKey.set(entityKey(ent), ent);
    const positions = layout(
      [...byKey.keys()],
      page.events.map((ev) => ({
        from: `${ev.source}/${ev.srcid}`,
        to: `${ev.source}/${ev.dstid}`,
      })),
      { width, height },
    );

    const svg = svgEl("svg", {
      viewBox: `0 0 ${width} ${height}`,
      width: String(width),
      height: String(height),
      class: "graph-canvas",
    });

    for (const ev of page.events) {
      const a = positions.get(`${ev.source}/${ev.srcid}`);
      const b = positions.get(`${ev.source}/${ev.dstid}`);
      if (!a || !b) continue; // endpoint on a later page
      svg.append(svgEl("line", {
        x1: String(a.x), y1: String(a.y), x2: String(b.x), y2: String(b.y),
        class: "edge", "data-optype": ev.optype,
      }));
      const label = svgEl("text", {
        x: String((a.x + b.x) / 2),
        y: String((a.y + b.y) / 2 - 3),
        class: "edge-label",
      });
      label.textContent = ev.optype;
      svg.append(label);
    }

    for (const ent of byKey.values()) {
      const pos = positions.get(entityKey(ent));
      if (!pos) continue;
      const highlighted = this.opts.highlight?.has(ent.key) ?? false;
      const circle = svgEl("circle", {
        cx: String(pos.x),
        cy: String(pos.y),
        r: "9",
        fill: KIND_COLORS[ent.kind] ?? "#999",
        class: highlighted ? "node overlap" : "node",
        "data-kind": ent.kind,
        "data-key": ent.key,
      });
      if (highlighted) {
        circle.setAttribute("stroke", "#d33");
        circle.setAttribute("stroke-width", "3");
      }
      circle.addEventListener("click", () => {
        this.inspect(ent);
        this.opts.onSelect?.(ent);
      });
      const title = svgEl("title");
      title.textContent = ent.key;
      circle.append(title);
      svg.append(circle);
    }

    this.root.append(svg, this.inspector);
  }

  /** Attribute panel for a clicked node. */
  inspect(ent: EntityDoc): void {
    clear(this.inspector);
    this.inspector.append(
      el("h4", {}, [`${ent.kind}: ${ent.key}`]),
      el(
        "dl",
        {},
        Object.entries(ent.attrs).flatMap(([name, value]) => [
          el("dt", {}, [name]),
          el("dd", {}, [String(value)]),
        ]),
      ),
    );
  }
}
