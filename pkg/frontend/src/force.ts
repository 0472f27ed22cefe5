// Minimal force-directed layout: spring forces along edges, pairwise
// repulsion, centering pull. Run synchronously for a fixed tick budget;
// graphs arrive pre-capped by the API page size so O(n^2) per tick is fine.

export interface LayoutNode {
  id: string;
  x: number;
  y: number;
  vx: number;
  vy: number;
}

export interface LayoutEdge {
  from: string;
  to: string;
}

export interface LayoutOptions {
  width: number;
  height: number;
  ticks?: number;
  springLength?: number;
}

export function layout(
  ids: string[],
  edges: LayoutEdge[],
  opts: LayoutOptions,
): Map<string, LayoutNode> {
  const { width, height } = opts;
  const ticks = opts.ticks ?? 150;
  const springLength = opts.springLength ?? Math.min(width, height) / 6;
  const nodes = new Map<string, LayoutNode>();
  // deterministic spiral seeding keeps renders reproducible
  ids.forEach((id, i) => {
    const angle = i * 2.399963; // golden angle
    const radius = 10 + 6 * Math.sqrt(i);
    nodes.set(id, {
      id,
      x: width / 2 + radius * Math.cos(angle),
      y: height / 2 + radius * Math.sin(angle),
      vx: 0,
      vy: 0,
    });
  });

  const list = [...nodes.values()];
  const springs = edges
    .map((e) => [nodes.get(e.from), nodes.get(e.to)] as const)
    .filter((pair): pair is readonly [LayoutNode, LayoutNode] => !!pair[0] && !!pair[1]);

  for (let t = 0; t < ticks; t++) {
    const cool = 1 - t / ticks;
    for (let i = 0; i < list.length; i++) {
      const a = list[i]!;
      for (let j = i + 1; j < list.length; j++) {
        const b = list[j]!;
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        const d2 = Math.max(dx * dx + dy * dy, 1);
        const push = (springLength * springLength) / d2 / 2;
        dx *= push;
        dy *= push;
        a.vx += dx;
        a.vy += dy;
        b.vx -= dx;
        b.vy -= dy;
      }
    }
    for (const [a, b] of springs) {
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const dist = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
      const pull = ((dist - springLength) / dist) * 0.05;
      a.vx += dx * pull;
      a.vy += dy * pull;
      b.vx -= dx * pull;
      b.vy -= dy * pull;
    }
    for (const n of list) {
      n.vx += (width / 2 - n.x) * 0.002;
      n.vy += (height / 2 - n.y) * 0.002;
      n.x += n.vx * cool;
      n.y += n.vy * cool;
      n.vx *= 0.6;
      n.vy *= 0.6;
      n.x = Math.min(Math.max(n.x, 12), width - 12);
      n.y = Math.min(Math.max(n.y, 12), height - 12);
    }
  }
  return nodes;
}
