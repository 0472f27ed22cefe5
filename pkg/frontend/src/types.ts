// JSON shapes of the provql HTTP API.

export interface EntityDoc {
  source: string;
  id: number;
  kind: "process" | "file" | "network";
  key: string;
  attrs: Record<string, string | number>;
}

export interface EventDoc {
  source: string;
  id: number;
  srcid: number;
  dstid: number;
  srckey: string;
  dstkey: string;
  optype: string;
  starttime: number;
  endtime: number;
  amount: number;
  note?: string;
}

export interface GraphSummary {
  nodes: number;
  edges: number;
}

/** One page of a graph; nextPage is null on the last page. */
export interface GraphPage extends GraphSummary {
  page: number;
  nextPage: number | null;
  entities: EntityDoc[];
  events: EventDoc[];
}

export interface StatementResultDoc {
  kind: "search" | "track" | "bind" | "display" | "export";
  summary: string;
  elapsedMs: number;
  truncated: boolean;
  bound?: string;
  exportPath?: string;
  graph?: GraphSummary;
  render?: GraphPage;
}

export interface ExecuteResponse {
  results: StatementResultDoc[];
}

export interface Diagnostic {
  message: string;
  line: number;
  col: number;
}

export interface VarSummary extends GraphSummary {
  name: string;
}

export interface SourceSummary {
  name: string;
  entities: number;
  events: number;
}
