// Thin typed client for the service. Every mutation goes through here so the
// token and writer-session headers are applied in one place.

import {
  AttrsJson,
  DiagnosticJson,
  DocumentJson,
  FactJson,
  FlowJson,
  ValueJson,
} from "./model.js";

export class ApiError extends Error {
  status: number;
  body: unknown;

  constructor(status: number, body: unknown) {
    super(`HTTP ${status}: ${typeof body === "string" ? body : JSON.stringify(body)}`);
    this.status = status;
    this.body = body;
  }

  get diagnostics(): DiagnosticJson[] {
    const b = this.body as { diagnostics?: DiagnosticJson[] } | null;
    return b?.diagnostics ?? [];
  }
}

export interface SaveResult {
  name: string;
  created: boolean;
  diagnostics: DiagnosticJson[];
}

type FetchLike = typeof fetch;

export class ApiClient {
  base: string;
  token?: string;
  session?: string;
  private fetchFn: FetchLike;

  constructor(base: string, opts: { token?: string; fetchFn?: FetchLike } = {}) {
    this.base = base.replace(/\/$/, "");
    this.token = opts.token;
    this.fetchFn = opts.fetchFn ?? fetch;
  }

  headers(): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json" };
    if (this.token) h["x-lob-token"] = this.token;
    if (this.session) h["x-lob-session"] = this.session;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json().catch(() => null);
    if (!res.ok) throw new ApiError(res.status, payload);
    return payload as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/api/health");
  }

  // -- workspaces ------------------------------------------------------------

  listWorkspaces(): Promise<{ workspaces: string[] }> {
    return this.request("GET", "/api/workspaces");
  }

  getWorkspace(ws: string): Promise<{ name: string; text: string; documents: string[] }> {
    return this.request("GET", `/api/workspaces/${ws}`);
  }

  saveWorkspace(ws: string, text: string): Promise<SaveResult> {
    return this.request("PUT", `/api/workspaces/${ws}`, { text });
  }

  getBundle(ws: string): Promise<{ name: string; bundle: Record<string, unknown> }> {
    return this.request("GET", `/api/workspaces/${ws}/bundle`);
  }

  validate(text: string): Promise<{ ok: boolean; diagnostics: DiagnosticJson[] }> {
    return this.request("POST", "/api/validate", { text });
  }

  fmt(text: string): Promise<{ text: string }> {
    return this.request("POST", "/api/fmt", { text });
  }

  // -- writer sessions ---------------------------------------------------------

  async claimSession(ws: string): Promise<string> {
    const res = await this.request<{ session: string }>("POST", "/api/sessions", {
      workspace: ws,
    });
    this.session = res.session;
    return res.session;
  }

  async releaseSession(): Promise<boolean> {
    if (!this.session) return false;
    const sid = this.session;
    this.session = undefined;
    const res = await this.request<{ released: boolean }>("DELETE", `/api/sessions/${sid}`);
    return res.released;
  }

  // -- documents ----------------------------------------------------------------

  listDocuments(ws: string): Promise<{ documents: string[] }> {
    return this.request("GET", `/api/workspaces/${ws}/documents`);
  }

  createDocument(
    ws: string,
    id: string,
    template: string,
    mechanisms: string[] = [],
  ): Promise<{ document: DocumentJson }> {
    return this.request("POST", `/api/workspaces/${ws}/documents`, {
      id,
      template,
      mechanisms,
    });
  }

  getDocument(ws: string, id: string): Promise<{ document: DocumentJson }> {
    return this.request("GET", `/api/workspaces/${ws}/documents/${id}`);
  }

  fill(
    ws: string,
    id: string,
    didget: string,
    value: ValueJson,
    author = "",
  ): Promise<{ document: DocumentJson; firings: string[] }> {
    return this.request("POST", `/api/workspaces/${ws}/documents/${id}/fill`, {
      didget,
      value,
      author,
    });
  }

  // -- communities ------------------------------------------------------------------

  getCommunity(
    ws: string,
    name: string,
  ): Promise<{ name: string; members: string[]; facts: FactJson[] }> {
    return this.request("GET", `/api/workspaces/${ws}/communities/${name}`);
  }

  post(ws: string, community: string, entity: string, attrs: AttrsJson): Promise<{ facts: FactJson[] }> {
    return this.request("POST", `/api/workspaces/${ws}/communities/${community}/post`, {
      entity,
      attrs,
    });
  }

  runRounds(
    ws: string,
    community: string,
    opts: { mode?: "one"; maxRounds?: number } = {},
  ): Promise<{ rounds: number; fired: string[][]; facts: FactJson[] }> {
    return this.request("POST", `/api/workspaces/${ws}/communities/${community}/rounds`, opts);
  }

  // -- flows -------------------------------------------------------------------------

  getFlow(ws: string, name: string): Promise<{ flow: FlowJson }> {
    return this.request("GET", `/api/workspaces/${ws}/flows/${name}`);
  }

  propagate(ws: string, name: string): Promise<{ flow: FlowJson }> {
    return this.request("POST", `/api/workspaces/${ws}/flows/${name}/propagate`);
  }

  replaceFilter(ws: string, name: string, filter: string, keepText: string): Promise<{ flow: FlowJson }> {
    return this.request("POST", `/api/workspaces/${ws}/flows/${name}/filter`, {
      filter,
      keepText,
    });
  }

  runScenario(ws: string): Promise<{ steps: Record<string, unknown>[] }> {
    return this.request("POST", `/api/workspaces/${ws}/scenario`);
  }

  eventsUrl(workspace?: string): string {
    const qs = new URLSearchParams();
    if (workspace) qs.set("workspace", workspace);
    if (this.token) qs.set("token", this.token);
    const tail = qs.toString();
    return `${this.base}/api/events${tail ? "?" + tail : ""}`;
  }
}
