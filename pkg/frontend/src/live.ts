// Live document session: fills go up over HTTP, style changes come back down
// the event stream. The view holds whatever the last acknowledged server
// state was and folds pushed events into it; reconcile() proves the two ends
// agree.

import { ApiClient, ApiError } from "./api.js";
import {
  DocumentJson,
  EntryJson,
  FillEventJson,
  HistoryRowJson,
  ValueJson,
} from "./model.js";
import { EventStream } from "./sse.js";

export class LiveDocumentView {
  workspace: string;
  id: string;
  template = "";
  fillable: string[] = [];
  values: Record<string, EntryJson> = {};
  styles: Record<string, EntryJson> = {};
  history: HistoryRowJson[] = [];
  firingFeed: string[] = [];
  // 409 takeover: someone else holds the writer session
  readOnly = false;
  banner: string | null = null;

  constructor(workspace: string, id: string) {
    this.workspace = workspace;
    this.id = id;
  }

  loadFrom(doc: DocumentJson): void {
    this.template = doc.template;
    this.fillable = [...doc.fillable];
    this.values = { ...doc.values };
    this.styles = { ...doc.styles };
    this.history = [...doc.history];
  }

  async open(api: ApiClient): Promise<void> {
    const res = await api.getDocument(this.workspace, this.id);
    this.loadFrom(res.document);
  }

  // Wire the pushed updates. Style overlays land here without any refetch.
  attach(stream: EventStream): void {
    stream.on("document", (data) => {
      const ev = data as Partial<FillEventJson>;
      if (ev.workspace !== this.workspace || ev.id !== this.id) return;
      if (ev.action !== "filled") return;
      if (ev.values) this.values = { ...ev.values };
      if (ev.styles) this.styles = { ...ev.styles };
      if (ev.firings) this.firingFeed.push(...ev.firings);
    });
  }

  async fill(api: ApiClient, didget: string, value: ValueJson, author = ""): Promise<string[]> {
    if (this.readOnly) throw new Error("read-only: another writer holds this workspace");
    try {
      const res = await api.fill(this.workspace, this.id, didget, value, author);
      this.loadFrom(res.document);
      return res.firings;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.readOnly = true;
        this.banner = "another session is editing this workspace; view is read-only";
      }
      throw err;
    }
  }

  // true when the rendered state equals the server's current answer
  async reconcile(api: ApiClient): Promise<boolean> {
    const res = await api.getDocument(this.workspace, this.id);
    const doc = res.document;
    const same =
      JSON.stringify(this.values) === JSON.stringify(doc.values) &&
      JSON.stringify(this.styles) === JSON.stringify(doc.styles);
    this.loadFrom(doc);
    return same;
  }
}

// -- annotation threads --------------------------------------------------------

export interface AnnotationJson {
  id: string;
  body:
    | { note: ValueJson }
    | { styleTokens: string[] }
    | { apply: unknown };
  targets: { kind: string; path: string[]; selector: string }[];
  author: string;
  timestamp: string;
}

export interface AnnotationThread {
  annotation: AnnotationJson;
  replies: AnnotationThread[];
}

// Replies are annotations targeting annotations; roots target anything else.
export function annotationThreads(annotations: AnnotationJson[]): AnnotationThread[] {
  const nodes = new Map<string, AnnotationThread>();
  for (const ann of annotations) nodes.set(ann.id, { annotation: ann, replies: [] });
  const roots: AnnotationThread[] = [];
  for (const ann of annotations) {
    const parentRef = ann.targets.find((t) => t.kind === "annotation");
    const parent = parentRef ? nodes.get(parentRef.path[0] ?? "") : undefined;
    if (parent && parentRef) parent.replies.push(nodes.get(ann.id)!);
    else roots.push(nodes.get(ann.id)!);
  }
  return roots;
}

export function threadDepth(thread: AnnotationThread): number {
  let deepest = 0;
  for (const reply of thread.replies) deepest = Math.max(deepest, threadDepth(reply));
  return 1 + deepest;
}
