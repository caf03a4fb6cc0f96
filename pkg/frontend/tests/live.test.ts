import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import {
  AnnotationJson,
  annotationThreads,
  LiveDocumentView,
  threadDepth,
} from "../src/live.js";
import { text } from "../src/model.js";
import { EventStream } from "../src/sse.js";

function doc(values: Record<string, unknown>, styles: Record<string, unknown> = {}) {
  return {
    id: "d1",
    template: "person-form",
    didgets: [],
    fillable: ["first-name", "reviewed"],
    mechanisms: ["review-gate"],
    values,
    styles,
    markers: {},
    history: [],
  };
}

function frame(event: string, payload: unknown): string {
  return `event: ${event}\ndata: ${JSON.stringify(payload)}\n\n`;
}

function streamOf(...chunks: string[]): ReadableStream<Uint8Array> {
  const encoder = new TextEncoder();
  return new ReadableStream({
    start(controller) {
      for (const chunk of chunks) controller.enqueue(encoder.encode(chunk));
      controller.close();
    },
  });
}

describe("pushed updates", () => {
  it("folds a fill event into values, styles, and the firing feed without refetching", async () => {
    let fetched = 0;
    const api = new ApiClient("http://stub", {
      fetchFn: (async () => {
        fetched += 1;
        return new Response("{}", { status: 200 });
      }) as typeof fetch,
    });
    void api;

    const view = new LiveDocumentView("demo", "d1");
    view.loadFrom(doc({}));
    const stream = new EventStream((async () =>
      new Response(
        streamOf(
          frame("document", {
            workspace: "demo",
            id: "d1",
            didget: "reviewed",
            action: "filled",
            values: { reviewed: { kind: "boolean", value: true } },
            styles: { "style-person-name": { kind: "text", value: "frame" } },
            firings: ["provisional-status"],
            styleChanges: ["style-person-name"],
          }),
        ),
        { status: 200 },
      )) as typeof fetch);
    view.attach(stream);
    await stream.connect("http://stub/api/events");

    expect(fetched).toBe(0);
    expect(view.values).toEqual({ reviewed: { kind: "boolean", value: true } });
    expect(view.styles).toEqual({ "style-person-name": { kind: "text", value: "frame" } });
    expect(view.firingFeed).toEqual(["provisional-status"]);
  });

  it("ignores events for other documents and other actions", async () => {
    const view = new LiveDocumentView("demo", "d1");
    view.loadFrom(doc({}));
    const stream = new EventStream((async () =>
      new Response(
        streamOf(
          frame("document", { workspace: "demo", id: "other", action: "filled", values: { x: text("no") } }),
          frame("document", { workspace: "elsewhere", id: "d1", action: "filled", values: { x: text("no") } }),
          frame("document", { workspace: "demo", id: "d1", action: "created", values: { x: text("no") } }),
        ),
        { status: 200 },
      )) as typeof fetch);
    view.attach(stream);
    await stream.connect("http://stub/api/events");
    expect(view.values).toEqual({});
  });
});

describe("filling", () => {
  it("applies the acknowledged document after a fill", async () => {
    const api = new ApiClient("http://stub", {
      fetchFn: (async () =>
        new Response(
          JSON.stringify({
            document: doc({ "first-name": text("Ada") }),
            firings: [],
          }),
          { status: 200 },
        )) as typeof fetch,
    });
    const view = new LiveDocumentView("demo", "d1");
    view.loadFrom(doc({}));
    await view.fill(api, "first-name", text("Ada"));
    expect(view.values["first-name"]).toEqual(text("Ada"));
  });

  it("drops to read-only with a banner when another writer holds the workspace", async () => {
    const api = new ApiClient("http://stub", {
      fetchFn: (async () =>
        new Response(JSON.stringify({ detail: "workspace is locked" }), { status: 409 })) as typeof fetch,
    });
    const view = new LiveDocumentView("demo", "d1");
    view.loadFrom(doc({}));
    await expect(view.fill(api, "first-name", text("Ada"))).rejects.toThrow(ApiError);
    expect(view.readOnly).toBe(true);
    expect(view.banner).toMatch(/read-only/);
    await expect(view.fill(api, "first-name", text("Eva"))).rejects.toThrow(/read-only/);
  });

  it("reconcile reports whether pushed state matched the server", async () => {
    const server = doc({ reviewed: { kind: "boolean", value: true } });
    const api = new ApiClient("http://stub", {
      fetchFn: (async () =>
        new Response(JSON.stringify({ document: server }), { status: 200 })) as typeof fetch,
    });
    const view = new LiveDocumentView("demo", "d1");
    view.loadFrom(doc({}));
    expect(await view.reconcile(api)).toBe(false);
    expect(await view.reconcile(api)).toBe(true);
  });
});

describe("annotation threads", () => {
  function ann(id: string, target?: string): AnnotationJson {
    return {
      id,
      body: { note: text(`note ${id}`) },
      targets: target
        ? [{ kind: "annotation", path: [target], selector: "" }]
        : [{ kind: "topological-object", path: ["forms"], selector: "person-name" }],
      author: "ada",
      timestamp: "2026-01-01T00:00:00Z",
    };
  }

  it("nests replies under the annotation they target", () => {
    const threads = annotationThreads([ann("a"), ann("b", "a"), ann("c", "b"), ann("d")]);
    expect(threads.map((t) => t.annotation.id)).toEqual(["a", "d"]);
    expect(threads[0]?.replies[0]?.annotation.id).toBe("b");
    expect(threads[0]?.replies[0]?.replies[0]?.annotation.id).toBe("c");
    expect(threadDepth(threads[0]!)).toBe(3);
    expect(threadDepth(threads[1]!)).toBe(1);
  });

  it("treats replies to unknown annotations as roots", () => {
    const threads = annotationThreads([ann("orphan", "gone")]);
    expect(threads).toHaveLength(1);
  });
});
