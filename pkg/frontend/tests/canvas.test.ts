import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { CanvasError, CanvasModel } from "../src/canvas.js";

function personCanvas(): CanvasModel {
  const canvas = new CanvasModel("forms", "person-form");
  canvas.declareAtomic("first-name", "text");
  canvas.declareAtomic("family-name", "text");
  canvas.compose("person-name", ["first-name", "family-name"]);
  canvas.declareAtomic("reviewed", "boolean");
  canvas.place("person-name", 40, 60);
  canvas.place("reviewed", 40, 140);
  return canvas;
}

interface Recorded {
  method: string;
  url: string;
  body: unknown;
}

function recordingClient(responses: Record<string, unknown>): {
  api: ApiClient;
  calls: Recorded[];
} {
  const calls: Recorded[] = [];
  const fetchFn = (async (url: RequestInfo | URL, init?: RequestInit) => {
    const path = String(url).replace("http://stub", "");
    calls.push({
      method: init?.method ?? "GET",
      url: path,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    const hit = responses[`${init?.method ?? "GET"} ${path}`];
    if (hit === undefined) return new Response("{}", { status: 404 });
    return new Response(JSON.stringify(hit), { status: 200 });
  }) as typeof fetch;
  return { api: new ApiClient("http://stub", { fetchFn }), calls };
}

describe("editing", () => {
  it("rejects datom names the language would reject", () => {
    const canvas = new CanvasModel();
    expect(() => canvas.declareAtomic("FirstName", "text")).toThrow(CanvasError);
    expect(() => canvas.declareAtomic("first_name", "text")).toThrow(CanvasError);
  });

  it("keeps composites flat and at least two wide", () => {
    const canvas = new CanvasModel();
    canvas.declareAtomic("a", "text");
    canvas.declareAtomic("b", "text");
    canvas.compose("ab", ["a", "b"]);
    expect(() => canvas.compose("solo", ["a"])).toThrow(/two parts/);
    expect(() => canvas.compose("nested", ["ab", "a"])).toThrow(/nest/);
  });

  it("places each didget once and tracks selection", () => {
    const canvas = new CanvasModel();
    canvas.declareAtomic("a", "text");
    canvas.place("a", 10, 20);
    expect(canvas.selection).toBe("a");
    expect(() => canvas.place("a", 1, 1)).toThrow(/already placed/);
    canvas.move("a", 15, 25);
    expect(canvas.placements.get("a")).toEqual({ x: 15, y: 25 });
    canvas.removePlacement("a");
    expect(canvas.selection).toBeNull();
    expect(() => canvas.move("a", 0, 0)).toThrow(/not placed/);
  });
});

describe("export", () => {
  it("exports the template in the server's canonical form", () => {
    expect(personCanvas().toLob()).toBe(
      "operand person-name = aggregate(first-name: text, family-name: text)\n" +
        "\n" +
        "web forms:\n" +
        "  layout person-form:\n" +
        "    object aggregate(first-name: text, family-name: text) at (40.0, 60.0)\n" +
        "    object reviewed: boolean at (40.0, 140.0)\n",
    );
  });
});

describe("saving", () => {
  it("refuses to save an empty template without asking the server", async () => {
    const { api, calls } = recordingClient({});
    const canvas = new CanvasModel();
    await expect(canvas.save(api, "demo")).rejects.toThrow(/empty template/);
    expect(calls).toEqual([]);
  });

  it("never commits a template the validator rejected", async () => {
    const { api, calls } = recordingClient({
      "POST /api/validate": {
        ok: false,
        diagnostics: [{ line: 3, message: "[layout] unknown kind", severity: "error" }],
      },
    });
    await expect(personCanvas().save(api, "demo")).rejects.toThrow(
      /line 3: \[layout\] unknown kind/,
    );
    expect(calls.map((c) => c.method)).toEqual(["POST"]);
    expect(calls[0]?.url).toBe("/api/validate");
  });

  it("commits through the workspace route once validation passes", async () => {
    const { api, calls } = recordingClient({
      "POST /api/validate": { ok: true, diagnostics: [] },
      "PUT /api/workspaces/demo": { name: "demo", created: true, diagnostics: [] },
    });
    const result = await personCanvas().save(api, "demo");
    expect(result.created).toBe(true);
    expect(calls.map((c) => `${c.method} ${c.url}`)).toEqual([
      "POST /api/validate",
      "PUT /api/workspaces/demo",
    ]);
    const put = calls[1]?.body as { text: string };
    expect(put.text).toBe(personCanvas().toLob());
  });
});

describe("reloading", () => {
  it("round-trips through bundle JSON with names and coordinates intact", () => {
    const original = personCanvas();
    const bundle = {
      operands: [
        {
          name: "person-name",
          operand: {
            app: {
              operator: "aggregate",
              args: [
                { var: { name: "first-name", kind: "text", group: false } },
                { var: { name: "family-name", kind: "text", group: false } },
              ],
            },
          },
        },
      ],
      webs: [{ name: "forms", web: original.toWebJson() }],
    };
    const reloaded = CanvasModel.fromBundle(bundle, "forms");
    expect(reloaded.layoutName).toBe("person-form");
    expect([...reloaded.placements.entries()]).toEqual([
      ["person-name", { x: 40, y: 60 }],
      ["reviewed", { x: 40, y: 140 }],
    ]);
    expect(reloaded.datoms.get("person-name")).toEqual({
      name: "person-name",
      children: ["first-name", "family-name"],
    });
    expect(reloaded.toLob()).toBe(original.toLob());
  });

  it("skips anonymous aggregates instead of inventing names", () => {
    const bundle = {
      operands: [],
      webs: [
        {
          name: "forms",
          web: {
            layouts: [
              {
                name: "template",
                objects: [
                  {
                    operand: {
                      app: {
                        operator: "aggregate",
                        args: [{ var: { name: "x", kind: "text", group: false } }],
                      },
                    },
                    at: { x: 1, y: 2 },
                  },
                  { operand: { var: { name: "y", kind: "integer", group: false } }, at: { x: 3, y: 4 } },
                ],
              },
            ],
            links: [],
          },
        },
      ],
    };
    const model = CanvasModel.fromBundle(bundle);
    expect([...model.placements.keys()]).toEqual(["y"]);
  });

  it("fails loudly when the workspace has no web to edit", () => {
    expect(() => CanvasModel.fromBundle({ webs: [] })).toThrow(/no web structure/);
  });
});
