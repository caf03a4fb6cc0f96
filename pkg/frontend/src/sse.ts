// Server-sent events over fetch streaming. EventSource would do in a browser,
// but a hand-rolled reader also runs under node for the tests and lets us
// pass auth headers.

export interface SseFrame {
  id?: string;
  event: string;
  data: string;
}

// Incremental parser for the text/event-stream format: feed it chunks, it
// yields complete frames. Comment lines (leading ":") are dropped, multiple
// data lines join with "\n", CRLF is tolerated.
export class SseParser {
  private buffer = "";
  private decoder = new TextDecoder();

  push(chunk: Uint8Array | string): SseFrame[] {
    this.buffer +=
      typeof chunk === "string" ? chunk : this.decoder.decode(chunk, { stream: true });
    const frames: SseFrame[] = [];
    for (;;) {
      const lf = this.buffer.indexOf("\n\n");
      const crlf = this.buffer.indexOf("\r\n\r\n");
      let end: number, skip: number;
      if (lf === -1 && crlf === -1) break;
      if (crlf !== -1 && (lf === -1 || crlf < lf)) {
        end = crlf;
        skip = 4;
      } else {
        end = lf;
        skip = 2;
      }
      const raw = this.buffer.slice(0, end);
      this.buffer = this.buffer.slice(end + skip);
      const frame = parseFrame(raw);
      if (frame) frames.push(frame);
    }
    return frames;
  }
}

function parseFrame(raw: string): SseFrame | null {
  let id: string | undefined;
  let event = "message";
  const data: string[] = [];
  for (const line of raw.split(/\r?\n/)) {
    if (!line || line.startsWith(":")) continue;
    const colon = line.indexOf(":");
    const field = colon === -1 ? line : line.slice(0, colon);
    let value = colon === -1 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "id") id = value;
    else if (field === "event") event = value;
    else if (field === "data") data.push(value);
  }
  if (data.length === 0) return null;
  return { id, event, data: data.join("\n") };
}

export type FrameHandler = (data: unknown, frame: SseFrame) => void;

export class EventStream {
  private handlers = new Map<string, FrameHandler[]>();
  private controller = new AbortController();
  private fetchFn: typeof fetch;
  closed = false;

  constructor(fetchFn: typeof fetch = fetch) {
    this.fetchFn = fetchFn;
  }

  on(event: string, fn: FrameHandler): this {
    const list = this.handlers.get(event) ?? [];
    list.push(fn);
    this.handlers.set(event, list);
    return this;
  }

  close(): void {
    this.closed = true;
    this.controller.abort();
  }

  // Resolves once the stream ends or is closed; dispatches along the way.
  async connect(url: string, headers: Record<string, string> = {}): Promise<void> {
    const res = await this.fetchFn(url, {
      headers: { accept: "text/event-stream", ...headers },
      signal: this.controller.signal,
    });
    if (!res.ok || !res.body) throw new Error(`event stream refused: ${res.status}`);
    const reader = res.body.getReader();
    const parser = new SseParser();
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done || this.closed) return;
        for (const frame of parser.push(value)) this.dispatch(frame);
      }
    } catch (err) {
      if (!this.closed) throw err;
    }
  }

  private dispatch(frame: SseFrame): void {
    let data: unknown = frame.data;
    try {
      data = JSON.parse(frame.data);
    } catch {
      // keep the raw string
    }
    for (const fn of this.handlers.get(frame.event) ?? []) fn(data, frame);
    for (const fn of this.handlers.get("*") ?? []) fn(data, frame);
  }
}
