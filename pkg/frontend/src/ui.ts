// View layer: pure functions from models to HTML strings. main.ts pours the
// strings into the page and hooks events; everything here stays testable
// without a browser.

import { CanvasModel } from "./canvas.js";
import { AnnotationThread, LiveDocumentView } from "./live.js";
import { DiagnosticJson, entryValue } from "./model.js";
import { renderValue } from "./lobtext.js";

// stored coordinates are layout units; the canvas draws them scaled
export const CANVAS_SCALE = 2;

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderCanvasHtml(model: CanvasModel): string {
  const items: string[] = [];
  for (const [name, at] of model.placements) {
    const selected = model.selection === name ? " selected" : "";
    const decl = model.datoms.get(name)!;
    const label = "children" in decl ? `${name} (${decl.children.join(", ")})` : name;
    items.push(
      `<div class="didget${selected}" data-name="${escapeHtml(name)}" ` +
        `style="left:${at.x * CANVAS_SCALE}px;top:${at.y * CANVAS_SCALE}px">` +
        `${escapeHtml(label)}</div>`,
    );
  }
  return `<div class="canvas" data-layout="${escapeHtml(model.layoutName)}">${items.join("")}</div>`;
}

export function renderDiagnosticsHtml(diags: DiagnosticJson[]): string {
  if (diags.length === 0) return "";
  const rows = diags.map(
    (d) =>
      `<li class="diagnostic ${escapeHtml(d.severity)}" data-line="${d.line ?? ""}">` +
      `${escapeHtml(d.message)}</li>`,
  );
  return `<ul class="diagnostics">${rows.join("")}</ul>`;
}

export function renderDocumentHtml(view: LiveDocumentView): string {
  const parts: string[] = [];
  if (view.banner)
    parts.push(`<div class="banner readonly">${escapeHtml(view.banner)}</div>`);
  for (const didget of view.fillable) {
    const entry = entryValue(view.values[didget]);
    const styleEntry = entryValue(view.styles[`style-${didget}`]);
    const classes = ["field"];
    if (styleEntry) classes.push(`style-${styleEntry.value}`);
    const shown = entry ? renderValue(entry) : "";
    parts.push(
      `<label class="${classes.join(" ")}" data-didget="${escapeHtml(didget)}">` +
        `${escapeHtml(didget)}<input value="${escapeHtml(shown)}"` +
        `${view.readOnly ? " disabled" : ""}></label>`,
    );
  }
  // composite overlays (style targets that are not fillable leaves)
  for (const key of Object.keys(view.styles)) {
    const name = key.replace(/^style-/, "");
    if (view.fillable.includes(name)) continue;
    const tok = entryValue(view.styles[key]);
    if (tok)
      parts.push(
        `<div class="overlay style-${escapeHtml(String(tok.value))}" data-for="${escapeHtml(name)}"></div>`,
      );
  }
  const feed = view.firingFeed
    .map((rule) => `<li>${escapeHtml(rule)}</li>`)
    .join("");
  parts.push(`<ol class="firings">${feed}</ol>`);
  return `<section class="document" data-id="${escapeHtml(view.id)}">${parts.join("")}</section>`;
}

export function renderThreadHtml(thread: AnnotationThread): string {
  const ann = thread.annotation;
  const body =
    "note" in ann.body
      ? escapeHtml(String(ann.body.note.value))
      : "styleTokens" in ann.body
        ? `<code>${escapeHtml(ann.body.styleTokens.join(" "))}</code>`
        : "<em>operator</em>";
  const replies = thread.replies.map(renderThreadHtml).join("");
  return (
    `<article class="annotation" data-id="${escapeHtml(ann.id)}">` +
    `<header>${escapeHtml(ann.author)} · ${escapeHtml(ann.timestamp)}</header>` +
    `<p>${body}</p>${replies}</article>`
  );
}
