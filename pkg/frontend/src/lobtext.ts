// Canonical .lob text, byte-compatible with the server formatter. Anything
// the UI exports goes through here, and the integration suite holds this
// output against POST /api/fmt.

import {
  ControlJson,
  InvocationJson,
  LayoutJson,
  OperandJson,
  RuleJson,
  ValueJson,
  ValueKind,
  WebJson,
} from "./model.js";

const INDENT = "  ";

export function escapeText(raw: string): string {
  let out = "";
  for (const ch of raw) {
    if (ch === "\\") out += "\\\\";
    else if (ch === '"') out += '\\"';
    else if (ch === "\n") out += "\\n";
    else if (ch === "\t") out += "\\t";
    else if (ch === "\r") out += "\\r";
    else if (ch.charCodeAt(0) < 0x20)
      out += "\\u" + ch.charCodeAt(0).toString(16).padStart(4, "0");
    else out += ch;
  }
  return out;
}

// Decimals print the way the server prints them: shortest round-trip form
// with a forced ".0" on integral values. Exponent notation means the number
// is outside what the editor lets you type, so refuse it instead of
// guessing at the server's spelling.
export function renderNumber(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`not a finite number: ${x}`);
  if (Number.isInteger(x) && Math.abs(x) < 1e15) return `${x}.0`;
  const s = String(x);
  if (s.includes("e") || s.includes("E"))
    throw new Error(`number out of editable range: ${x}`);
  return s;
}

export function renderValue(v: ValueJson): string {
  switch (v.kind) {
    case "boolean":
      return v.value ? "true" : "false";
    case "integer":
      return String(v.value);
    case "decimal":
      return renderNumber(v.value as number);
    case "text":
      return `"${escapeText(String(v.value))}"`;
    case "media":
      return `media("${escapeText(String(v.value))}", "${escapeText(v.mediaKind ?? "")}")`;
  }
}

function renderKind(kind: ValueKind | null, group: boolean): string {
  return (kind ?? "any") + (group ? "*" : "");
}

export function renderOperand(op: OperandJson): string {
  if ("const" in op) return renderValue(op.const);
  if ("var" in op) return `${op.var.name}: ${renderKind(op.var.kind, op.var.group)}`;
  const args = op.app.args.map(renderOperand).join(", ");
  return `${op.app.operator}(${args})`;
}

export function renderInvocation(inv: InvocationJson): string {
  return `${inv.operator}(${inv.args.map(renderOperand).join(", ")})`;
}

// -- expression builders ------------------------------------------------------

export function constant(v: ValueJson): OperandJson {
  return { const: v };
}

export function variable(
  name: string,
  kind: ValueKind | null = null,
  group = false,
): OperandJson {
  return { var: { name, kind, group } };
}

export function call(operator: string, ...args: OperandJson[]): OperandJson {
  return { app: { operator, args } };
}

export function invocation(operator: string, ...args: OperandJson[]): InvocationJson {
  return { operator, args };
}

// -- blocks ---------------------------------------------------------------------

export function operandDecl(name: string, body: OperandJson): string[] {
  return [`operand ${name} = ${renderOperand(body)}`];
}

function layoutLines(layout: LayoutJson, depth: number): string[] {
  const pad = INDENT.repeat(depth);
  const lines = [`${pad}layout ${layout.name}:`];
  for (const obj of layout.objects) {
    let line = `${pad}${INDENT}object ${renderOperand(obj.operand)}`;
    if (obj.at) line += ` at (${renderNumber(obj.at.x)}, ${renderNumber(obj.at.y)})`;
    lines.push(line);
  }
  return lines;
}

export function webBlock(name: string, web: WebJson): string[] {
  const lines = [`web ${name}:`];
  for (const layout of web.layouts) lines.push(...layoutLines(layout, 1));
  for (const [src, dst] of web.links) lines.push(`${INDENT}link ${src} -> ${dst}`);
  return lines;
}

export function ruleLines(rule: RuleJson, depth: number): string[] {
  const pad = INDENT.repeat(depth);
  const lines = [`${pad}rule ${rule.name}:`];
  for (const c of rule.when) lines.push(`${pad}${INDENT}when ${renderInvocation(c)}`);
  for (const a of rule.then) lines.push(`${pad}${INDENT}then ${renderInvocation(a)}`);
  return lines;
}

function controlChild(node: ControlJson, depth: number): string[] {
  if ("rule" in node) return ruleLines(node.rule, depth);
  const pad = INDENT.repeat(depth);
  const lines = [`${pad}connector ${node.connector.operator}:`];
  for (const child of node.connector.children)
    lines.push(...controlChild(child, depth + 1));
  return lines;
}

export function controlBlock(name: string, node: ControlJson): string[] {
  if ("rule" in node) return ruleLines(node.rule, 0);
  const lines = [`connector ${name} ${node.connector.operator}:`];
  for (const child of node.connector.children) lines.push(...controlChild(child, 1));
  return lines;
}

// blocks separate with one blank line; the file ends with a newline
export function joinBlocks(blocks: string[][]): string {
  if (blocks.length === 0) return "";
  return blocks.map((b) => b.join("\n")).join("\n\n") + "\n";
}
