// Template editor model. Drag coordinates map 1:1 to stored coordinates; the
// display scale lives entirely in the view layer.

import { ApiClient, SaveResult } from "./api.js";
import { joinBlocks, operandDecl, variable, webBlock } from "./lobtext.js";
import { isIdentifier, LayoutJson, OperandJson, ValueKind, WebJson } from "./model.js";

export interface AtomicDatom {
  name: string;
  kind: ValueKind;
}

export interface CompositeDatom {
  name: string;
  // leaf datom names; the canvas keeps composites flat so a placed composite
  // always exports as an aggregate of typed variables
  children: string[];
}

export type DatomDecl = AtomicDatom | CompositeDatom;

export interface Placement {
  x: number;
  y: number;
}

export class CanvasError extends Error {}

export class CanvasModel {
  webName: string;
  layoutName: string;
  datoms = new Map<string, DatomDecl>();
  placements = new Map<string, Placement>();
  selection: string | null = null;

  constructor(webName = "forms", layoutName = "template") {
    this.webName = webName;
    this.layoutName = layoutName;
  }

  declareAtomic(name: string, kind: ValueKind): void {
    this.checkFresh(name);
    this.datoms.set(name, { name, kind });
  }

  compose(name: string, children: string[]): void {
    this.checkFresh(name);
    if (children.length < 2)
      throw new CanvasError(`composite '${name}' needs at least two parts`);
    for (const child of children) {
      const decl = this.datoms.get(child);
      if (!decl) throw new CanvasError(`composite '${name}' names unknown datom '${child}'`);
      if ("children" in decl)
        throw new CanvasError(`composite '${name}' cannot nest composite '${child}'`);
    }
    this.datoms.set(name, { name, children: [...children] });
  }

  place(name: string, x: number, y: number): void {
    if (!this.datoms.has(name)) throw new CanvasError(`unknown datom '${name}'`);
    if (this.placements.has(name)) throw new CanvasError(`'${name}' is already placed`);
    this.placements.set(name, { x, y });
    this.selection = name;
  }

  move(name: string, x: number, y: number): void {
    if (!this.placements.has(name)) throw new CanvasError(`'${name}' is not placed`);
    this.placements.set(name, { x, y });
  }

  removePlacement(name: string): void {
    this.placements.delete(name);
    if (this.selection === name) this.selection = null;
  }

  select(name: string | null): void {
    if (name !== null && !this.placements.has(name))
      throw new CanvasError(`'${name}' is not placed`);
    this.selection = name;
  }

  private checkFresh(name: string): void {
    if (!isIdentifier(name))
      throw new CanvasError(`datom name '${name}' is not a kebab-case identifier`);
    if (this.datoms.has(name)) throw new CanvasError(`datom '${name}' already declared`);
  }

  private datomOperand(decl: DatomDecl): OperandJson {
    if ("kind" in decl) return variable(decl.name, decl.kind);
    const parts = decl.children.map((child) => {
      const leaf = this.datoms.get(child) as AtomicDatom;
      return variable(leaf.name, leaf.kind);
    });
    return { app: { operator: "aggregate", args: parts } };
  }

  toWebJson(): WebJson {
    const layout: LayoutJson = { name: this.layoutName, objects: [] };
    for (const [name, at] of this.placements) {
      const decl = this.datoms.get(name)!;
      layout.objects.push({ operand: this.datomOperand(decl), at });
    }
    return { layouts: [layout], links: [] };
  }

  // Composites get a named operand declaration so placed aggregates stay
  // attached to their datom name on reload.
  blocks(): string[][] {
    const out: string[][] = [];
    for (const decl of this.datoms.values()) {
      if ("children" in decl) out.push(operandDecl(decl.name, this.datomOperand(decl)));
    }
    out.push(webBlock(this.webName, this.toWebJson()));
    return out;
  }

  toLob(): string {
    return joinBlocks(this.blocks());
  }

  // Validate-then-commit: nothing the server would reject ever lands in the
  // store. Extra blocks (rules from the builder, say) ride along in the same
  // workspace document.
  async save(api: ApiClient, workspace: string, extraBlocks: string[][] = []): Promise<SaveResult> {
    if (this.placements.size === 0)
      throw new CanvasError("empty template: place at least one didget");
    const text = joinBlocks([...this.blocks(), ...extraBlocks]);
    const report = await api.validate(text);
    if (!report.ok) {
      const first = report.diagnostics[0];
      throw new CanvasError(
        first ? `line ${first.line}: ${first.message}` : "template rejected",
      );
    }
    return api.saveWorkspace(workspace, text);
  }

  static fromBundle(bundle: Record<string, unknown>, webName?: string): CanvasModel {
    const webs = (bundle.webs ?? []) as { name: string; web: WebJson }[];
    const named = webName ? webs.find((w) => w.name === webName) : webs[0];
    if (!named) throw new CanvasError(`no web structure${webName ? ` '${webName}'` : ""} to edit`);
    const operands = (bundle.operands ?? []) as { name: string; operand: OperandJson }[];
    const layout = named.web.layouts[0];
    if (!layout) throw new CanvasError(`web '${named.name}' has no layouts`);

    const model = new CanvasModel(named.name, layout.name);
    for (const obj of layout.objects) {
      const op = obj.operand;
      let name: string;
      if ("var" in op) {
        name = op.var.name;
        model.declareAtomic(name, op.var.kind as ValueKind);
      } else if ("app" in op) {
        const owner = operands.find(
          (decl) => JSON.stringify(decl.operand) === JSON.stringify(op),
        );
        if (!owner) continue; // anonymous aggregate: not editable as a datom
        name = owner.name;
        const children: string[] = [];
        for (const arg of op.app.args) {
          if (!("var" in arg)) continue;
          if (!model.datoms.has(arg.var.name))
            model.declareAtomic(arg.var.name, arg.var.kind as ValueKind);
          children.push(arg.var.name);
        }
        model.datoms.set(name, { name, children });
      } else {
        continue; // constants are decoration, not didgets
      }
      if (obj.at) model.placements.set(name, { x: obj.at.x, y: obj.at.y });
    }
    model.selection = null;
    return model;
  }
}
