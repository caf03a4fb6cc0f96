// JSON shapes exchanged with the service, field for field.

export type ValueKind = "boolean" | "integer" | "decimal" | "text" | "media";

export interface ValueJson {
  kind: ValueKind;
  value: boolean | number | string;
  mediaKind?: string;
}

// attribute sets travel as ordered [name, value] pairs
export type AttrsJson = [string, ValueJson][];

export type OperandJson =
  | { const: ValueJson }
  | { var: { name: string; kind: ValueKind | null; group: boolean } }
  | { app: { operator: string; args: OperandJson[] } };

export interface InvocationJson {
  operator: string;
  args: OperandJson[];
}

export interface RuleJson {
  name: string;
  when: InvocationJson[];
  then: InvocationJson[];
}

export type ControlJson =
  | { rule: RuleJson }
  | { connector: { operator: string; children: ControlJson[] } };

export interface DiagnosticJson {
  severity: string;
  production: string;
  message: string;
  line: number | null;
  column: number | null;
}

export interface PlacementJson {
  operand: OperandJson;
  at: { x: number; y: number } | null;
}

export interface LayoutJson {
  name: string;
  objects: PlacementJson[];
}

export interface WebJson {
  layouts: LayoutJson[];
  links: [string, string][];
}

export interface HistoryRowJson {
  seq: number;
  didget: string;
  old: EntryJson | null;
  new: EntryJson | null;
  author: string;
  timestamp: string;
}

// entries are constants almost always; anything else arrives wrapped
export type EntryJson = ValueJson | { operand: OperandJson };

export interface DocumentJson {
  id: string;
  template: string;
  didgets: { datom: string; at: { x: number; y: number } }[];
  fillable: string[];
  mechanisms: string[];
  values: Record<string, EntryJson>;
  styles: Record<string, EntryJson>;
  markers: Record<string, EntryJson>;
  history: HistoryRowJson[];
}

export interface FactJson {
  name: string;
  owner: string;
  attrs: AttrsJson;
}

export interface FlowJson {
  name: string;
  views: Record<string, AttrsJson[]>;
  emissions: number;
  capped: boolean;
}

// pushed on the event stream after a fill
export interface FillEventJson {
  workspace: string;
  id: string;
  didget: string;
  action: string;
  values: Record<string, EntryJson>;
  styles: Record<string, EntryJson>;
  firings: string[];
  styleChanges: string[];
}

const IDENT = /^[a-z][a-z0-9]*(-[a-z0-9]+)*$/;

export function isIdentifier(name: string): boolean {
  return IDENT.test(name);
}

export function text(value: string): ValueJson {
  return { kind: "text", value };
}

export function integer(value: number): ValueJson {
  if (!Number.isInteger(value)) throw new Error(`not an integer: ${value}`);
  return { kind: "integer", value };
}

export function decimal(value: number): ValueJson {
  return { kind: "decimal", value };
}

export function boolean(value: boolean): ValueJson {
  return { kind: "boolean", value };
}

export function entryValue(entry: EntryJson | undefined): ValueJson | null {
  if (!entry || "operand" in entry) return null;
  return entry as ValueJson;
}
