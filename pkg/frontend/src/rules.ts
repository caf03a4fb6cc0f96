// Structured when/then editor. Drafts hold invocation trees, never text, so
// everything exported is grammatical by construction; kind discipline is the
// server's call via /api/validate before anything persists.

import { ApiClient } from "./api.js";
import { CanvasModel } from "./canvas.js";
import { controlBlock, joinBlocks } from "./lobtext.js";
import {
  ControlJson,
  InvocationJson,
  isIdentifier,
  OperandJson,
  RuleJson,
  ValueJson,
  ValueKind,
} from "./model.js";

export class RuleError extends Error {}

export class RuleDraft {
  name: string;
  conditions: InvocationJson[] = [];
  actions: InvocationJson[] = [];

  constructor(name: string) {
    if (!isIdentifier(name)) throw new RuleError(`rule name '${name}' is not an identifier`);
    this.name = name;
  }

  when(operator: string, ...args: OperandJson[]): this {
    this.conditions.push({ operator, args });
    return this;
  }

  then(operator: string, ...args: OperandJson[]): this {
    this.actions.push({ operator, args });
    return this;
  }

  removeCondition(index: number): this {
    this.conditions.splice(index, 1);
    return this;
  }

  removeAction(index: number): this {
    this.actions.splice(index, 1);
    return this;
  }

  toJson(): RuleJson {
    // a rule with nothing to do is not a rule (the grammar wants action+)
    if (this.actions.length === 0)
      throw new RuleError(`rule '${this.name}' has an empty then-clause`);
    return { name: this.name, when: [...this.conditions], then: [...this.actions] };
  }
}

const CONNECTORS = new Set(["or", "and", "nand", "nor", "xor"]);

export class RuleBuilder {
  name: string;
  connector: string | null = null;
  drafts: RuleDraft[] = [];

  constructor(name: string) {
    if (!isIdentifier(name)) throw new RuleError(`control name '${name}' is not an identifier`);
    this.name = name;
  }

  rule(name: string): RuleDraft {
    if (this.drafts.some((d) => d.name === name))
      throw new RuleError(`rule name '${name}' repeats`);
    const draft = new RuleDraft(name);
    this.drafts.push(draft);
    return draft;
  }

  groupWith(connector: string): this {
    if (!CONNECTORS.has(connector))
      throw new RuleError(`'${connector}' is not a rule connector`);
    this.connector = connector;
    return this;
  }

  toJson(): ControlJson {
    if (this.drafts.length === 0) throw new RuleError("no rules drafted");
    const rules = this.drafts.map((d) => ({ rule: d.toJson() }));
    if (this.connector === null) {
      if (rules.length > 1)
        throw new RuleError("several rules need a connector (try groupWith('or'))");
      return rules[0]!;
    }
    // one child is fine: the grammar's rule+ starts at one
    return { connector: { operator: this.connector, children: rules } };
  }

  // names the document mechanism(s) this control contributes
  mechanismNames(): string[] {
    return this.connector === null ? this.drafts.map((d) => d.name) : [this.name];
  }

  toLob(): string {
    return joinBlocks([controlBlock(this.name, this.toJson())]);
  }

  async checkAgainst(api: ApiClient): Promise<{ ok: boolean; messages: string[] }> {
    const report = await api.validate(this.toLob());
    return {
      ok: report.ok,
      messages: report.diagnostics.map((d) =>
        d.line ? `line ${d.line}: ${d.message}` : d.message,
      ),
    };
  }
}

export interface DryRunSpec {
  // sandbox didgets the rule reads or writes
  datoms: { name: string; kind: ValueKind }[];
  // the fill that pokes the sandbox
  fill: { didget: string; value: ValueJson };
}

export interface DryRunResult {
  workspace: string;
  firings: string[];
  values: Record<string, unknown>;
  styles: Record<string, unknown>;
}

// Run the drafted rules against a throwaway sandbox: a one-layout template
// carrying the named didgets, one document, one fill. The server engine does
// the firing; we just read the trace back.
export async function dryRun(
  builder: RuleBuilder,
  api: ApiClient,
  spec: DryRunSpec,
): Promise<DryRunResult> {
  const workspace = `sandbox-${Math.random().toString(36).slice(2, 10)}`;
  const canvas = new CanvasModel("sandbox", "bench");
  spec.datoms.forEach((d, i) => {
    canvas.declareAtomic(d.name, d.kind);
    canvas.place(d.name, 10, 10 + 40 * i);
  });
  const text = joinBlocks([...canvas.blocks(), controlBlock(builder.name, builder.toJson())]);
  const report = await api.validate(text);
  if (!report.ok)
    throw new RuleError(report.diagnostics[0]?.message ?? "sandbox rejected");
  await api.saveWorkspace(workspace, text);
  await api.createDocument(workspace, "dry-run", "bench", builder.mechanismNames());
  const out = await api.fill(workspace, "dry-run", spec.fill.didget, spec.fill.value, "dry-run");
  return {
    workspace,
    firings: out.firings,
    values: out.document.values,
    styles: out.document.styles,
  };
}
