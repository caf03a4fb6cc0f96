import { describe, expect, it } from "vitest";

import { RuleBuilder, RuleDraft, RuleError } from "../src/rules.js";
import { call, constant } from "../src/lobtext.js";
import { boolean, text } from "../src/model.js";

const reviewedRead = call(
  "entry-or",
  constant(text("reviewed")),
  constant(text("document")),
  constant(boolean(false)),
);

describe("RuleDraft", () => {
  it("collects conditions and actions in order", () => {
    const draft = new RuleDraft("provisional-status")
      .when("equals", reviewedRead, constant(boolean(false)))
      .then("style", constant(text("person-name")), constant(text("frame")));
    const json = draft.toJson();
    expect(json.when).toHaveLength(1);
    expect(json.then[0]?.operator).toBe("style");
  });

  it("rejects names the language would reject", () => {
    expect(() => new RuleDraft("Bad_Name")).toThrow(RuleError);
  });

  it("refuses an empty then-clause", () => {
    const draft = new RuleDraft("idle").when("equals", constant(boolean(true)), constant(boolean(true)));
    expect(() => draft.toJson()).toThrow(/empty then-clause/);
  });

  it("supports removing a drafted line", () => {
    const draft = new RuleDraft("edit-me")
      .then("style", constant(text("a")), constant(text("frame")))
      .then("style", constant(text("b")), constant(text("frame")));
    draft.removeAction(0);
    expect(draft.toJson().then.map((inv) => inv.args[0])).toEqual([constant(text("b"))]);
  });
});

describe("RuleBuilder", () => {
  it("exports a lone rule as a top-level rule block", () => {
    const builder = new RuleBuilder("review-gate");
    builder
      .rule("provisional-status")
      .when("equals", reviewedRead, constant(boolean(false)))
      .then("style", constant(text("person-name")), constant(text("frame")));
    expect(builder.toLob()).toBe(
      "rule provisional-status:\n" +
        '  when equals(entry-or("reviewed", "document", false), false)\n' +
        '  then style("person-name", "frame")\n',
    );
    expect(builder.mechanismNames()).toEqual(["provisional-status"]);
  });

  it("exports grouped rules under the chosen connector", () => {
    const builder = new RuleBuilder("review-gate").groupWith("nand");
    builder
      .rule("provisional-status")
      .when("equals", reviewedRead, constant(boolean(false)))
      .then("style", constant(text("person-name")), constant(text("frame")));
    builder
      .rule("close-out")
      .when("equals", reviewedRead, constant(boolean(true)))
      .then("write", constant(text("reviewed")), constant(boolean(true)));
    expect(builder.toLob()).toBe(
      "connector review-gate nand:\n" +
        "  rule provisional-status:\n" +
        '    when equals(entry-or("reviewed", "document", false), false)\n' +
        '    then style("person-name", "frame")\n' +
        "  rule close-out:\n" +
        '    when equals(entry-or("reviewed", "document", false), true)\n' +
        '    then write("reviewed", true)\n',
    );
    expect(builder.mechanismNames()).toEqual(["review-gate"]);
  });

  it("allows a single-child connector", () => {
    const builder = new RuleBuilder("solo").groupWith("or");
    builder.rule("only").then("put", constant(text("x")), constant(text("log")));
    expect(builder.toLob().startsWith("connector solo or:\n  rule only:\n")).toBe(true);
  });

  it("demands a connector once several rules exist", () => {
    const builder = new RuleBuilder("pair");
    builder.rule("a").then("put", constant(text("x")), constant(text("log")));
    builder.rule("b").then("put", constant(text("y")), constant(text("log")));
    expect(() => builder.toJson()).toThrow(/connector/);
  });

  it("rejects duplicate rule names and unknown connectors", () => {
    const builder = new RuleBuilder("g");
    builder.rule("a");
    expect(() => builder.rule("a")).toThrow(/repeats/);
    expect(() => builder.groupWith("maybe")).toThrow(/not a rule connector/);
  });
});
