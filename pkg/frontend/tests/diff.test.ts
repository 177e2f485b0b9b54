import { describe, expect, it } from "vitest";

import { diffLines } from "../src/diff.js";

describe("diffLines", () => {
  it("marks identical inputs as all same", () => {
    const out = diffLines("a\nb", "a\nb");
    expect(out).toEqual([
      { op: "same", text: "a" },
      { op: "same", text: "b" },
    ]);
  });

  it("reports a single changed line as del+add", () => {
    const out = diffLines("a\nb\nc", "a\nB\nc");
    expect(out).toEqual([
      { op: "same", text: "a" },
      { op: "del", text: "b" },
      { op: "add", text: "B" },
      { op: "same", text: "c" },
    ]);
  });

  it("handles pure insertions and deletions", () => {
    expect(diffLines("a", "a\nb")).toEqual([
      { op: "same", text: "a" },
      { op: "add", text: "b" },
    ]);
    expect(diffLines("a\nb", "b")).toEqual([
      { op: "del", text: "a" },
      { op: "same", text: "b" },
    ]);
  });

  it("preserves every input line exactly once per side", () => {
    const before = "x\ny\nz\nq";
    const after = "y\nz\nnew\nq\nend";
    const out = diffLines(before, after);
    const lefts = out.filter((l) => l.op !== "add").map((l) => l.text);
    const rights = out.filter((l) => l.op !== "del").map((l) => l.text);
    expect(lefts).toEqual(before.split("\n"));
    expect(rights).toEqual(after.split("\n"));
  });
});
