import { describe, expect, it } from "vitest";

import { meanPool } from "../src/pooling.js";

describe("meanPool", () => {
  it("is the exact arithmetic mean of injected vectors", () => {
    const pooled = meanPool([
      [1, 2],
      [3, 4],
      [5, 6],
    ]);
    expect(Array.from(pooled)).toEqual([3, 4]);
  });

  it("returns the single token vector unchanged", () => {
    const pooled = meanPool([[0.25, -1.5, 8]]);
    expect(Array.from(pooled)).toEqual([0.25, -1.5, 8]);
  });

  it("accumulates in float64", () => {
    const vectors = Array.from({ length: 10 }, () => Float32Array.from([0.1]));
    const pooled = meanPool(vectors);
    expect(pooled[0]).toBeCloseTo(Math.fround(0.1), 12);
  });

  it("rejects mismatched vector lengths", () => {
    expect(() => meanPool([[1, 2], [3]])).toThrow(/length/);
  });

  it("rejects empty input", () => {
    expect(() => meanPool([])).toThrow(/at least one/);
  });
});
