import { describe, expect, it } from "vitest";

import { encodeSidecar, renderCorpusLines } from "../src/corpusWriter.js";
import { parseRawCorpus, InputFormatError } from "../src/types.js";

const doc = {
  id: "case-1",
  outcome: "granted",
  sentences: [
    { text: "first sentence", summary_label: 1 as const, rhetorical_label: null },
    { text: "second sentence", summary_label: 0 as const, rhetorical_label: null },
  ],
  reference_summaries: [[0]],
  embeddings: [Float32Array.from([1.5, -2.25, 0.125]), Float32Array.from([0.5, 0.75, -1])],
};

describe("sidecar encoding", () => {
  it("writes the documented layout", () => {
    const buf = encodeSidecar(doc.embeddings, 3);
    expect(buf.subarray(0, 4).toString("ascii")).toBe("RSEB");
    expect(buf.readUInt32LE(4)).toBe(1); // version
    expect(buf.readUInt32LE(8)).toBe(3); // dimension
    expect(buf.readUInt32LE(12)).toBe(2); // vector count
    expect(buf.length).toBe(16 + 2 * 3 * 4);
    expect(buf.readFloatLE(16)).toBe(1.5);
    expect(buf.readFloatLE(16 + 3 * 4)).toBe(0.5);
  });
});

describe("corpus rendering", () => {
  it("emits a header line plus one record per document", () => {
    const text = renderCorpusLines([doc], 3, "summarization", true);
    const lines = text.trim().split("\n");
    expect(JSON.parse(lines[0])).toEqual({ dimension: 3, task_tag: "summarization" });
    const rec = JSON.parse(lines[1]);
    expect(rec.id).toBe("case-1");
    expect(rec.sentences[0].embedding).toEqual([1.5, -2.25, 0.125]);
    expect(rec.sentences[0].summary_label).toBe(1);
    expect(rec.reference_summaries).toEqual([[0]]);
  });

  it("omits inline embeddings in sidecar mode", () => {
    const text = renderCorpusLines([doc], 3, "mixed", false);
    const rec = JSON.parse(text.trim().split("\n")[1]);
    expect(rec.sentences[0].embedding).toBeUndefined();
  });

  it("round-trips float32 values exactly through JSON", () => {
    const value = Math.fround(0.3333333); // a value with a float32-exact double form
    const rendered = renderCorpusLines(
      [{ ...doc, embeddings: [Float32Array.from([value, 0, 0]), Float32Array.from([0, 0, 0])] }],
      3,
      "mixed",
      true,
    );
    const rec = JSON.parse(rendered.trim().split("\n")[1]);
    expect(rec.sentences[0].embedding[0]).toBe(value);
  });
});

describe("raw record validation", () => {
  it("accepts records with an optional header", () => {
    const content =
      JSON.stringify({ task_tag: "summarization" }) +
      "\n" +
      JSON.stringify({ id: "a", outcome: "denied", sentences: [{ text: "x" }] });
    const parsed = parseRawCorpus(content);
    expect(parsed.taskTag).toBe("summarization");
    expect(parsed.documents).toHaveLength(1);
  });

  it("rejects empty input", () => {
    expect(() => parseRawCorpus("")).toThrow(/no documents/);
  });

  it("rejects documents without sentences", () => {
    const content = JSON.stringify({ id: "a", outcome: "denied", sentences: [] });
    expect(() => parseRawCorpus(content)).toThrow(InputFormatError);
  });

  it("reports malformed lines with their line number", () => {
    expect(() => parseRawCorpus('{"id": broken')).toThrow(/line 1/);
  });

  it("rejects out-of-range reference indices", () => {
    const content = JSON.stringify({
      id: "a",
      outcome: "denied",
      sentences: [{ text: "x" }],
      reference_summaries: [[4]],
    });
    expect(() => parseRawCorpus(content)).toThrow(/out of range/);
  });
});
