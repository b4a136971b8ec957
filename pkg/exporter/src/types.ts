/**
 * Raw input records: the corpus document schema minus embeddings.
 * One JSON object per line; an optional header line may carry a task_tag.
 */

export type BinaryLabel = 0 | 1 | null;

export interface RawSentence {
  text: string;
  summary_label?: BinaryLabel;
  rhetorical_label?: BinaryLabel;
}

export interface RawDocument {
  id: string;
  outcome: string;
  sentences: RawSentence[];
  reference_summaries?: number[][];
}

export interface RawCorpus {
  taskTag: string;
  documents: RawDocument[];
}

const OUTCOMES = new Set(["granted", "denied", "remanded", "unknown"]);

export class InputFormatError extends Error {}

function checkLabel(value: unknown, where: string): BinaryLabel {
  if (value === undefined || value === null) return null;
  if (value === 0 || value === 1) return value;
  throw new InputFormatError(`${where}: label must be 0, 1 or null, got ${JSON.stringify(value)}`);
}

/** Parse and validate line-delimited raw records (schema checks minus embeddings). */
export function parseRawCorpus(content: string): RawCorpus {
  const lines = content
    .split("\n")
    .map((line, idx) => ({ line: line.trim(), lineno: idx + 1 }))
    .filter((e) => e.line.length > 0);
  if (lines.length === 0) {
    throw new InputFormatError("no documents");
  }

  let taskTag = "mixed";
  let start = 0;
  const first = parseLine(lines[0].line, lines[0].lineno);
  if (!("id" in first) && ("task_tag" in first || "dimension" in first)) {
    taskTag = typeof first.task_tag === "string" ? first.task_tag : "mixed";
    start = 1;
  }
  if (lines.length - start === 0) {
    throw new InputFormatError("no documents");
  }

  const documents: RawDocument[] = [];
  for (const { line, lineno } of lines.slice(start)) {
    const rec = parseLine(line, lineno);
    const where = `line ${lineno}`;
    if (typeof rec.id !== "string") {
      throw new InputFormatError(`${where}: document needs a string id`);
    }
    const outcome = typeof rec.outcome === "string" ? rec.outcome : "unknown";
    if (!OUTCOMES.has(outcome)) {
      throw new InputFormatError(`${where}: unknown outcome ${JSON.stringify(rec.outcome)}`);
    }
    if (!Array.isArray(rec.sentences) || rec.sentences.length === 0) {
      throw new InputFormatError(`${where}: document ${rec.id} needs at least one sentence`);
    }
    const sentences: RawSentence[] = rec.sentences.map((raw: any, i: number) => {
      if (typeof raw?.text !== "string") {
        throw new InputFormatError(`${where}: document ${rec.id} sentence ${i} needs text`);
      }
      return {
        text: raw.text,
        summary_label: checkLabel(raw.summary_label, `${where} sentence ${i}`),
        rhetorical_label: checkLabel(raw.rhetorical_label, `${where} sentence ${i}`),
      };
    });
    const refs: number[][] = (rec.reference_summaries ?? []).map((ref: any) => {
      if (!Array.isArray(ref)) {
        throw new InputFormatError(`${where}: reference summaries must be index arrays`);
      }
      return ref.map((v: any) => {
        const idx = Number(v);
        if (!Number.isInteger(idx) || idx < 0 || idx >= sentences.length) {
          throw new InputFormatError(`${where}: reference index ${v} out of range`);
        }
        return idx;
      });
    });
    documents.push({ id: rec.id, outcome, sentences, reference_summaries: refs });
  }
  return { taskTag, documents };
}

function parseLine(line: string, lineno: number): any {
  try {
    return JSON.parse(line);
  } catch (err) {
    throw new InputFormatError(`line ${lineno}: malformed record: ${(err as Error).message}`);
  }
}
