/**
 * Writers for the corpus file format consumed by the Python package:
 * a JSON header line, one JSON document record per line, and optionally a
 * binary sidecar of little-endian float32 vectors (magic "RSEB", version 1).
 */

import { writeFileSync } from "node:fs";

import type { RawDocument } from "./types.js";

export const SIDECAR_MAGIC = "RSEB";
export const SIDECAR_VERSION = 1;

export interface EmbeddedDocument extends RawDocument {
  embeddings: Float32Array[];
}

export function encodeSidecar(vectors: Float32Array[], dimension: number): Buffer {
  const header = Buffer.alloc(16);
  header.write(SIDECAR_MAGIC, 0, "ascii");
  header.writeUInt32LE(SIDECAR_VERSION, 4);
  header.writeUInt32LE(dimension, 8);
  header.writeUInt32LE(vectors.length, 12);
  const payload = Buffer.alloc(vectors.length * dimension * 4);
  vectors.forEach((vec, i) => {
    for (let d = 0; d < dimension; d++) {
      payload.writeFloatLE(vec[d], (i * dimension + d) * 4);
    }
  });
  return Buffer.concat([header, payload]);
}

export function renderCorpusLines(
  documents: EmbeddedDocument[],
  dimension: number,
  taskTag: string,
  inlineEmbeddings: boolean,
): string {
  const lines = [JSON.stringify({ dimension, task_tag: taskTag })];
  for (const doc of documents) {
    lines.push(
      JSON.stringify({
        id: doc.id,
        outcome: doc.outcome,
        sentences: doc.sentences.map((s, i) => ({
          text: s.text,
          // float32 values serialize exactly as JS doubles, so the Python
          // loader reproduces them bit for bit
          ...(inlineEmbeddings ? { embedding: Array.from(doc.embeddings[i]) } : {}),
          summary_label: s.summary_label ?? null,
          rhetorical_label: s.rhetorical_label ?? null,
        })),
        reference_summaries: doc.reference_summaries ?? [],
      }),
    );
  }
  return lines.join("\n") + "\n";
}

export function writeCorpus(
  documents: EmbeddedDocument[],
  dimension: number,
  taskTag: string,
  corpusPath: string,
  sidecar: boolean,
): string[] {
  const written = [corpusPath];
  writeFileSync(corpusPath, renderCorpusLines(documents, dimension, taskTag, !sidecar), "utf-8");
  if (sidecar) {
    const sidecarPath = `${corpusPath}.emb`;
    const vectors = documents.flatMap((doc) => doc.embeddings);
    writeFileSync(sidecarPath, encodeSidecar(vectors, dimension));
    written.push(sidecarPath);
  }
  return written;
}
