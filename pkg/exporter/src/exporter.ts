/**
 * Export pipeline: validate raw records, embed every sentence by
 * mean-pooling its token vectors, and write the corpus files (inline floats
 * or binary sidecar) that the Python package loads directly.
 */

import { mkdirSync, readFileSync } from "node:fs";
import { join } from "node:path";

import { writeCorpus, type EmbeddedDocument } from "./corpusWriter.js";
import type { Encoder } from "./encoder.js";
import { meanPool } from "./pooling.js";
import { parseRawCorpus } from "./types.js";

export interface ExportConfig {
  model: string;
  /** Pooling is fixed to the arithmetic mean over non-padding tokens. */
  pooling: "mean";
  maxLength: number;
  batchSize: number;
  expectedDim: number;
}

export const DEFAULT_CONFIG: ExportConfig = {
  model: "nlpaueb/legal-bert-base-uncased",
  pooling: "mean",
  maxLength: 512,
  batchSize: 8,
  expectedDim: 768,
};

export interface ExportStats {
  documents: number;
  sentences: number;
  truncated: number;
  emptySentences: number;
  dimension: number;
  outputs: string[];
}

export interface ExportOptions {
  input: string;
  outDir: string;
  encoder: Encoder;
  config?: Partial<ExportConfig>;
  sidecar?: boolean;
  taskTag?: string;
  log?: (message: string) => void;
}

export async function runExport(options: ExportOptions): Promise<ExportStats> {
  const config: ExportConfig = { ...DEFAULT_CONFIG, ...(options.config ?? {}) };
  const log = options.log ?? console.log;
  const raw = parseRawCorpus(readFileSync(options.input, "utf-8"));

  const texts: string[] = [];
  for (const doc of raw.documents) {
    for (const sentence of doc.sentences) {
      texts.push(sentence.text);
    }
  }

  const embeddings: Float32Array[] = new Array(texts.length);
  let truncated = 0;
  let emptySentences = 0;
  let dimension = -1;

  for (let start = 0; start < texts.length; start += config.batchSize) {
    const batch = texts.slice(start, start + config.batchSize);
    const nonEmptyIdx: number[] = [];
    const nonEmptyTexts: string[] = [];
    batch.forEach((text, i) => {
      if (text.trim().length > 0) {
        nonEmptyIdx.push(start + i);
        nonEmptyTexts.push(text);
      } else {
        emptySentences += 1;
      }
    });
    if (nonEmptyTexts.length > 0) {
      const encoded = await options.encoder.encode(nonEmptyTexts);
      encoded.forEach((enc, i) => {
        if (enc.truncated) truncated += 1;
        const pooled = meanPool(enc.tokenVectors);
        if (dimension < 0) dimension = pooled.length;
        embeddings[nonEmptyIdx[i]] = Float32Array.from(pooled);
      });
    }
  }

  if (dimension < 0) dimension = config.expectedDim;
  if (dimension !== config.expectedDim) {
    throw new Error(
      `encoder produced ${dimension}-dimensional embeddings, expected ${config.expectedDim} ` +
        `(pass --dim to change the expectation)`,
    );
  }
  for (let i = 0; i < embeddings.length; i++) {
    if (!embeddings[i]) {
      embeddings[i] = new Float32Array(dimension); // empty sentence: zero vector
    }
  }
  if (emptySentences > 0) {
    log(`warning: ${emptySentences} empty sentence(s) exported as zero vectors`);
  }
  if (truncated > 0) {
    log(`warning: ${truncated} sentence(s) truncated at ${config.maxLength} tokens`);
  }

  let cursor = 0;
  const documents: EmbeddedDocument[] = raw.documents.map((doc) => {
    const docEmbeddings = doc.sentences.map(() => embeddings[cursor++]);
    return { ...doc, embeddings: docEmbeddings };
  });

  mkdirSync(options.outDir, { recursive: true });
  const corpusPath = join(options.outDir, "corpus.jsonl");
  const outputs = writeCorpus(
    documents,
    dimension,
    options.taskTag ?? raw.taskTag,
    corpusPath,
    options.sidecar ?? false,
  );
  const stats: ExportStats = {
    documents: raw.documents.length,
    sentences: texts.length,
    truncated,
    emptySentences,
    dimension,
    outputs,
  };
  log(
    `exported ${stats.documents} documents / ${stats.sentences} sentences ` +
      `at dimension ${dimension} -> ${outputs.join(", ")}`,
  );
  return stats;
}
