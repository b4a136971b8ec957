#!/usr/bin/env node
/**
 * export --in PATH --out DIR [--model NAME] [--sidecar]
 *        [--max-length N] [--batch-size N] [--dim N] [--task-tag TAG]
 */

import { parseArgs } from "node:util";

import { TransformerEncoder, ModelLoadError } from "./encoder.js";
import { DEFAULT_CONFIG, runExport } from "./exporter.js";
import { InputFormatError } from "./types.js";

function usage(): never {
  console.error(
    "usage: corpus-embed-export export --in records.jsonl --out DIR " +
      "[--model NAME] [--sidecar] [--max-length N] [--batch-size N] [--dim N] [--task-tag TAG]",
  );
  process.exit(2);
}

async function main() {
  const { values, positionals } = parseArgs({
    allowPositionals: true,
    options: {
      in: { type: "string" },
      out: { type: "string" },
      model: { type: "string", default: DEFAULT_CONFIG.model },
      sidecar: { type: "boolean", default: false },
      "max-length": { type: "string", default: String(DEFAULT_CONFIG.maxLength) },
      "batch-size": { type: "string", default: String(DEFAULT_CONFIG.batchSize) },
      dim: { type: "string", default: String(DEFAULT_CONFIG.expectedDim) },
      "task-tag": { type: "string" },
    },
  });
  if (positionals.length > 0 && positionals[0] !== "export") usage();
  if (!values.in || !values.out) usage();

  const maxLength = Number(values["max-length"]);
  const encoder = new TransformerEncoder(values.model!, maxLength);
  await runExport({
    input: values.in,
    outDir: values.out,
    encoder,
    sidecar: values.sidecar,
    taskTag: values["task-tag"],
    config: {
      model: values.model,
      maxLength,
      batchSize: Number(values["batch-size"]),
      expectedDim: Number(values.dim),
    },
  });
}

main().catch((err) => {
  if (err instanceof InputFormatError) {
    console.error(`input validation error: ${err.message}`);
    process.exit(3);
  }
  if (err instanceof ModelLoadError) {
    console.error(err.message);
    process.exit(4);
  }
  console.error(`export failed: ${(err as Error).message}`);
  process.exit(1);
});
