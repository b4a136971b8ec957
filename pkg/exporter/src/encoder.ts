/**
 * Sentence encoders. An Encoder hands back per-token vectors for the
 * non-padding positions of each sentence (special markers included), plus a
 * truncation flag; pooling happens outside, so the pooling arithmetic is
 * testable with injected vectors.
 */

export interface SentenceEncoding {
  /** Last-layer vectors for every non-padding token position. */
  tokenVectors: Float64Array[];
  truncated: boolean;
}

export interface Encoder {
  readonly modelId: string;
  encode(texts: string[]): Promise<SentenceEncoding[]>;
}

export class ModelLoadError extends Error {}

/**
 * Transformer-backed encoder (lazy singleton load). Hidden states come from
 * the model's last layer; the attention mask selects the non-padding
 * positions that enter the mean.
 */
export class TransformerEncoder implements Encoder {
  readonly modelId: string;
  readonly maxLength: number;
  private loading: Promise<{ tokenizer: any; model: any }> | null = null;

  constructor(modelId: string, maxLength: number) {
    this.modelId = modelId;
    this.maxLength = maxLength;
  }

  private async load() {
    if (!this.loading) {
      this.loading = (async () => {
        try {
          const { AutoTokenizer, AutoModel } = await import("@huggingface/transformers");
          console.log(`loading encoder ${this.modelId} ...`);
          const tokenizer = await AutoTokenizer.from_pretrained(this.modelId);
          const model = await AutoModel.from_pretrained(this.modelId);
          return { tokenizer, model };
        } catch (err) {
          throw new ModelLoadError(
            `failed to load encoder ${this.modelId}: ${(err as Error).message}`,
          );
        }
      })();
    }
    return this.loading;
  }

  async encode(texts: string[]): Promise<SentenceEncoding[]> {
    const { tokenizer, model } = await this.load();
    const inputs = await tokenizer(texts, {
      padding: true,
      truncation: true,
      max_length: this.maxLength,
    });
    const output = await model(inputs);
    const hidden = output.last_hidden_state;
    const [batch, seqLen, dim] = hidden.dims as [number, number, number];
    const hiddenData = hidden.data as Float32Array;
    const maskData = inputs.attention_mask.data;

    const results: SentenceEncoding[] = [];
    for (let b = 0; b < batch; b++) {
      const tokenVectors: Float64Array[] = [];
      for (let t = 0; t < seqLen; t++) {
        if (Number(maskData[b * seqLen + t]) === 0) continue;
        const vec = new Float64Array(dim);
        const base = (b * seqLen + t) * dim;
        for (let d = 0; d < dim; d++) {
          vec[d] = hiddenData[base + d];
        }
        tokenVectors.push(vec);
      }
      // a sentence is truncated when its untruncated token count exceeds
      // the window
      const fullIds = tokenizer.encode(texts[b]);
      results.push({ tokenVectors, truncated: fullIds.length > this.maxLength });
    }
    return results;
  }
}
