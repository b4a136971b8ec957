// The encoder library is an optional dependency (large native binaries);
// it is imported dynamically and only needed when a real model runs.
declare module "@huggingface/transformers" {
  export const AutoTokenizer: any;
  export const AutoModel: any;
}
