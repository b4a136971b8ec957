/**
 * Mean pooling over token embeddings.
 *
 * Given the token vectors of one sentence (non-padding positions, special
 * markers included), the sentence embedding is their exact arithmetic mean,
 * accumulated in float64.
 */

export function meanPool(tokenVectors: ArrayLike<number>[]): Float64Array {
  if (tokenVectors.length === 0) {
    throw new Error("meanPool needs at least one token vector");
  }
  const dim = tokenVectors[0].length;
  const sum = new Float64Array(dim);
  for (const vec of tokenVectors) {
    if (vec.length !== dim) {
      throw new Error(`token vector length ${vec.length} does not match ${dim}`);
    }
    for (let d = 0; d < dim; d++) {
      sum[d] += vec[d];
    }
  }
  for (let d = 0; d < dim; d++) {
    sum[d] /= tokenVectors.length;
  }
  return sum;
}
