/**
 * Deterministic text encoders.
 *
 * The hashed character-trigram family maps text to a fixed-dimension
 * unit-norm vector with no model weights: each trigram of the normalized
 * text is hashed (FNV-1a) to a signed coordinate and the counts are
 * L2-normalized. Pure integer arithmetic makes the vectors bitwise
 * reproducible across runs and machines, which the batch-file/wire
 * equivalence contract relies on.
 *
 * Encoders are looked up by model id so alternatives can be added without
 * touching callers; nothing hard-codes a default outside DEFAULT_MODEL.
 */

export interface EncoderSpec {
  modelId: string;
  dim: number;
  maxChars: number;
}

export const MODELS: Record<string, EncoderSpec> = {
  "hash-trigram-256": { modelId: "hash-trigram-256", dim: 256, maxChars: 20000 },
  "hash-trigram-512": { modelId: "hash-trigram-512", dim: 512, maxChars: 20000 },
};

export const DEFAULT_MODEL = "hash-trigram-256";

/** Stand-in token for empty or whitespace-only input. */
export const EMPTY_TOKEN = "[EMPTY]";

export interface BatchResult {
  vectors: number[][];
  truncated: number;
}

export function getModel(modelId: string): EncoderSpec {
  const spec = MODELS[modelId];
  if (!spec) {
    const known = Object.keys(MODELS).join(", ");
    throw new Error(`unknown model '${modelId}' (known: ${known})`);
  }
  return spec;
}

function normalize(text: string): string {
  const source = text.trim().length === 0 ? EMPTY_TOKEN : text;
  return source.toLowerCase().replace(/\s+/g, " ").trim();
}

function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export function embedText(text: string, spec: EncoderSpec): { vector: number[]; truncated: boolean } {
  const truncated = text.length > spec.maxChars;
  const source = truncated ? text.slice(0, spec.maxChars) : text;
  const padded = ` ${normalize(source)} `;

  const acc = new Float64Array(spec.dim);
  for (let i = 0; i + 3 <= padded.length; i++) {
    const h = fnv1a(padded.slice(i, i + 3));
    const index = h % spec.dim;
    const sign = (h & 0x80000000) !== 0 ? -1 : 1;
    acc[index] += sign;
  }

  let normSq = 0;
  for (let i = 0; i < spec.dim; i++) normSq += acc[i] * acc[i];
  if (normSq === 0) {
    // all trigram signs cancelled; fall back to a fixed basis coordinate
    acc[fnv1a(padded) % spec.dim] = 1;
    normSq = 1;
  }
  const norm = Math.sqrt(normSq);
  const vector = new Array<number>(spec.dim);
  for (let i = 0; i < spec.dim; i++) vector[i] = acc[i] / norm;
  return { vector, truncated };
}

export function embedBatch(texts: string[], spec: EncoderSpec): BatchResult {
  const vectors: number[][] = [];
  let truncated = 0;
  for (const text of texts) {
    const result = embedText(text, spec);
    vectors.push(result.vector);
    if (result.truncated) truncated++;
  }
  return { vectors, truncated };
}

export function cosine(a: number[], b: number[]): number {
  let dot = 0;
  for (let i = 0; i < a.length; i++) dot += a[i] * b[i];
  return dot;
}
