import { createReadStream, writeFileSync } from "fs";
import { createInterface } from "readline";

import { EncoderSpec, embedText } from "./encoder";
import { HASH_RULE, textKey, textPrefix } from "./hash";

/**
 * Corpus files are line-delimited JSON objects carrying a "text" field.
 * Embedding files start with a header record naming the hash rule, model id
 * and dimension, followed by one {key, text_prefix, vector} record per
 * distinct text (deduplicated by content key, first occurrence wins).
 */

export async function readCorpus(path: string): Promise<string[]> {
  const texts: string[] = [];
  const reader = createInterface({
    input: createReadStream(path, { encoding: "utf8" }),
    crlfDelay: Infinity,
  });
  let lineNo = 0;
  for await (const line of reader) {
    lineNo++;
    if (line.trim().length === 0) continue;
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch {
      throw new Error(`${path}:${lineNo}: invalid JSON`);
    }
    const text = (parsed as { text?: unknown }).text;
    if (typeof text !== "string") {
      throw new Error(`${path}:${lineNo}: missing string field 'text'`);
    }
    texts.push(text);
  }
  return texts;
}

export function writeEmbeddingFile(outPath: string, texts: string[],
                                   spec: EncoderSpec): number {
  const seen = new Set<string>();
  const lines: string[] = [
    JSON.stringify({ hash_rule: HASH_RULE, model_id: spec.modelId, dim: spec.dim }),
  ];
  let count = 0;
  for (const text of texts) {
    const key = textKey(text);
    if (seen.has(key)) continue;
    seen.add(key);
    const { vector, truncated } = embedText(text, spec);
    const record: Record<string, unknown> = {
      key,
      text_prefix: textPrefix(text),
      vector,
    };
    if (truncated) record.truncated = true;
    lines.push(JSON.stringify(record));
    count++;
  }
  writeFileSync(outPath, lines.join("\n") + "\n", "utf8");
  return count;
}
