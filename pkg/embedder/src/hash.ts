import { createHash } from "crypto";

/**
 * Content-hash rule shared with the core's embedding-table reader. Keys are
 * the lowercase hex SHA-256 digest of the exact text's UTF-8 bytes; the
 * first 64 characters of the text ride along as a collision check.
 */
export const HASH_RULE = "sha256-utf8-hex-v1";
export const TEXT_PREFIX_LEN = 64;

export function textKey(text: string): string {
  return createHash("sha256").update(text, "utf8").digest("hex");
}

export function textPrefix(text: string): string {
  return text.slice(0, TEXT_PREFIX_LEN);
}
