import assert from "assert";
import { test } from "node:test";

import { DEFAULT_MODEL, EMPTY_TOKEN, MODELS, cosine, embedBatch,
         embedText, getModel } from "../src/encoder";

const spec = getModel(DEFAULT_MODEL);

test("embedding is deterministic and bitwise stable", () => {
  const text = "Add the red backpack to the cart";
  const a = embedText(text, spec).vector;
  const b = embedText(text, spec).vector;
  assert.deepStrictEqual(a, b);
});

test("vectors are unit norm", () => {
  for (const text of ["hello", "a much longer sentence about browsing", "x"]) {
    const v = embedText(text, spec).vector;
    const norm = Math.sqrt(v.reduce((s, x) => s + x * x, 0));
    assert.ok(Math.abs(norm - 1) < 1e-12, `norm ${norm} for '${text}'`);
  }
});

test("self cosine is one", () => {
  const v = embedText("hello world", spec).vector;
  assert.ok(Math.abs(cosine(v, v) - 1) < 1e-6);
});

test("empty text embeds the placeholder token", () => {
  const empty = embedText("", spec).vector;
  const token = embedText(EMPTY_TOKEN, spec).vector;
  const spaced = embedText("   \n\t ", spec).vector;
  assert.deepStrictEqual(empty, token);
  assert.deepStrictEqual(spaced, token);
});

test("normalization folds case and whitespace", () => {
  const a = embedText("Red  Backpack\n", spec).vector;
  const b = embedText("red backpack", spec).vector;
  assert.deepStrictEqual(a, b);
});

// Frozen probe triple: two paraphrases versus one unrelated sentence. The
// ordering was verified once against this encoder and pinned here.
test("paraphrase pair scores strictly higher than unrelated pair", () => {
  const anchor = embedText("add the red backpack to the shopping cart", spec).vector;
  const paraphrase = embedText("put the red backpack into the cart", spec).vector;
  const unrelated = embedText("the weather in paris is sunny today", spec).vector;
  const near = cosine(anchor, paraphrase);
  const far = cosine(anchor, unrelated);
  assert.ok(near > far, `expected ${near} > ${far}`);
});

test("dimension is constant per model", () => {
  for (const modelId of Object.keys(MODELS)) {
    const m = getModel(modelId);
    assert.strictEqual(embedText("abc", m).vector.length, m.dim);
    assert.strictEqual(embedText("totally different", m).vector.length, m.dim);
  }
});

test("unknown model is rejected with the known list", () => {
  assert.throws(() => getModel("bert-large"), /unknown model 'bert-large'/);
});

test("long texts are truncated and flagged", () => {
  const long = "word ".repeat(10000); // 50k chars > maxChars
  const result = embedText(long, spec);
  assert.strictEqual(result.truncated, true);
  const batch = embedBatch([long, "short"], spec);
  assert.strictEqual(batch.truncated, 1);
  assert.strictEqual(batch.vectors.length, 2);
});

test("batch matches per-text embedding", () => {
  const texts = ["one", "two", "three"];
  const batch = embedBatch(texts, spec);
  texts.forEach((text, i) => {
    assert.deepStrictEqual(batch.vectors[i], embedText(text, spec).vector);
  });
});
