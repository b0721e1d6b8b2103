#!/usr/bin/env node
import { AddressInfo } from "net";

import { DEFAULT_MODEL, getModel } from "./encoder";
import { readCorpus, writeEmbeddingFile } from "./files";
import { serve } from "./server";

const USAGE = `usage:
  embedder serve --port P [--model M]
  embedder batch --in corpus.jsonl --out vecs.jsonl [--model M]

Corpus files carry one {"text": "..."} object per line. The default model
is ${DEFAULT_MODEL}.`;

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const name = argv[i];
    const value = argv[i + 1];
    if (!name.startsWith("--") || value === undefined) {
      throw new Error(`bad flag pair near '${name}'`);
    }
    flags.set(name.slice(2), value);
  }
  return flags;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    const flags = parseFlags(rest);
    const spec = getModel(flags.get("model") ?? DEFAULT_MODEL);

    if (command === "serve") {
      const port = Number(flags.get("port") ?? "0");
      if (!Number.isInteger(port) || port < 0) {
        throw new Error(`invalid port '${flags.get("port")}'`);
      }
      const server = await serve(port, spec);
      const actual = (server.address() as AddressInfo).port;
      console.log(`embedder listening on http://127.0.0.1:${actual} `
        + `(model ${spec.modelId}, dim ${spec.dim})`);
      return await new Promise<number>(() => { /* runs until killed */ });
    }

    if (command === "batch") {
      const input = flags.get("in");
      const output = flags.get("out");
      if (!input || !output) throw new Error("batch needs --in and --out");
      const texts = await readCorpus(input);
      const written = writeEmbeddingFile(output, texts, spec);
      console.log(`embedded ${written} distinct texts `
        + `(${texts.length} corpus lines) -> ${output}`);
      return 0;
    }

    console.error(USAGE);
    return 2;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

main().then((code) => {
  if (code !== 0) process.exitCode = code;
});
