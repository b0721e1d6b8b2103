import { IncomingMessage, Server, ServerResponse, createServer } from "http";

import { EncoderSpec, embedBatch } from "./encoder";

const MAX_BODY_BYTES = 64 * 1024 * 1024;
const CHUNK = 256; // internal batching; callers see one flat response

function sendJson(res: ServerResponse, status: number, body: unknown): void {
  const payload = JSON.stringify(body);
  res.writeHead(status, { "Content-Type": "application/json" });
  res.end(payload);
}

function readBody(req: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let size = 0;
    req.on("data", (chunk: Buffer) => {
      size += chunk.length;
      if (size > MAX_BODY_BYTES) {
        reject(new Error("request body too large"));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf8")));
    req.on("error", reject);
  });
}

export function buildServer(spec: EncoderSpec): Server {
  return createServer(async (req, res) => {
    if (req.method === "GET" && req.url === "/health") {
      sendJson(res, 200, { model_id: spec.modelId, dim: spec.dim });
      return;
    }
    if (req.method !== "POST" || req.url !== "/embed") {
      sendJson(res, 404, { error: "not found" });
      return;
    }

    let body: string;
    try {
      body = await readBody(req);
    } catch (err) {
      sendJson(res, 400, { error: String(err) });
      return;
    }
    let parsed: unknown;
    try {
      parsed = JSON.parse(body);
    } catch {
      sendJson(res, 400, { error: "malformed JSON body" });
      return;
    }
    const texts = (parsed as { texts?: unknown }).texts;
    if (!Array.isArray(texts) || texts.length === 0
        || texts.some((t) => typeof t !== "string")) {
      sendJson(res, 400, { error: "'texts' must be a non-empty list of strings" });
      return;
    }

    const vectors: number[][] = [];
    let truncated = 0;
    for (let start = 0; start < texts.length; start += CHUNK) {
      const part = embedBatch(texts.slice(start, start + CHUNK) as string[], spec);
      vectors.push(...part.vectors);
      truncated += part.truncated;
    }
    sendJson(res, 200, { vectors, model_id: spec.modelId, truncated });
  });
}

export function serve(port: number, spec: EncoderSpec): Promise<Server> {
  return new Promise((resolve, reject) => {
    const server = buildServer(spec);
    server.once("error", reject);
    server.listen(port, "127.0.0.1", () => resolve(server));
  });
}
