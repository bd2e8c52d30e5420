/** HTTP server implementing the generator wire protocol.
 *
 * GET  /v1/health    -> 200 when the backend is ready, 503 while loading.
 * POST /v1/generate  -> {rgb_png_b64, generator_id}; 400 on malformed bodies,
 *                       500 on backend inference failures.
 */

import express, { Express } from "express";
import { PngDecodeError, decodeGrayB64, decodeRgbB64, encodeRgbB64 } from "./png";
import { Backend, GenerateJob, GenerateRequestBody } from "./types";

const MAX_GRID_SLOTS = 4;

export class ValidationError extends Error {}

export function parseJob(body: unknown): GenerateJob {
  if (typeof body !== "object" || body === null) {
    throw new ValidationError("body must be a JSON object");
  }
  const b = body as Partial<GenerateRequestBody>;
  if (typeof b.prompt !== "string") throw new ValidationError("prompt must be a string");
  if (typeof b.seed !== "number" || !Number.isFinite(b.seed)) {
    throw new ValidationError("seed must be a number");
  }
  for (const key of ["strength", "w_depth", "w_inpaint"] as const) {
    if (typeof b[key] !== "number") throw new ValidationError(`${key} must be a number`);
  }
  if (typeof b.size !== "number" || b.size < 1) throw new ValidationError("size must be >= 1");
  if (b.strength! < 0 || b.strength! > 1) throw new ValidationError("strength outside [0, 1]");
  if (b.w_depth! < 0 || b.w_depth! > 2) throw new ValidationError("w_depth outside [0, 2]");
  if (b.w_inpaint! < 0 || b.w_inpaint! > 2) throw new ValidationError("w_inpaint outside [0, 2]");
  for (const key of ["depth_png_b64", "mask_png_b64", "init_png_b64"] as const) {
    if (typeof b[key] !== "string") throw new ValidationError(`${key} must be a base64 string`);
  }

  let depth, mask, init;
  try {
    depth = decodeGrayB64(b.depth_png_b64!);
    mask = decodeGrayB64(b.mask_png_b64!);
    init = decodeRgbB64(b.init_png_b64!);
  } catch (err) {
    if (err instanceof PngDecodeError) throw new ValidationError(err.message);
    throw err;
  }

  const size = b.size!;
  if (depth.height !== size || depth.width % size !== 0 || depth.width / size > MAX_GRID_SLOTS) {
    throw new ValidationError(
      `depth is ${depth.width}x${depth.height}, expected height ${size} and width k*${size}, k<=4`,
    );
  }
  for (const [name, img] of [["mask", mask], ["init", init]] as const) {
    if (img.width !== depth.width || img.height !== depth.height) {
      throw new ValidationError(`${name} resolution differs from depth`);
    }
  }
  return {
    prompt: b.prompt,
    seed: b.seed,
    strength: b.strength!,
    wDepth: b.w_depth!,
    wInpaint: b.w_inpaint!,
    size,
    depth,
    mask,
    init,
  };
}

export function createApp(backend: Backend): Express {
  const app = express();
  app.use(express.json({ limit: "64mb" }));

  app.get("/v1/health", (_req, res) => {
    if (backend.ready()) {
      res.status(200).json({ status: "ready", generator_id: backend.id });
    } else {
      res.status(503).json({ status: "loading" });
    }
  });

  app.post("/v1/generate", async (req, res) => {
    if (!backend.ready()) {
      res.status(503).json({ error: "backend still loading" });
      return;
    }
    let job: GenerateJob;
    try {
      job = parseJob(req.body);
    } catch (err) {
      if (err instanceof ValidationError) {
        res.status(400).json({ error: err.message });
        return;
      }
      throw err;
    }
    try {
      const rgb = await backend.generate(job);
      res.status(200).json({ rgb_png_b64: encodeRgbB64(rgb), generator_id: backend.id });
    } catch (err) {
      res.status(500).json({ error: `inference failed: ${err}` });
    }
  });

  return app;
}
