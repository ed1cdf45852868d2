// Toy "pretrained" checkpoint: a JSON file carrying actual weights for a
// linear image encoder, a seeded hash text encoder, and the text projection.
// Desk-scale stand-in for a real CLIP checkpoint; the file format is the
// contract, not the weights.
import fs from "node:fs";
import { z } from "zod";

import { CheckpointMissing } from "./errors.js";
import { gaussianVector, mulberry32, mixSeed } from "./rng.js";

const matrix = z.array(z.array(z.number()).min(1)).min(1);

const checkpointSchema = z.object({
  schema: z.literal("toy-clip-checkpoint-v1"),
  id: z.string().min(1),
  d: z.number().int().positive(),
  d_t: z.number().int().positive(),
  patch: z.number().int().positive(), // images pool to patch x patch x 3
  logit_scale: z.number().positive(),
  token_seed: z.number().int(),
  image_projection: matrix, // (d, patch*patch*3)
  w_txt: matrix, // (d_t, d), full column rank by construction
});

export type Checkpoint = z.infer<typeof checkpointSchema>;

export function loadCheckpoint(path: string): Checkpoint {
  if (!fs.existsSync(path)) {
    throw new CheckpointMissing(`checkpoint not found: ${path}`);
  }
  const ckpt = checkpointSchema.parse(JSON.parse(fs.readFileSync(path, "utf-8")));
  if (ckpt.d > ckpt.d_t) {
    throw new CheckpointMissing(
      `checkpoint ${path} has d > d_t; the text projection cannot be full column rank`,
    );
  }
  const feat = ckpt.patch * ckpt.patch * 3;
  if (ckpt.image_projection.length !== ckpt.d ||
      ckpt.image_projection[0].length !== feat) {
    throw new CheckpointMissing(
      `image_projection must be (${ckpt.d}, ${feat})`,
    );
  }
  if (ckpt.w_txt.length !== ckpt.d_t || ckpt.w_txt[0].length !== ckpt.d) {
    throw new CheckpointMissing(`w_txt must be (${ckpt.d_t}, ${ckpt.d})`);
  }
  return ckpt;
}

export interface ToyOptions {
  d?: number;
  dT?: number;
  patch?: number;
  logitScale?: number;
  id?: string;
}

export function createToyCheckpoint(seed: number, opts: ToyOptions = {}): Checkpoint {
  const d = opts.d ?? 16;
  const dT = opts.dT ?? 24;
  const patch = opts.patch ?? 4;
  const feat = patch * patch * 3;
  const imgRng = mulberry32(mixSeed(seed, 1));
  const txtRng = mulberry32(mixSeed(seed, 2));
  const image_projection: number[][] = [];
  for (let i = 0; i < d; i++) {
    // scaled so embeddings land at O(1) norms for typical [0,1] pixels
    image_projection.push(Array.from(gaussianVector(imgRng, feat), (v) => v / Math.sqrt(feat)));
  }
  const w_txt: number[][] = [];
  for (let i = 0; i < dT; i++) {
    w_txt.push(Array.from(gaussianVector(txtRng, d), (v) => v / Math.sqrt(d)));
  }
  return {
    schema: "toy-clip-checkpoint-v1",
    id: opts.id ?? `toy-clip-s${seed}`,
    d,
    d_t: dT,
    patch,
    logit_scale: opts.logitScale ?? 100.0,
    token_seed: mixSeed(seed, 3),
    image_projection,
    w_txt,
  };
}

export function saveCheckpoint(path: string, ckpt: Checkpoint): void {
  fs.writeFileSync(path, JSON.stringify(ckpt) + "\n");
}
