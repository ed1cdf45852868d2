// Builds a tiny color-coded dataset: each class is dominated by one RGB
// channel with per-image seeded noise, so the toy encoder separates them.
import fs from "node:fs";
import path from "node:path";

import { Checkpoint, createToyCheckpoint, saveCheckpoint } from "../src/checkpoint.js";
import { Image, writePpm } from "../src/ppm.js";
import { mulberry32, mixSeed } from "../src/rng.js";

export const CLASSES = ["ant", "bee", "cat"];

export function toyImage(classIndex: number, imageSeed: number, size = 12): Image {
  const rng = mulberry32(mixSeed(classIndex + 1, imageSeed));
  const pixels = new Float64Array(size * size * 3);
  for (let i = 0; i < size * size; i++) {
    for (let ch = 0; ch < 3; ch++) {
      const base = ch === classIndex ? 0.8 : 0.15;
      pixels[i * 3 + ch] = Math.min(1, Math.max(0, base + 0.3 * (rng() - 0.5)));
    }
  }
  return { width: size, height: size, pixels };
}

export interface Fixture {
  dataset: string;
  checkpoint: string;
  ckpt: Checkpoint;
}

export function buildFixture(root: string, imagesPerClass = 6): Fixture {
  const dataset = path.join(root, "dataset");
  CLASSES.forEach((name, c) => {
    const dir = path.join(dataset, name);
    fs.mkdirSync(dir, { recursive: true });
    for (let i = 0; i < imagesPerClass; i++) {
      writePpm(path.join(dir, `img_${String(i).padStart(2, "0")}.ppm`), toyImage(c, i));
    }
  });
  const prompts = Object.fromEntries(
    CLASSES.map((name) => [name, [`a photo of a ${name}`, `a close-up of a ${name}`]]),
  );
  fs.writeFileSync(path.join(dataset, "prompts.json"), JSON.stringify(prompts));
  const ckpt = createToyCheckpoint(5);
  const checkpoint = path.join(root, "toy-clip.json");
  saveCheckpoint(checkpoint, ckpt);
  return { dataset, checkpoint, ckpt };
}
