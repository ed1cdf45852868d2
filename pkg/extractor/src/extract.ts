// End-to-end extraction: run the checkpoint's encoders over a class-folder
// image dataset plus a prompt list, and write a task directory in exactly
// the layout the Python package loads (nine SEMB tensors + manifest.json).
// No classification or bridge math happens here.
import fs from "node:fs";
import path from "node:path";

import { AugmentFlags, NO_AUGMENT, anyEnabled, augmentOnce } from "./augment.js";
import { Checkpoint, loadCheckpoint } from "./checkpoint.js";
import { encodeImage, encodePrompt, projectEos } from "./encode.js";
import { InvalidSpec } from "./errors.js";
import { readPpm } from "./ppm.js";
import { loadPrompts } from "./prompts.js";
import { mixSeed, mulberry32 } from "./rng.js";
import { selectSplit } from "./split.js";
import { Tensor, fromRows, writeTensor } from "./tensorfile.js";

export interface ExtractionSpec {
  encoder: string; // checkpoint path
  dataset: string; // folder of class subfolders with .ppm images
  promptFile?: string; // defaults to <dataset>/prompts.json
  shots: number; // K, one of 1/2/4/8/16
  seed: number;
  out: string;
  augment?: AugmentFlags;
}

interface ClassFolder {
  name: string;
  files: string[];
}

function scanDataset(root: string): ClassFolder[] {
  if (!fs.existsSync(root) || !fs.statSync(root).isDirectory()) {
    throw new InvalidSpec(`dataset folder not found: ${root}`);
  }
  const classes: ClassFolder[] = [];
  for (const entry of fs.readdirSync(root).sort()) {
    const dir = path.join(root, entry);
    if (!fs.statSync(dir).isDirectory()) continue;
    const files = fs
      .readdirSync(dir)
      .filter((f) => f.endsWith(".ppm"))
      .sort()
      .map((f) => path.join(dir, f));
    if (files.length > 0) classes.push({ name: entry, files });
  }
  if (classes.length < 2) {
    throw new InvalidSpec(`dataset needs at least two class folders with .ppm images`);
  }
  return classes;
}

function sortedJson(value: unknown): string {
  return (
    JSON.stringify(
      value,
      (_k, v) =>
        v && typeof v === "object" && !Array.isArray(v)
          ? Object.fromEntries(Object.entries(v).sort(([a], [b]) => (a < b ? -1 : 1)))
          : v,
      2,
    ) + "\n"
  );
}

function labelTensor(labels: number[]): Tensor {
  return { dims: [labels.length], data: Float64Array.from(labels) };
}

function encodeSupport(
  ckpt: Checkpoint,
  classes: ClassFolder[],
  shotFiles: string[][],
  flags: AugmentFlags,
  seed: number,
): { rows: Float64Array[]; labels: number[] } {
  const rows: Float64Array[] = [];
  const labels: number[] = [];
  const epochs = anyEnabled(flags) ? flags.epochs : 0;
  classes.forEach((_cls, c) => {
    for (const file of shotFiles[c]) {
      rows.push(encodeImage(ckpt, readPpm(file)));
      labels.push(c);
    }
    for (let epoch = 1; epoch <= epochs; epoch++) {
      shotFiles[c].forEach((file, s) => {
        const rng = mulberry32(
          mixSeed(mixSeed(seed, 7919), epoch * 100003 + c * 1009 + s),
        );
        rows.push(encodeImage(ckpt, augmentOnce(readPpm(file), flags, rng)));
        labels.push(c);
      });
    }
  });
  return { rows, labels };
}

export function extract(spec: ExtractionSpec): string {
  const ckpt = loadCheckpoint(spec.encoder);
  const classes = scanDataset(spec.dataset);
  const classNames = classes.map((c) => c.name);
  const prompts = loadPrompts(
    spec.promptFile ?? path.join(spec.dataset, "prompts.json"),
    classNames,
  );
  const flags = spec.augment ?? NO_AUGMENT;

  const splits = classes.map((cls, c) =>
    selectSplit(cls.files.length, c, spec.shots, spec.seed),
  );
  const shotFiles = classes.map((cls, c) => splits[c].shots.map((i) => cls.files[i]));

  const support = encodeSupport(ckpt, classes, shotFiles, flags, spec.seed);
  const encodeSide = (pick: (s: (typeof splits)[number]) => number[]) => {
    const rows: Float64Array[] = [];
    const labels: number[] = [];
    classes.forEach((cls, c) => {
      for (const i of pick(splits[c])) {
        rows.push(encodeImage(ckpt, readPpm(cls.files[i])));
        labels.push(c);
      }
    });
    return { rows, labels };
  };
  const val = encodeSide((s) => s.val);
  const test = encodeSide((s) => s.test);

  const perClass = prompts[0].length;
  const eosFlat = new Float64Array(classes.length * perClass * ckpt.d_t);
  const textRows: Float64Array[] = [];
  classes.forEach((_cls, c) => {
    const mean = new Float64Array(ckpt.d);
    prompts[c].forEach((prompt, p) => {
      const eos = encodePrompt(ckpt, prompt);
      eosFlat.set(eos, (c * perClass + p) * ckpt.d_t);
      const projected = projectEos(ckpt, eos);
      for (let j = 0; j < ckpt.d; j++) mean[j] += projected[j] / perClass;
    });
    textRows.push(mean);
  });

  const wFlat = new Float64Array(ckpt.d_t * ckpt.d);
  ckpt.w_txt.forEach((row, i) => wFlat.set(row, i * ckpt.d));

  fs.mkdirSync(spec.out, { recursive: true });
  const tensors: Record<string, Tensor> = {
    train_x: fromRows(support.rows, ckpt.d),
    train_y: labelTensor(support.labels),
    val_x: fromRows(val.rows, ckpt.d),
    val_y: labelTensor(val.labels),
    test_x: fromRows(test.rows, ckpt.d),
    test_y: labelTensor(test.labels),
    prompt_eos: { dims: [classes.length, perClass, ckpt.d_t], data: eosFlat },
    text_txt: fromRows(textRows, ckpt.d),
    w_txt: { dims: [ckpt.d_t, ckpt.d], data: wFlat },
  };
  const files: Record<string, string> = {};
  for (const [name, tensor] of Object.entries(tensors)) {
    files[name] = `${name}.semb`;
    writeTensor(path.join(spec.out, files[name]), tensor);
  }

  const effectiveShots = support.labels.length / classes.length;
  const manifest = {
    schema_version: 1,
    dataset: path.basename(path.resolve(spec.dataset)),
    encoder: ckpt.id,
    d: ckpt.d,
    d_t: ckpt.d_t,
    temperature: ckpt.logit_scale,
    class_names: classNames,
    shots: effectiveShots,
    seed: spec.seed,
    files,
    provenance: {
      extractor: "semobridge-extractor",
      checkpoint: path.resolve(spec.encoder),
      dataset_path: path.resolve(spec.dataset),
      requested_shots: spec.shots,
      logit_scale: ckpt.logit_scale,
      augmentation: {
        flip: flags.flip,
        crop: flags.crop,
        jitter: flags.jitter,
        epochs: anyEnabled(flags) ? flags.epochs : 0,
      },
    },
  };
  const manifestPath = path.join(spec.out, "manifest.json");
  fs.writeFileSync(manifestPath, sortedJson(manifest));
  return manifestPath;
}
