import { beforeAll, describe, expect, it } from "vitest";
import { execFileSync } from "node:child_process";
import fs from "node:fs";
import os from "node:os";
import path from "node:path";

import { CheckpointMissing, ClassMismatch } from "../src/errors.js";
import { extract } from "../src/extract.js";
import { readTensor } from "../src/tensorfile.js";
import { buildFixture, CLASSES, Fixture } from "./fixtures.js";

let fx: Fixture;
let root: string;

beforeAll(() => {
  root = fs.mkdtempSync(path.join(os.tmpdir(), "extractor-"));
  fx = buildFixture(root);
});

function runExtract(name: string, overrides: object = {}) {
  const out = path.join(root, name);
  const manifest = extract({
    encoder: fx.checkpoint,
    dataset: fx.dataset,
    shots: 1,
    seed: 4,
    out,
    ...overrides,
  });
  return { out, manifest };
}

describe("extract pipeline", () => {
  it("writes a three-class K=1 task directory", () => {
    const { out, manifest } = runExtract("plain");
    const m = JSON.parse(fs.readFileSync(manifest, "utf-8"));
    expect(m.class_names).toEqual(CLASSES);
    expect(m.shots).toBe(1);
    expect(m.d).toBe(fx.ckpt.d);
    expect(m.d_t).toBe(fx.ckpt.d_t);
    expect(m.temperature).toBe(100);
    expect(m.encoder).toBe(fx.ckpt.id);
    expect(Object.keys(m.files)).toHaveLength(9);

    const trainX = readTensor(path.join(out, "train_x.semb"));
    expect(trainX.dims).toEqual([3, fx.ckpt.d]);
    const eos = readTensor(path.join(out, "prompt_eos.semb"));
    expect(eos.dims).toEqual([3, 2, fx.ckpt.d_t]);
    const trainY = readTensor(path.join(out, "train_y.semb"));
    expect(Array.from(trainY.data)).toEqual([0, 1, 2]);
    // 6 images per class: 1 shot, 3 val, 2 test
    expect(readTensor(path.join(out, "val_x.semb")).dims[0]).toBe(9);
    expect(readTensor(path.join(out, "test_x.semb")).dims[0]).toBe(6);
  });

  it("re-running with the same spec is byte-identical", () => {
    const a = runExtract("det-a").out;
    const b = runExtract("det-b").out;
    for (const name of fs.readdirSync(a).sort()) {
      expect(fs.readFileSync(path.join(a, name)).equals(
        fs.readFileSync(path.join(b, name)),
      ), name).toBe(true);
    }
  });

  it("horizontal flip with one augmentation epoch doubles the shot rows", () => {
    const { out, manifest } = runExtract("flip", {
      augment: { flip: true, crop: false, jitter: false, epochs: 1 },
    });
    const trainX = readTensor(path.join(out, "train_x.semb"));
    expect(trainX.dims[0]).toBe(2 * CLASSES.length * 1);
    const trainY = readTensor(path.join(out, "train_y.semb"));
    expect(Array.from(trainY.data)).toEqual([0, 0, 1, 1, 2, 2]);
    const m = JSON.parse(fs.readFileSync(manifest, "utf-8"));
    expect(m.shots).toBe(2); // augmented shots count like real ones
    expect(m.provenance.augmentation.flip).toBe(true);
  });

  it("augmentation flags without epochs leave the tensor alone", () => {
    const { out } = runExtract("noop", {
      augment: { flip: true, crop: true, jitter: true, epochs: 0 },
    });
    expect(readTensor(path.join(out, "train_x.semb")).dims[0]).toBe(3);
  });

  it("rejects prompt files that do not cover the dataset classes", () => {
    const bad = path.join(root, "bad-prompts.json");
    fs.writeFileSync(bad, JSON.stringify({ ant: ["an ant"], bee: ["a bee"] }));
    expect(() => runExtract("mismatch", { promptFile: bad })).toThrow(ClassMismatch);
    const extra = path.join(root, "extra-prompts.json");
    fs.writeFileSync(extra, JSON.stringify({
      ant: ["x"], bee: ["x"], cat: ["x"], dog: ["x"],
    }));
    expect(() => runExtract("extra", { promptFile: extra })).toThrow(ClassMismatch);
  });

  it("reports a missing checkpoint", () => {
    expect(() => runExtract("nockpt", { encoder: path.join(root, "no.json") }))
      .toThrow(CheckpointMissing);
  });
});

function primaryAvailable(): boolean {
  try {
    execFileSync("python3", ["-c", "import semobridge"], { stdio: "pipe" });
    return true;
  } catch {
    return false;
  }
}

describe.skipIf(!primaryAvailable())("primary package integration", () => {
  it("the extracted task loads, validates, and classifies in the primary", () => {
    const { manifest } = runExtract("integration");
    const script = `
import numpy as np
from semobridge import datastore
from semobridge.inference import build_state, evaluate
from semobridge.linalg import ProjectionPair, pseudo_inverse

task = datastore.load_task(r"${manifest}")
assert task.n_classes == 3 and task.shots == 1, (task.n_classes, task.shots)

w = task.w_txt
p = pseudo_inverse(w)
sigma = np.linalg.norm(w, 2)
assert np.linalg.norm(w @ p @ w - w, 2) < 1e-8 * sigma
assert np.abs(p @ w - np.eye(w.shape[1])).max() < 1e-8

proj = ProjectionPair.from_forward(w)
state = build_state(task.train_x, task.train_y, task.prompt_eos,
                    task.text_txt, proj, temperature=task.temperature)
res = evaluate(task.test_x, task.test_y, state)
assert 0.0 <= res.accuracy <= 1.0
print(f"OK accuracy={res.accuracy}")
`;
    const output = execFileSync("python3", ["-c", script], { encoding: "utf-8" });
    expect(output).toContain("OK accuracy=");
  });
});
