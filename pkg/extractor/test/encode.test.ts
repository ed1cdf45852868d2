import { describe, expect, it } from "vitest";

import { flipHorizontal } from "../src/augment.js";
import { createToyCheckpoint } from "../src/checkpoint.js";
import { encodeImage, encodePrompt, pooledFeatures, tokenize } from "../src/encode.js";
import { toyImage } from "./fixtures.js";

const CKPT = createToyCheckpoint(5);

describe("toy encoders", () => {
  it("tokenizes case-insensitively on non-alphanumerics", () => {
    expect(tokenize("A photo-of a CAT!")).toEqual(["a", "photo", "of", "a", "cat"]);
  });

  it("prompt encoding is deterministic and order-sensitive", () => {
    const a = encodePrompt(CKPT, "a photo of a cat");
    const b = encodePrompt(CKPT, "a photo of a cat");
    const c = encodePrompt(CKPT, "a cat of a photo");
    expect(Array.from(a)).toEqual(Array.from(b));
    expect(Array.from(a)).not.toEqual(Array.from(c));
    expect(a).toHaveLength(CKPT.d_t);
  });

  it("pools a constant image to its color", () => {
    const img = {
      width: 8,
      height: 8,
      pixels: Float64Array.from({ length: 8 * 8 * 3 }, (_, i) => (i % 3 === 0 ? 0.5 : 0.25)),
    };
    const feat = pooledFeatures(img, 2);
    for (let cell = 0; cell < 4; cell++) {
      expect(feat[cell * 3]).toBeCloseTo(0.5, 12);
      expect(feat[cell * 3 + 1]).toBeCloseTo(0.25, 12);
    }
  });

  it("double flip restores the image and flip changes the embedding", () => {
    const img = toyImage(0, 3);
    const twice = flipHorizontal(flipHorizontal(img));
    expect(Array.from(twice.pixels)).toEqual(Array.from(img.pixels));
    const plain = encodeImage(CKPT, img);
    const flipped = encodeImage(CKPT, flipHorizontal(img));
    expect(Array.from(plain)).not.toEqual(Array.from(flipped));
  });
});
