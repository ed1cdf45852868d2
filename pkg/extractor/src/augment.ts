// Few-shot augmentation: each augmentation epoch emits one extra variant per
// original shot, composing whichever transforms are enabled. Augmented rows
// are appended to the support tensor like real shots.
import { Image } from "./ppm.js";
import { Rng } from "./rng.js";

export interface AugmentFlags {
  flip: boolean;
  crop: boolean;
  jitter: boolean;
  epochs: number;
}

export const NO_AUGMENT: AugmentFlags = {
  flip: false,
  crop: false,
  jitter: false,
  epochs: 0,
};

export function anyEnabled(flags: AugmentFlags): boolean {
  return (flags.flip || flags.crop || flags.jitter) && flags.epochs > 0;
}

export function flipHorizontal(img: Image): Image {
  const out = new Float64Array(img.pixels.length);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      const src = (y * img.width + x) * 3;
      const dst = (y * img.width + (img.width - 1 - x)) * 3;
      out[dst] = img.pixels[src];
      out[dst + 1] = img.pixels[src + 1];
      out[dst + 2] = img.pixels[src + 2];
    }
  }
  return { width: img.width, height: img.height, pixels: out };
}

/** Crop a random window covering 70-100% of each side. */
export function randomResizedCrop(img: Image, rng: Rng): Image {
  const scale = 0.7 + 0.3 * rng();
  const w = Math.max(1, Math.round(img.width * scale));
  const h = Math.max(1, Math.round(img.height * scale));
  const x0 = Math.floor(rng() * (img.width - w + 1));
  const y0 = Math.floor(rng() * (img.height - h + 1));
  const out = new Float64Array(w * h * 3);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      const src = ((y0 + y) * img.width + (x0 + x)) * 3;
      const dst = (y * w + x) * 3;
      out[dst] = img.pixels[src];
      out[dst + 1] = img.pixels[src + 1];
      out[dst + 2] = img.pixels[src + 2];
    }
  }
  return { width: w, height: h, pixels: out };
}

/** Scale each channel by an independent factor in [0.8, 1.2], clamped. */
export function colorJitter(img: Image, rng: Rng): Image {
  const factors = [0, 1, 2].map(() => 0.8 + 0.4 * rng());
  const out = new Float64Array(img.pixels.length);
  for (let i = 0; i < img.pixels.length; i++) {
    out[i] = Math.min(1, img.pixels[i] * factors[i % 3]);
  }
  return { width: img.width, height: img.height, pixels: out };
}

export function augmentOnce(img: Image, flags: AugmentFlags, rng: Rng): Image {
  let out = img;
  if (flags.flip) out = flipHorizontal(out);
  if (flags.crop) out = randomResizedCrop(out, rng);
  if (flags.jitter) out = colorJitter(out, rng);
  return out;
}
