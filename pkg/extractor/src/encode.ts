// The two toy encoders. Images: center-crop to square, average-pool to a
// patch x patch grid, then a linear map into the shared space. Text: every
// token gets a deterministic hash embedding in EOS space; the prompt's EOS
// token is their scaled sum, captured BEFORE the text projection so the
// bridge math downstream owns the projection.
import { Checkpoint } from "./checkpoint.js";
import { Image } from "./ppm.js";
import { gaussianVector, hashString, mixSeed, mulberry32 } from "./rng.js";

export function pooledFeatures(img: Image, patch: number): Float64Array {
  const side = Math.min(img.width, img.height);
  const x0 = Math.floor((img.width - side) / 2);
  const y0 = Math.floor((img.height - side) / 2);
  const out = new Float64Array(patch * patch * 3);
  const counts = new Float64Array(patch * patch);
  for (let y = 0; y < side; y++) {
    const py = Math.min(patch - 1, Math.floor((y * patch) / side));
    for (let x = 0; x < side; x++) {
      const px = Math.min(patch - 1, Math.floor((x * patch) / side));
      const src = ((y0 + y) * img.width + (x0 + x)) * 3;
      const cell = py * patch + px;
      out[cell * 3] += img.pixels[src];
      out[cell * 3 + 1] += img.pixels[src + 1];
      out[cell * 3 + 2] += img.pixels[src + 2];
      counts[cell]++;
    }
  }
  for (let cell = 0; cell < patch * patch; cell++) {
    const n = counts[cell] || 1;
    out[cell * 3] /= n;
    out[cell * 3 + 1] /= n;
    out[cell * 3 + 2] /= n;
  }
  return out;
}

export function encodeImage(ckpt: Checkpoint, img: Image): Float64Array {
  const feat = pooledFeatures(img, ckpt.patch);
  const out = new Float64Array(ckpt.d);
  for (let i = 0; i < ckpt.d; i++) {
    let acc = 0;
    const row = ckpt.image_projection[i];
    for (let j = 0; j < feat.length; j++) acc += row[j] * feat[j];
    out[i] = acc;
  }
  return out;
}

export function tokenize(prompt: string): string[] {
  return prompt.toLowerCase().split(/[^a-z0-9]+/).filter((t) => t.length > 0);
}

const EOS_NORM_SCALE = 8.0; // puts toy EOS norms in a CLIP-like range

/** Pre-projection EOS token for one prompt, shape (d_t,). */
export function encodePrompt(ckpt: Checkpoint, prompt: string): Float64Array {
  const tokens = tokenize(prompt);
  const out = new Float64Array(ckpt.d_t);
  if (tokens.length === 0) return out;
  tokens.forEach((tok, pos) => {
    const rng = mulberry32(mixSeed(ckpt.token_seed, mixSeed(hashString(tok), pos)));
    const emb = gaussianVector(rng, ckpt.d_t);
    for (let i = 0; i < ckpt.d_t; i++) out[i] += emb[i];
  });
  const scale = EOS_NORM_SCALE / Math.sqrt(tokens.length);
  for (let i = 0; i < ckpt.d_t; i++) out[i] = (out[i] / Math.sqrt(ckpt.d_t)) * scale;
  return out;
}

/** eos_row @ W_txt -> shared space, shape (d,). */
export function projectEos(ckpt: Checkpoint, eos: Float64Array): Float64Array {
  const out = new Float64Array(ckpt.d);
  for (let j = 0; j < ckpt.d; j++) {
    let acc = 0;
    for (let i = 0; i < ckpt.d_t; i++) acc += eos[i] * ckpt.w_txt[i][j];
    out[j] = acc;
  }
  return out;
}
