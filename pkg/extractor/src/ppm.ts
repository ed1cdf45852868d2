// Binary PPM (P6, maxval 255) reader/writer. It is the one image format we
// can parse without native dependencies, and fixtures are easy to generate.
import fs from "node:fs";

export interface Image {
  width: number;
  height: number;
  /** RGB interleaved, values in [0, 1]. */
  pixels: Float64Array;
}

export function readPpm(path: string): Image {
  const buf = fs.readFileSync(path);
  let off = 0;
  const token = () => {
    // skip whitespace and '#' comment lines between header tokens
    for (;;) {
      while (off < buf.length && /\s/.test(String.fromCharCode(buf[off]))) off++;
      if (buf[off] === 0x23) {
        while (off < buf.length && buf[off] !== 0x0a) off++;
      } else break;
    }
    const start = off;
    while (off < buf.length && !/\s/.test(String.fromCharCode(buf[off]))) off++;
    return buf.subarray(start, off).toString("ascii");
  };
  if (token() !== "P6") throw new Error(`${path}: not a P6 PPM`);
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!(width > 0 && height > 0) || maxval !== 255) {
    throw new Error(`${path}: unsupported PPM header`);
  }
  off++; // single whitespace after maxval
  const need = width * height * 3;
  if (buf.length - off < need) throw new Error(`${path}: truncated pixel data`);
  const pixels = new Float64Array(need);
  for (let i = 0; i < need; i++) pixels[i] = buf[off + i] / 255;
  return { width, height, pixels };
}

export function writePpm(path: string, img: Image): void {
  const header = Buffer.from(`P6\n${img.width} ${img.height}\n255\n`, "ascii");
  const body = Buffer.alloc(img.pixels.length);
  for (let i = 0; i < img.pixels.length; i++) {
    body[i] = Math.max(0, Math.min(255, Math.round(img.pixels[i] * 255)));
  }
  fs.writeFileSync(path, Buffer.concat([header, body]));
}
