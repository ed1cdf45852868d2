// Prompt files map class name -> list of prompt strings (template or
// generated descriptions). Every dataset class must be covered; the manifest
// format needs the same prompt count per class, so lists are truncated to
// the shortest one.
import fs from "node:fs";
import { z } from "zod";

import { ClassMismatch } from "./errors.js";

const promptFileSchema = z.record(z.string(), z.array(z.string().min(1)).min(1));

export function loadPrompts(path: string, classNames: string[]): string[][] {
  const raw = promptFileSchema.parse(JSON.parse(fs.readFileSync(path, "utf-8")));
  const missing = classNames.filter((c) => !(c in raw));
  if (missing.length > 0) {
    throw new ClassMismatch(`prompt file lacks classes: ${missing.join(", ")}`);
  }
  const extra = Object.keys(raw).filter((c) => !classNames.includes(c));
  if (extra.length > 0) {
    throw new ClassMismatch(`prompt file has unknown classes: ${extra.join(", ")}`);
  }
  const perClass = Math.min(...classNames.map((c) => raw[c].length));
  return classNames.map((c) => raw[c].slice(0, perClass));
}
