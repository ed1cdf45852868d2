// Few-shot split selection. Per class: shuffle the (sorted) file list with a
// seed mixed from the run seed and the class index, take the first K as
// shots, then split the remainder half/half into val and test. Mixing per
// class keeps one class's selection independent of how many files another
// class has.
import { InvalidSpec } from "./errors.js";
import { mixSeed, mulberry32, shuffle } from "./rng.js";

export const ALLOWED_SHOTS = [1, 2, 4, 8, 16];

export interface ClassSplit {
  shots: number[];
  val: number[];
  test: number[];
}

export function selectSplit(
  count: number,
  classIndex: number,
  shots: number,
  seed: number,
): ClassSplit {
  if (!ALLOWED_SHOTS.includes(shots)) {
    throw new InvalidSpec(`shots must be one of ${ALLOWED_SHOTS.join(", ")}`);
  }
  if (count < shots + 2) {
    throw new InvalidSpec(
      `class ${classIndex} has ${count} images; needs at least ${shots + 2} ` +
        `for ${shots} shots plus val and test`,
    );
  }
  const rng = mulberry32(mixSeed(seed, classIndex * 2 + 1));
  const order = shuffle(Array.from({ length: count }, (_, i) => i), rng);
  const rest = order.slice(shots);
  const valSize = Math.ceil(rest.length / 2);
  return {
    shots: order.slice(0, shots),
    val: rest.slice(0, valSize),
    test: rest.slice(valSize),
  };
}
