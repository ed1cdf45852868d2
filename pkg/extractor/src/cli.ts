#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { extract } from "./extract.js";

async function main() {
  const argv = await yargs(hideBin(process.argv))
    .scriptName("extract")
    .usage("$0 --encoder <checkpoint> --dataset <path> --shots K --seed S --out <dir>")
    .option("encoder", { type: "string", demandOption: true, describe: "checkpoint file" })
    .option("dataset", { type: "string", demandOption: true, describe: "class-folder dataset" })
    .option("shots", { type: "number", demandOption: true, describe: "K in {1,2,4,8,16}" })
    .option("seed", { type: "number", default: 0 })
    .option("out", { type: "string", demandOption: true })
    .option("prompts", { type: "string", describe: "prompt JSON; default <dataset>/prompts.json" })
    .option("flip", { type: "boolean", default: false, describe: "horizontal flip augmentation" })
    .option("crop", { type: "boolean", default: false, describe: "random resized crop" })
    .option("jitter", { type: "boolean", default: false, describe: "color jitter" })
    .option("aug-epochs", { type: "number", default: 1, describe: "augmentation epochs" })
    .strict()
    .parse();

  const manifest = extract({
    encoder: argv.encoder,
    dataset: argv.dataset,
    promptFile: argv.prompts,
    shots: argv.shots,
    seed: argv.seed,
    out: argv.out,
    augment: {
      flip: argv.flip,
      crop: argv.crop,
      jitter: argv.jitter,
      epochs: argv["aug-epochs"],
    },
  });
  console.log(manifest);
}

main().catch((err) => {
  console.error(`${err.name ?? "Error"}: ${err.message}`);
  process.exit(1);
});
