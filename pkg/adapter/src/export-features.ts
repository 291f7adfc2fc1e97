// Export frame-level feature files (.ttsf) plus a mergeable manifest
// fragment for a list of utterances.
//
//   node dist/export-features.js --list jobs.jsonl --out-dir out \
//       --kind content --layer 9 --stub --seed 7
//
// Stub mode needs a duration_s per job and fabricates seeded features at the
// upstream hop size. Without --stub the upstream encoder would have to be
// resolvable locally; this environment has none, so the command fails with a
// pointer to --stub.

import { promises as fs } from "node:fs";
import path from "node:path";
import process from "node:process";
import { parseArgs } from "node:util";

import { readJobs, writeManifest, writeRunManifest, type ManifestRecord } from "./records.js";
import { CONTENT_LAYERS, stubFeatures } from "./stub.js";
import { writeTtsf } from "./ttsf.js";

export interface FeatureExportOptions {
  list: string;
  outDir: string;
  kind: "content" | "prosody";
  layer: number;
  dims: number;
  seed: number;
  stub: boolean;
  sampleRate: number;
}

export async function exportFeatures(opts: FeatureExportOptions): Promise<ManifestRecord[]> {
  if (opts.kind === "content" && (opts.layer < 1 || opts.layer > CONTENT_LAYERS)) {
    throw new Error(`--layer ${opts.layer} out of range 1..${CONTENT_LAYERS}`);
  }
  const jobs = await readJobs(opts.list);
  const featureDir = path.join(opts.outDir, "features");
  await fs.mkdir(featureDir, { recursive: true });
  const records: ManifestRecord[] = [];
  for (const job of jobs) {
    if (!opts.stub) {
      throw new Error(
        "upstream feature encoders are not installed in this environment; " +
          "rerun with --stub for seeded synthetic features"
      );
    }
    if (typeof job.duration_s !== "number") {
      throw new Error(`job ${job.utt_id}: stub mode requires duration_s`);
    }
    const matrix = stubFeatures(
      job.utt_id, job.duration_s, opts.kind, opts.layer, opts.dims, opts.seed
    );
    const ref = path.join("features", `${job.utt_id}.ttsf`);
    await writeTtsf(path.join(opts.outDir, ref), matrix);
    records.push({
      utt_id: job.utt_id,
      system_id: job.system_id ?? "external",
      ...(job.text !== undefined ? { text: job.text } : {}),
      feature_path: ref,
    });
  }
  const manifestPath = path.join(opts.outDir, `${opts.kind}_features.jsonl`);
  await writeManifest(manifestPath, records);
  await writeRunManifest(manifestPath + ".run.json", "export-features", {
    list: opts.list,
    kind: opts.kind,
    layer: opts.layer,
    dims: opts.dims,
    seed: opts.seed,
    stub: opts.stub,
    sample_rate: opts.sampleRate,
  });
  return records;
}

function parseCli(argv: string[]): FeatureExportOptions {
  const { values } = parseArgs({
    args: argv,
    options: {
      list: { type: "string" },
      "out-dir": { type: "string" },
      kind: { type: "string", default: "content" },
      layer: { type: "string", default: "9" },
      dims: { type: "string", default: "16" },
      seed: { type: "string", default: "0" },
      stub: { type: "boolean", default: false },
      "sample-rate": { type: "string", default: "16000" },
    },
  });
  if (!values.list || !values["out-dir"]) {
    throw new Error("usage: export-features --list jobs.jsonl --out-dir DIR [--kind content|prosody] [--layer N] [--dims N] [--seed N] [--stub]");
  }
  if (values.kind !== "content" && values.kind !== "prosody") {
    throw new Error(`--kind must be content or prosody, got ${values.kind}`);
  }
  return {
    list: values.list,
    outDir: values["out-dir"],
    kind: values.kind,
    layer: Number(values.layer),
    dims: Number(values.dims),
    seed: Number(values.seed),
    stub: values.stub ?? false,
    sampleRate: Number(values["sample-rate"]),
  };
}

const isMain = process.argv[1] && import.meta.url.endsWith(path.basename(process.argv[1]));
if (isMain) {
  exportFeatures(parseCli(process.argv.slice(2)))
    .then((records) => {
      console.log(`exported features for ${records.length} utterance(s)`);
    })
    .catch((err) => {
      console.error(`error: ${err.message ?? err}`);
      process.exit(1);
    });
}
