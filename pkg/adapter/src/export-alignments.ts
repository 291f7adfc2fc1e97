// Export phoneme sequences (g2p) and frame alignments for a list of
// transcribed utterances, as a .jsonl alignment file plus a mergeable
// manifest fragment carrying the phonemes inline.
//
//   node dist/export-alignments.js --list jobs.jsonl --out-dir out \
//       --kind prosody --stub --seed 7
//
// Stub mode segments each utterance's frame budget uniformly over its
// phonemes, standing in for a forced aligner. Per-utterance failures (e.g.
// a transcript with more phonemes than frames) are recorded and skipped.

import { promises as fs } from "node:fs";
import path from "node:path";
import process from "node:process";
import { parseArgs } from "node:util";

import { textToPhonemes } from "./g2p.js";
import {
  readJobs,
  writeAlignments,
  writeManifest,
  writeRunManifest,
  type AlignmentSegment,
  type ManifestRecord,
} from "./records.js";
import { framesForDuration, uniformAlignment } from "./stub.js";

export interface AlignmentExportOptions {
  list: string;
  outDir: string;
  kind: "content" | "prosody";
  stub: boolean;
}

export interface AlignmentExportResult {
  records: ManifestRecord[];
  skipped: { utt_id: string; reason: string }[];
}

export async function exportAlignments(
  opts: AlignmentExportOptions
): Promise<AlignmentExportResult> {
  const jobs = await readJobs(opts.list);
  await fs.mkdir(opts.outDir, { recursive: true });
  const alignmentFile = "alignments.jsonl";
  const segments: AlignmentSegment[] = [];
  const records: ManifestRecord[] = [];
  const skipped: { utt_id: string; reason: string }[] = [];
  for (const job of jobs) {
    try {
      if (!opts.stub) {
        throw new Error(
          "no forced aligner is installed in this environment; rerun with --stub"
        );
      }
      if (typeof job.text !== "string" || !job.text.trim()) {
        throw new Error("missing transcript text");
      }
      if (typeof job.duration_s !== "number") {
        throw new Error("stub mode requires duration_s");
      }
      const phonemes = textToPhonemes(job.text);
      if (phonemes.length === 0) {
        throw new Error("transcript produced no phonemes");
      }
      const frames = framesForDuration(job.duration_s, opts.kind);
      segments.push(...uniformAlignment(job.utt_id, phonemes.length, frames));
      records.push({
        utt_id: job.utt_id,
        system_id: job.system_id ?? "external",
        text: job.text,
        phonemes,
        alignment_path: alignmentFile,
      });
    } catch (err) {
      skipped.push({ utt_id: job.utt_id, reason: String((err as Error).message ?? err) });
    }
  }
  await writeAlignments(path.join(opts.outDir, alignmentFile), segments);
  const manifestPath = path.join(opts.outDir, "alignment_manifest.jsonl");
  await writeManifest(manifestPath, records);
  if (skipped.length > 0) {
    await fs.writeFile(
      path.join(opts.outDir, "alignment_skipped.jsonl"),
      skipped.map((s) => JSON.stringify(s)).join("\n") + "\n"
    );
  }
  await writeRunManifest(manifestPath + ".run.json", "export-alignments", {
    list: opts.list,
    kind: opts.kind,
    stub: opts.stub,
    skipped: skipped.length,
  });
  return { records, skipped };
}

function parseCli(argv: string[]): AlignmentExportOptions {
  const { values } = parseArgs({
    args: argv,
    options: {
      list: { type: "string" },
      "out-dir": { type: "string" },
      kind: { type: "string", default: "prosody" },
      stub: { type: "boolean", default: false },
    },
  });
  if (!values.list || !values["out-dir"]) {
    throw new Error(
      "usage: export-alignments --list jobs.jsonl --out-dir DIR [--kind content|prosody] [--stub]"
    );
  }
  if (values.kind !== "content" && values.kind !== "prosody") {
    throw new Error(`--kind must be content or prosody, got ${values.kind}`);
  }
  return {
    list: values.list,
    outDir: values["out-dir"],
    kind: values.kind,
    stub: values.stub ?? false,
  };
}

const isMain = process.argv[1] && import.meta.url.endsWith(path.basename(process.argv[1]));
if (isMain) {
  exportAlignments(parseCli(process.argv.slice(2)))
    .then(({ records, skipped }) => {
      console.log(
        `exported phonemes+alignments for ${records.length} utterance(s)` +
          (skipped.length ? `, skipped ${skipped.length}` : "")
      );
    })
    .catch((err) => {
      console.error(`error: ${err.message ?? err}`);
      process.exit(1);
    });
}
