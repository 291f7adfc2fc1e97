// Conformance: stub-mode exports must pass the main toolkit's validators
// with zero warnings. Runs the exporters in-process, merges the manifest
// fragments, and drives `python3 -m ttscore.cli validate` on the result.

import { execFile } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import path from "node:path";
import { promisify } from "node:util";
import { describe, expect, it } from "vitest";

import { exportAlignments } from "../src/export-alignments.js";
import { exportFeatures } from "../src/export-features.js";

const run = promisify(execFile);

const JOBS = [
  { utt_id: "adapt0", text: "the quick brown fox", duration_s: 2.3, system_id: "demo" },
  { utt_id: "adapt1", text: "jumps over the lazy dog", duration_s: 3.1, system_id: "demo" },
  { utt_id: "adapt2", text: "she sells sea shells", duration_s: 1.9, system_id: "demo" },
];

function writeJobs(dir: string): string {
  const listPath = path.join(dir, "jobs.jsonl");
  writeFileSync(listPath, JOBS.map((j) => JSON.stringify(j)).join("\n") + "\n");
  return listPath;
}

function mergeManifests(dir: string, parts: string[], out: string): string {
  const merged = new Map<string, Record<string, unknown>>();
  for (const part of parts) {
    for (const line of readFileSync(path.join(dir, part), "utf-8").split("\n")) {
      if (!line.trim()) continue;
      const obj = JSON.parse(line) as Record<string, unknown>;
      const key = obj.utt_id as string;
      merged.set(key, { ...(merged.get(key) ?? {}), ...obj });
    }
  }
  const outPath = path.join(dir, out);
  writeFileSync(
    outPath,
    Array.from(merged.values()).map((o) => JSON.stringify(o)).join("\n") + "\n"
  );
  return outPath;
}

async function validate(manifest: string): Promise<string> {
  const { stdout } = await run("python3", ["-m", "ttscore.cli", "validate", "--manifest", manifest]);
  return stdout;
}

describe("stub exports conform to the toolkit formats", () => {
  it("feature + alignment fragments pass validation with zero warnings", async () => {
    const dir = mkdtempSync(path.join(tmpdir(), "adapter-"));
    const list = writeJobs(dir);

    await exportFeatures({
      list, outDir: dir, kind: "prosody", layer: 9, dims: 6, seed: 17,
      stub: true, sampleRate: 16000,
    });
    const { records, skipped } = await exportAlignments({
      list, outDir: dir, kind: "prosody", stub: true,
    });
    expect(skipped).toEqual([]);
    expect(records.length).toBe(JOBS.length);
    for (const rec of records) {
      expect(rec.phonemes!.length).toBeGreaterThan(0);
    }

    const featuresOut = await validate(path.join(dir, "prosody_features.jsonl"));
    expect(featuresOut).toContain("0 warnings");
    const merged = mergeManifests(
      dir, ["prosody_features.jsonl", "alignment_manifest.jsonl"], "merged.jsonl"
    );
    const mergedOut = await validate(merged);
    expect(mergedOut).toContain(`validated ${JOBS.length} records`);
    expect(mergedOut).toContain("0 warnings");
  }, 60_000);

  it("content features at several layers validate too", async () => {
    const dir = mkdtempSync(path.join(tmpdir(), "adapter-"));
    const list = writeJobs(dir);
    for (const layer of [3, 9, 12]) {
      await exportFeatures({
        list, outDir: path.join(dir, `L${layer}`), kind: "content", layer,
        dims: 16, seed: 3, stub: true, sampleRate: 16000,
      });
      const out = await validate(path.join(dir, `L${layer}`, "content_features.jsonl"));
      expect(out).toContain("0 warnings");
    }
  }, 60_000);

  it("exports are byte-deterministic for a fixed seed", async () => {
    const dirA = mkdtempSync(path.join(tmpdir(), "adapter-"));
    const dirB = mkdtempSync(path.join(tmpdir(), "adapter-"));
    for (const dir of [dirA, dirB]) {
      const list = writeJobs(dir);
      await exportFeatures({
        list, outDir: dir, kind: "content", layer: 9, dims: 8, seed: 5,
        stub: true, sampleRate: 16000,
      });
    }
    for (const job of JOBS) {
      const a = readFileSync(path.join(dirA, "features", `${job.utt_id}.ttsf`));
      const b = readFileSync(path.join(dirB, "features", `${job.utt_id}.ttsf`));
      expect(a.equals(b)).toBe(true);
    }
  }, 60_000);

  it("real-model mode fails with a pointer to --stub", async () => {
    const dir = mkdtempSync(path.join(tmpdir(), "adapter-"));
    const list = writeJobs(dir);
    await expect(
      exportFeatures({
        list, outDir: dir, kind: "content", layer: 9, dims: 8, seed: 5,
        stub: false, sampleRate: 16000,
      })
    ).rejects.toThrow(/--stub/);
  });

  it("per-utterance alignment failures are recorded and skipped", async () => {
    const dir = mkdtempSync(path.join(tmpdir(), "adapter-"));
    const listPath = path.join(dir, "jobs.jsonl");
    const jobs = [
      ...JOBS,
      // 0.05 s at the prosody hop is 4 frames, far fewer than the phonemes.
      { utt_id: "tooshort", text: "impossible alignment here", duration_s: 0.05 },
    ];
    writeFileSync(listPath, jobs.map((j) => JSON.stringify(j)).join("\n") + "\n");
    const { records, skipped } = await exportAlignments({
      list: listPath, outDir: dir, kind: "prosody", stub: true,
    });
    expect(records.map((r) => r.utt_id)).toEqual(JOBS.map((j) => j.utt_id));
    expect(skipped.length).toBe(1);
    expect(skipped[0].utt_id).toBe("tooshort");
  });
});
