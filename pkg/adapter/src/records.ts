// Line-delimited JSON records matching the main toolkit's manifest and
// alignment schemas, plus the job-list format the exporters consume.

import { promises as fs } from "node:fs";

export interface Job {
  utt_id: string;
  /** Reference transcript; required for phoneme/alignment export. */
  text?: string;
  /** Audio duration in seconds; drives stub frame counts. */
  duration_s?: number;
  /** Audio file reference; required outside stub mode. */
  audio_path?: string;
  system_id?: string;
}

export interface ManifestRecord {
  utt_id: string;
  system_id: string;
  text?: string;
  phonemes?: string[];
  feature_path?: string;
  alignment_path?: string;
}

export interface AlignmentSegment {
  utt_id: string;
  phoneme_index: number;
  start_frame: number;
  end_frame: number;
}

export async function readJobs(path: string): Promise<Job[]> {
  const raw = await fs.readFile(path, "utf-8");
  const jobs: Job[] = [];
  const seen = new Set<string>();
  raw.split("\n").forEach((line, idx) => {
    if (!line.trim()) return;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new Error(`${path}:${idx + 1}: invalid JSON (${err})`);
    }
    const job = obj as Job;
    if (typeof job.utt_id !== "string" || !job.utt_id) {
      throw new Error(`${path}:${idx + 1}: missing utt_id`);
    }
    if (seen.has(job.utt_id)) {
      throw new Error(`${path}:${idx + 1}: duplicate utt_id ${job.utt_id}`);
    }
    seen.add(job.utt_id);
    jobs.push(job);
  });
  if (jobs.length === 0) throw new Error(`${path}: empty job list`);
  return jobs;
}

function toJsonl(objects: object[]): string {
  return objects.map((o) => JSON.stringify(o)).join("\n") + "\n";
}

export async function writeManifest(path: string, records: ManifestRecord[]): Promise<void> {
  await fs.writeFile(path, toJsonl(records), "utf-8");
}

export async function writeAlignments(
  path: string,
  segments: AlignmentSegment[]
): Promise<void> {
  await fs.writeFile(path, toJsonl(segments), "utf-8");
}

export async function writeRunManifest(
  path: string,
  command: string,
  options: Record<string, unknown>
): Promise<void> {
  const payload = { command, adapter_version: "0.1.0", options };
  await fs.writeFile(path, JSON.stringify(payload, null, 2) + "\n");
}
