// Offline stub backend: seeded synthetic features and uniform alignments in
// the exact ingestion formats, so the main toolkit's pipeline and tests
// never depend on downloadable upstream models.

import type { FeatureMatrix } from "./ttsf.js";
import type { AlignmentSegment } from "./records.js";
import { makeRng } from "./rng.js";

/** Upstream hop sizes the stub mimics, in seconds per frame. */
export const HOP_SECONDS: Record<string, number> = {
  content: 0.02, // SSL encoder frame rate
  prosody: 0.0125, // codec prosody stream frame rate
};

export const CONTENT_LAYERS = 12; // transformer layers in the content model

export function framesForDuration(durationS: number, kind: string): number {
  const hop = HOP_SECONDS[kind];
  if (hop === undefined) throw new Error(`unknown feature kind ${kind}`);
  if (!(durationS > 0)) throw new Error(`duration must be positive, got ${durationS}`);
  return Math.max(1, Math.round(durationS / hop));
}

/**
 * Deterministic pseudo-features for one utterance.
 *
 * The pattern is layer-dependent (phase shifts per layer) and smooth over
 * time with per-frame noise, so downstream clustering has structure to find
 * while every byte stays a pure function of (seed, utt_id, kind, layer).
 */
export function stubFeatures(
  uttId: string,
  durationS: number,
  kind: "content" | "prosody",
  layer: number,
  dims: number,
  seed: number
): FeatureMatrix {
  if (kind === "content" && (layer < 1 || layer > CONTENT_LAYERS)) {
    throw new Error(`layer ${layer} out of range 1..${CONTENT_LAYERS}`);
  }
  if (dims < 1) throw new Error(`dims must be >= 1, got ${dims}`);
  const frames = framesForDuration(durationS, kind);
  const rng = makeRng(seed, kind, String(layer), uttId);
  const values = new Float32Array(frames * dims);
  const phase = new Float64Array(dims);
  const freq = new Float64Array(dims);
  for (let d = 0; d < dims; d++) {
    phase[d] = rng.next() * 2 * Math.PI + layer * 0.37;
    freq[d] = 0.02 + rng.next() * 0.2;
  }
  for (let t = 0; t < frames; t++) {
    for (let d = 0; d < dims; d++) {
      const smooth = Math.sin(freq[d] * t + phase[d]);
      values[t * dims + d] = smooth * 2.0 + rng.normal() * 0.25;
    }
  }
  return { frames, dims, values };
}

/**
 * Uniform segmentation of `frames` over `phonemeCount` phonemes.
 *
 * Boundaries at round(i * frames / L); every segment is non-empty, ordered
 * and exactly covering phoneme indices, which is what the toolkit's
 * alignment validator demands. Fails when there are fewer frames than
 * phonemes.
 */
export function uniformAlignment(
  uttId: string,
  phonemeCount: number,
  frames: number
): AlignmentSegment[] {
  if (phonemeCount < 1) throw new Error("need at least one phoneme");
  if (frames < phonemeCount) {
    throw new Error(
      `cannot align ${phonemeCount} phonemes over ${frames} frames`
    );
  }
  const segments: AlignmentSegment[] = [];
  for (let i = 0; i < phonemeCount; i++) {
    // With frames >= phonemeCount the rounded boundaries are strictly
    // increasing, so every segment is non-empty.
    segments.push({
      utt_id: uttId,
      phoneme_index: i,
      start_frame: Math.round((i * frames) / phonemeCount),
      end_frame: Math.round(((i + 1) * frames) / phonemeCount),
    });
  }
  return segments;
}
