"""Phoneme-level pooling and residual vector quantization of prosody features.

Frame-level continuous prosody features are pooled per aligned phoneme (mean
by default, max as an option) and the pooled rows are quantized stage-wise:
each RVQ stage runs k-means on the residual left by the previous stages.
The stage-0 token stream is what the prosody score consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import AlignmentSegment, FeatureMatrix, TokenSequence, read_features, write_features
from .errors import FormatError, ValidationError
from .quantizer import Codebook, kmeans_assign, kmeans_fit

RVQ_VERSION = 1
POOLING_MODES = ("mean", "max")


def pool_phoneme(
    features: FeatureMatrix,
    segments: Sequence[AlignmentSegment],
    mode: str = "mean",
) -> FeatureMatrix:
    """Pool frame features into one row per phoneme segment.

    ``segments`` must already be validated against the feature matrix
    (sorted by phoneme index, covering phonemes exactly once).
    """
    if mode not in POOLING_MODES:
        raise ValidationError(f"unknown pooling mode {mode!r}, expected one of {POOLING_MODES}")
    rows = np.empty((len(segments), features.dims), dtype=np.float32)
    for seg in segments:
        if seg.phoneme_index >= len(segments):
            raise ValidationError(
                f"phoneme_index {seg.phoneme_index} out of range for "
                f"{len(segments)} segments; validate the alignment first"
            )
        if seg.end_frame > features.frames:
            raise ValidationError(
                f"segment [{seg.start_frame}, {seg.end_frame}) exceeds "
                f"{features.frames} frames"
            )
        window = features.values[seg.start_frame : seg.end_frame]
        if mode == "mean":
            rows[seg.phoneme_index] = window.mean(axis=0)
        else:
            rows[seg.phoneme_index] = window.max(axis=0)
    return FeatureMatrix(rows)


@dataclass(frozen=True, eq=False)
class RvqCodebook:
    """Stage-wise residual codebooks, shape (stages, k_per_stage, dims)."""

    stage_centroids: np.ndarray
    seed: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.stage_centroids, dtype=np.float32)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValidationError(
                f"stage centroids must be (stages, k, dims), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("stage centroids contain non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "stage_centroids", arr)

    @property
    def stages(self) -> int:
        return self.stage_centroids.shape[0]

    @property
    def k_per_stage(self) -> int:
        return self.stage_centroids.shape[1]

    @property
    def dims(self) -> int:
        return self.stage_centroids.shape[2]

    def stage_codebook(self, stage: int) -> Codebook:
        return Codebook(
            centroids=self.stage_centroids[stage], inertia=0.0, seed=self.seed + stage
        )


@dataclass(frozen=True)
class StackedTokens:
    """One TokenSequence per RVQ stage, all of equal length."""

    stages: tuple[TokenSequence, ...]

    def __post_init__(self):
        if len(self.stages) < 1:
            raise ValidationError("stacked tokens need at least one stage")
        length = len(self.stages[0])
        if any(len(s) != length for s in self.stages):
            raise ValidationError("all stages must have equal token counts")

    def __len__(self) -> int:
        return len(self.stages[0])

    @property
    def primary(self) -> TokenSequence:
        """The stage-0 sequence, the one scored as the prosody token stream."""
        return self.stages[0]


def rvq_fit(
    pooled: Sequence[FeatureMatrix],
    stages: int,
    k_per_stage: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> RvqCodebook:
    """Fit stage-wise codebooks on residuals of the stacked pooled rows.

    Stage s clusters the residual after subtracting the reconstructions of
    stages 0..s-1; stage s uses seed ``seed + s`` so a single-stage fit is
    identical to a plain k-means fit with the same seed.
    """
    if stages < 1:
        raise ValidationError(f"stages must be >= 1, got {stages}")
    if not pooled:
        raise ValidationError("no pooled feature matrices supplied")
    dims = pooled[0].dims
    residual = np.concatenate([m.values for m in pooled], axis=0).astype(np.float64)
    stage_centroids = np.empty((stages, k_per_stage, dims), dtype=np.float32)
    for s in range(stages):
        try:
            cb = kmeans_fit(
                [FeatureMatrix(residual.astype(np.float32))],
                k=k_per_stage,
                max_iters=max_iters,
                tol=tol,
                seed=seed + s,
            )
        except ValidationError as exc:
            raise ValidationError(f"RVQ stage {s}: {exc}") from exc
        stage_centroids[s] = cb.centroids
        ids = kmeans_assign(FeatureMatrix(residual.astype(np.float32)), cb)
        residual = residual - cb.centroids[np.asarray(ids.ids)].astype(np.float64)
    return RvqCodebook(stage_centroids=stage_centroids, seed=seed)


def rvq_encode(pooled: FeatureMatrix, codebook: RvqCodebook) -> StackedTokens:
    """Greedy stage-wise nearest-centroid assignment of residuals."""
    if pooled.dims != codebook.dims:
        raise ValidationError(f"feature dims {pooled.dims} != codebook dims {codebook.dims}")
    residual = pooled.values.astype(np.float64)
    stage_tokens: list[TokenSequence] = []
    for s in range(codebook.stages):
        ids = kmeans_assign(
            FeatureMatrix(residual.astype(np.float32)), codebook.stage_codebook(s)
        )
        stage_tokens.append(ids)
        residual = residual - codebook.stage_centroids[s][np.asarray(ids.ids)].astype(
            np.float64
        )
    return StackedTokens(tuple(stage_tokens))


def rvq_decode(tokens: StackedTokens, codebook: RvqCodebook) -> FeatureMatrix:
    """Reconstruct pooled rows as the sum of selected centroids over stages."""
    if len(tokens.stages) != codebook.stages:
        raise ValidationError(
            f"token stages {len(tokens.stages)} != codebook stages {codebook.stages}"
        )
    out = np.zeros((len(tokens), codebook.dims), dtype=np.float64)
    for s, seq in enumerate(tokens.stages):
        if seq.vocab_size != codebook.k_per_stage:
            raise ValidationError(
                f"stage {s} vocab {seq.vocab_size} != k_per_stage {codebook.k_per_stage}"
            )
        out += codebook.stage_centroids[s][np.asarray(seq.ids)].astype(np.float64)
    return FeatureMatrix(out.astype(np.float32))


def reconstruction_mse(pooled: Sequence[FeatureMatrix], codebook: RvqCodebook) -> float:
    """Mean squared error of encode-decode over all rows of ``pooled``."""
    total = 0.0
    count = 0
    for m in pooled:
        recon = rvq_decode(rvq_encode(m, codebook), codebook)
        diff = m.values.astype(np.float64) - recon.values.astype(np.float64)
        total += float((diff * diff).sum())
        count += diff.size
    return total / count


# ---------------------------------------------------------------------------
# Persistence: JSON header + flattened (stages * k, dims) centroid matrix
# ---------------------------------------------------------------------------

def _centroid_file_for(path: Path) -> Path:
    return path.with_name(path.stem + ".centroids.ttsf")


def write_rvq(codebook: RvqCodebook, path: str | Path) -> None:
    path = Path(path)
    centroid_file = _centroid_file_for(path)
    flat = codebook.stage_centroids.reshape(
        codebook.stages * codebook.k_per_stage, codebook.dims
    )
    write_features(FeatureMatrix(flat), centroid_file)
    header = {
        "format_version": RVQ_VERSION,
        "kind": "rvq",
        "stages": codebook.stages,
        "k_per_stage": codebook.k_per_stage,
        "dims": codebook.dims,
        "seed": codebook.seed,
        "centroid_file": centroid_file.name,
    }
    path.write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")


def read_rvq(path: str | Path) -> RvqCodebook:
    path = Path(path)
    try:
        header = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read RVQ codebook {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid RVQ header: {exc}") from exc
    for key in ("format_version", "kind", "stages", "k_per_stage", "dims", "seed", "centroid_file"):
        if key not in header:
            raise FormatError(f"{path}: RVQ header missing field {key!r}")
    if header["kind"] != "rvq":
        raise FormatError(f"{path}: expected kind 'rvq', got {header['kind']!r}")
    if header["format_version"] != RVQ_VERSION:
        raise FormatError(f"{path}: unsupported RVQ version {header['format_version']}")
    flat = read_features(path.with_name(header["centroid_file"])).values
    stages, k, dims = header["stages"], header["k_per_stage"], header["dims"]
    if flat.shape != (stages * k, dims):
        raise FormatError(
            f"{path}: centroid matrix shape {flat.shape} does not match header "
            f"({stages}x{k}, {dims})"
        )
    return RvqCodebook(stage_centroids=flat.reshape(stages, k, dims), seed=int(header["seed"]))


def stage_token_path(base: str | Path, stage: int) -> Path:
    """File naming convention for persisted stacked tokens: one stage per file."""
    base = Path(base)
    return base.with_name(f"{base.stem}.stage{stage}{base.suffix or '.tok'}")
