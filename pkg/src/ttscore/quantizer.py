"""k-means codebook training and nearest-centroid token assignment.

Content tokens are produced by clustering frame-level features with Lloyd's
algorithm from a seeded k-means++ initialization and assigning each frame to
its nearest centroid under squared Euclidean distance. The implementation is
deliberately self-contained: the toolkit needs a per-iteration inertia trace,
farthest-point empty-cluster repair and bit-for-bit seed determinism, none of
which off-the-shelf clusterers guarantee across versions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import FeatureMatrix, TokenSequence, read_features, write_features
from .errors import FormatError, ValidationError

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 100
CODEBOOK_VERSION = 1


@dataclass(frozen=True, eq=False)
class Codebook:
    """A trained k-means codebook; centroids are float32, shape (k, dims)."""

    centroids: np.ndarray
    inertia: float
    seed: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.centroids, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"centroids must be a (k, dims) matrix, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("centroids contain non-finite values")
        if not (np.isfinite(self.inertia) and self.inertia >= 0):
            raise ValidationError(f"inertia must be finite and >= 0, got {self.inertia}")
        arr.flags.writeable = False
        object.__setattr__(self, "centroids", arr)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dims(self) -> int:
        return self.centroids.shape[1]


def _stack(features: Sequence[FeatureMatrix]) -> np.ndarray:
    if not features:
        raise ValidationError("no feature matrices supplied")
    dims = features[0].dims
    for m in features:
        if m.dims != dims:
            raise ValidationError(f"feature dims mismatch: {m.dims} vs {dims}")
    return np.concatenate([m.values for m in features], axis=0)


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x - c||^2 computed directly; the expanded form x.x - 2x.c + c.c is
    # faster but loses the exactness the nearest-centroid contract relies on.
    # Chunked over points to bound the (block, k, d) intermediate; the
    # reduction is per (point, centroid) cell, so chunking is value-exact.
    n, d = points.shape
    k = centroids.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    block = max(1, 4_000_000 // max(k * d, 1))
    for start in range(0, n, block):
        chunk = points[start : start + block]
        diff = chunk[:, None, :] - centroids[None, :, :]
        out[start : start + block] = np.einsum("bkd,bkd->bk", diff, diff)
    return out


def _plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, rest sampled with prob ~ D^2."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=points.dtype)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    d2 = _squared_distances(points, centroids[:1]).min(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # All remaining mass sits on already-chosen points; pick uniformly.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, _squared_distances(points, centroids[j : j + 1]).min(axis=1))
    return centroids


def lloyd(
    points: np.ndarray,
    init_centroids: np.ndarray,
    max_iters: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Run Lloyd iterations; returns (centroids, labels, inertia trace).

    The trace holds the clustering objective (sum of squared distances to the
    assigned centroid) after each iteration's centroid update. It is checked
    to be non-increasing on every step; a violation is a bug, not bad data.
    """
    points = np.asarray(points, dtype=np.float64)
    centroids = np.asarray(init_centroids, dtype=np.float64).copy()
    k = centroids.shape[0]
    trace: list[float] = []
    labels = np.zeros(points.shape[0], dtype=np.int64)
    for _ in range(max_iters):
        d2 = _squared_distances(points, centroids)
        labels = np.argmin(d2, axis=1)  # argmin takes the lowest index on ties

        for j in range(k):
            mask = labels == j
            if mask.any():
                centroids[j] = points[mask].mean(axis=0)
            else:
                # Empty cluster: restart it on the point farthest from its
                # currently assigned centroid, keeping k fixed.
                per_point = d2[np.arange(points.shape[0]), labels]
                idx = int(np.argmax(per_point))
                centroids[j] = points[idx]
                labels[idx] = j
                d2 = _squared_distances(points, centroids)

        diff = points - centroids[labels]
        inertia = float(np.einsum("nd,nd->", diff, diff))
        if trace and inertia > trace[-1] + 1e-9 * max(1.0, trace[-1]):
            raise AssertionError(
                f"inertia increased across Lloyd iteration: {trace[-1]} -> {inertia}"
            )
        converged = bool(trace) and (trace[-1] - inertia) < tol * max(trace[-1], 1e-300)
        trace.append(inertia)
        if converged:
            break
    # Final labels against the returned centroids.
    labels = np.argmin(_squared_distances(points, centroids), axis=1)
    return centroids, labels, trace


def kmeans_fit(
    features: Sequence[FeatureMatrix],
    k: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    max_frames: int | None = None,
) -> Codebook:
    """Fit a k-cluster codebook on the stacked frames of ``features``.

    ``max_frames`` caps the training set by seeded subsampling without
    replacement, for memory control on large corpora. Deterministic for a
    fixed seed.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if seed < 0:
        raise ValidationError(f"seed must be >= 0, got {seed}")
    points = _stack(features).astype(np.float64)
    rng = np.random.default_rng(seed)
    if max_frames is not None and points.shape[0] > max_frames:
        keep = rng.choice(points.shape[0], size=max_frames, replace=False)
        keep.sort()
        points = points[keep]
    if points.shape[0] < k:
        raise ValidationError(f"need at least k={k} frames, got {points.shape[0]}")
    n_distinct = np.unique(points, axis=0).shape[0]
    if n_distinct < k:
        raise ValidationError(
            f"only {n_distinct} distinct points after deduplication, need k={k}"
        )
    init = _plusplus_init(points, k, rng)
    centroids, _, trace = lloyd(points, init, max_iters=max_iters, tol=tol)
    return Codebook(centroids=centroids.astype(np.float32), inertia=trace[-1], seed=seed)


def kmeans_assign(features: FeatureMatrix, codebook: Codebook) -> TokenSequence:
    """Map each frame to the index of its nearest centroid (ties: lowest index)."""
    if features.dims != codebook.dims:
        raise ValidationError(
            f"feature dims {features.dims} != codebook dims {codebook.dims}"
        )
    d2 = _squared_distances(
        features.values.astype(np.float64), codebook.centroids.astype(np.float64)
    )
    ids = np.argmin(d2, axis=1)
    return TokenSequence(tuple(int(i) for i in ids), vocab_size=codebook.k)


# ---------------------------------------------------------------------------
# Codebook persistence: JSON header + sibling .ttsf centroid matrix
# ---------------------------------------------------------------------------

def _centroid_file_for(path: Path) -> Path:
    return path.with_name(path.stem + ".centroids.ttsf")


def write_codebook(codebook: Codebook, path: str | Path) -> None:
    path = Path(path)
    centroid_file = _centroid_file_for(path)
    write_features(FeatureMatrix(codebook.centroids), centroid_file)
    header = {
        "format_version": CODEBOOK_VERSION,
        "kind": "kmeans",
        "k": codebook.k,
        "dims": codebook.dims,
        "inertia": codebook.inertia,
        "seed": codebook.seed,
        "centroid_file": centroid_file.name,
    }
    path.write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")


def read_codebook(path: str | Path) -> Codebook:
    path = Path(path)
    try:
        header = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read codebook {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid codebook header: {exc}") from exc
    for key in ("format_version", "kind", "k", "dims", "inertia", "seed", "centroid_file"):
        if key not in header:
            raise FormatError(f"{path}: codebook header missing field {key!r}")
    if header["kind"] != "kmeans":
        raise FormatError(f"{path}: expected kind 'kmeans', got {header['kind']!r}")
    if header["format_version"] != CODEBOOK_VERSION:
        raise FormatError(f"{path}: unsupported codebook version {header['format_version']}")
    centroids = read_features(path.with_name(header["centroid_file"])).values
    if centroids.shape != (header["k"], header["dims"]):
        raise FormatError(
            f"{path}: centroid matrix shape {centroids.shape} does not match header "
            f"({header['k']}, {header['dims']})"
        )
    return Codebook(
        centroids=centroids, inertia=float(header["inertia"]), seed=int(header["seed"])
    )
