"""Utterance-level data model and file formats.

Everything the pipeline moves between stages lives here: frame-level feature
matrices, discrete token sequences, phoneme sequences with optional frame
alignments, F0 contours, and the per-utterance evaluation records that
manifests are made of.

On-disk formats:

* ``*.ttsf``   binary feature matrix: magic ``TTSF``, format version,
  frame and dim counts (uint32, little-endian), then a row-major float32
  little-endian payload.
* ``*.tok``    token lines, one utterance per line: ``utt_id<TAB>id id id``.
* ``*.jsonl``  manifests, alignments and F0 contours as line-delimited JSON.

All types are immutable after construction and safe to share across workers.
F0 convention: a value of exactly 0.0 marks an unvoiced frame.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, ValidationError

TTSF_MAGIC = b"TTSF"
TTSF_VERSION = 1

UNK_SYMBOL = "<unk>"


class CorpusWarning(UserWarning):
    """Non-fatal data irregularity (unknown phoneme, skipped record, ...)."""


def _require_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains non-finite values")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Frame-level continuous features, shape (frames, dims), float32."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError(f"feature matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"feature matrix must be at least 1x1, got {arr.shape}")
        _require_finite(arr, "feature matrix")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TokenSequence:
    """A discrete token id sequence for one utterance."""

    ids: tuple[int, ...]
    vocab_size: int

    def __post_init__(self):
        ids = tuple(int(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        if len(ids) < 1:
            raise ValidationError("token sequence must contain at least one id")
        if self.vocab_size < 1:
            raise ValidationError(f"vocab_size must be >= 1, got {self.vocab_size}")
        for i in ids:
            if i < 0 or i >= self.vocab_size:
                raise ValidationError(
                    f"token id {i} out of range for vocab_size {self.vocab_size}"
                )

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class PhonemeSequence:
    """Conditioning phoneme symbols for one utterance."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        syms = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", syms)
        if len(syms) < 1:
            raise ValidationError("phoneme sequence must contain at least one symbol")
        if any(not s for s in syms):
            raise ValidationError("phoneme symbols must be non-empty strings")

    def __len__(self) -> int:
        return len(self.symbols)

    def mapped_to(self, inventory: Sequence[str]) -> "PhonemeSequence":
        """Replace symbols outside ``inventory`` with the reserved UNK label.

        Emits a CorpusWarning naming the unknown symbols rather than failing:
        external g2p inventories drift and should not break scoring runs.
        """
        known = set(inventory)
        unknown = sorted({s for s in self.symbols if s not in known and s != UNK_SYMBOL})
        if not unknown:
            return self
        warnings.warn(
            f"{len(unknown)} phoneme symbol(s) outside inventory mapped to "
            f"{UNK_SYMBOL}: {', '.join(unknown[:8])}",
            CorpusWarning,
            stacklevel=2,
        )
        return PhonemeSequence(
            tuple(s if s in known else UNK_SYMBOL for s in self.symbols)
        )


@dataclass(frozen=True)
class AlignmentSegment:
    """Half-open frame interval [start_frame, end_frame) for one phoneme."""

    phoneme_index: int
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.phoneme_index < 0:
            raise ValidationError(f"negative phoneme_index {self.phoneme_index}")
        if self.start_frame < 0:
            raise ValidationError(f"negative start_frame {self.start_frame}")
        if self.end_frame <= self.start_frame:
            raise ValidationError(
                f"zero-length or inverted segment "
                f"[{self.start_frame}, {self.end_frame}) for phoneme {self.phoneme_index}"
            )


@dataclass(frozen=True, eq=False)
class F0Contour:
    """Per-frame fundamental frequency in Hz; 0.0 marks unvoiced frames."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValidationError(f"F0 contour must be 1-D, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValidationError("F0 contour must contain at least one frame")
        _require_finite(arr, "F0 contour")
        if np.any(arr < 0):
            raise ValidationError("F0 values must be >= 0 (0.0 marks unvoiced)")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def voiced_mask(self) -> np.ndarray:
        return self.values > 0.0


# Manifest fields carrying file references, in serialization order.
_PATH_FIELDS = (
    "phoneme_path",
    "feature_path",
    "token_path",
    "prosody_token_path",
    "alignment_path",
    "f0_path",
)


@dataclass(frozen=True)
class EvalRecord:
    """One utterance's metadata as stored in a manifest."""

    utt_id: str
    system_id: str
    text: str | None = None
    phonemes: tuple[str, ...] | None = None
    mos: float | None = None
    wer: float | None = None
    cer: float | None = None
    phoneme_path: str | None = None
    feature_path: str | None = None
    token_path: str | None = None
    prosody_token_path: str | None = None
    alignment_path: str | None = None
    f0_path: str | None = None

    def __post_init__(self):
        if not self.utt_id:
            raise ValidationError("utt_id must be a non-empty string")
        if not self.system_id:
            raise ValidationError("system_id must be a non-empty string")
        if self.phonemes is not None:
            object.__setattr__(self, "phonemes", tuple(str(s) for s in self.phonemes))

    def phoneme_sequence(self) -> PhonemeSequence:
        if self.phonemes is None:
            raise ValidationError(f"record {self.utt_id} carries no inline phonemes")
        return PhonemeSequence(self.phonemes)

    def to_json_obj(self) -> dict:
        obj: dict = {"utt_id": self.utt_id, "system_id": self.system_id}
        if self.text is not None:
            obj["text"] = self.text
        if self.phonemes is not None:
            obj["phonemes"] = list(self.phonemes)
        for name in ("mos", "wer", "cer"):
            val = getattr(self, name)
            if val is not None:
                obj[name] = val
        for name in _PATH_FIELDS:
            val = getattr(self, name)
            if val is not None:
                obj[name] = val
        return obj


def resolve_path(base: str | Path, ref: str) -> Path:
    """Resolve a manifest path reference relative to the manifest's directory."""
    p = Path(ref)
    return p if p.is_absolute() else Path(base) / p


# ---------------------------------------------------------------------------
# Feature matrix I/O (.ttsf)
# ---------------------------------------------------------------------------

_TTSF_HEADER = struct.Struct("<4sIII")


def write_features(matrix: FeatureMatrix, path: str | Path) -> None:
    path = Path(path)
    payload = matrix.values.astype("<f4", copy=False).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_TTSF_HEADER.pack(TTSF_MAGIC, TTSF_VERSION, matrix.frames, matrix.dims))
        fh.write(payload)


def read_features(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read feature file {path}: {exc}") from exc
    if len(data) < _TTSF_HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, frames, dims = _TTSF_HEADER.unpack_from(data)
    if magic != TTSF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {TTSF_MAGIC!r}")
    if version != TTSF_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    expected = _TTSF_HEADER.size + 4 * frames * dims
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload length {len(data)} != expected {expected} "
            f"for {frames}x{dims} matrix"
        )
    arr = np.frombuffer(data, dtype="<f4", offset=_TTSF_HEADER.size).reshape(frames, dims)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: payload contains non-finite values")
    return FeatureMatrix(arr)


# ---------------------------------------------------------------------------
# Token sequence I/O (.tok)
# ---------------------------------------------------------------------------

def write_tokens(sequences: dict[str, TokenSequence], path: str | Path) -> None:
    """Write token lines in insertion order of ``sequences``."""
    with open(path, "w", encoding="utf-8") as fh:
        for utt_id, seq in sequences.items():
            fh.write(f"{utt_id}\t{' '.join(str(i) for i in seq.ids)}\n")


def read_tokens(path: str | Path, vocab_size: int | None = None) -> dict[str, TokenSequence]:
    """Read token lines; ids are validated against ``vocab_size`` when given.

    With ``vocab_size=None`` the vocabulary is inferred per file as
    ``max(id) + 1``, which is only appropriate for inspection tooling.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read token file {path}: {exc}") from exc
    parsed: dict[str, list[int]] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'utt_id<TAB>ids', got {line!r}")
        utt_id, _, rest = line.partition("\t")
        if not utt_id:
            raise FormatError(f"{path}:{lineno}: empty utt_id")
        if utt_id in parsed:
            raise ValidationError(f"{path}:{lineno}: duplicate utt_id {utt_id!r}")
        try:
            ids = [int(tok) for tok in rest.split()]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-integer token id") from exc
        if not ids:
            raise FormatError(f"{path}:{lineno}: no token ids")
        parsed[utt_id] = ids
    if vocab_size is None:
        vocab_size = max((max(ids) for ids in parsed.values()), default=0) + 1
    out: dict[str, TokenSequence] = {}
    for utt_id, ids in parsed.items():
        try:
            out[utt_id] = TokenSequence(tuple(ids), vocab_size)
        except ValidationError as exc:
            raise ValidationError(f"{path}: utterance {utt_id!r}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Manifest I/O (.jsonl)
# ---------------------------------------------------------------------------

_KNOWN_MANIFEST_KEYS = {f.name for f in fields(EvalRecord)}


def parse_manifest(path: str | Path) -> list[EvalRecord]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read manifest {path}: {exc}") from exc
    records: list[EvalRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise FormatError(f"{path}:{lineno}: expected a JSON object")
        for required in ("utt_id", "system_id"):
            if required not in obj:
                raise FormatError(f"{path}:{lineno}: missing required field {required!r}")
        known = {k: v for k, v in obj.items() if k in _KNOWN_MANIFEST_KEYS}
        if known.get("phonemes") is not None:
            known["phonemes"] = tuple(known["phonemes"])
        try:
            rec = EvalRecord(**known)
        except (ValidationError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        if rec.utt_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate utt_id {rec.utt_id!r}")
        seen.add(rec.utt_id)
        records.append(rec)
    return records


def write_manifest(records: Iterable[EvalRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_obj(), sort_keys=False) + "\n")


# ---------------------------------------------------------------------------
# Alignment I/O (.jsonl) and validation
# ---------------------------------------------------------------------------

def validate_alignment(
    segments: Sequence[AlignmentSegment], n_phonemes: int, frames: int
) -> list[AlignmentSegment]:
    """Check coverage/order invariants and return segments sorted by phoneme.

    Segments must cover phonemes 0..L-1 exactly once, lie within
    [0, frames), keep frame order consistent with phoneme order, and must not
    overlap. Frame gaps between consecutive phonemes are allowed (silences).
    """
    if n_phonemes < 1:
        raise ValidationError("alignment requires at least one phoneme")
    if len(segments) != n_phonemes:
        raise ValidationError(
            f"alignment has {len(segments)} segments for {n_phonemes} phonemes"
        )
    ordered = sorted(segments, key=lambda s: s.phoneme_index)
    indices = [s.phoneme_index for s in ordered]
    if indices != list(range(n_phonemes)):
        missing = sorted(set(range(n_phonemes)) - set(indices))
        raise ValidationError(
            f"alignment does not cover phonemes exactly once "
            f"(missing or duplicated: {missing or sorted(set(indices))})"
        )
    for seg in ordered:
        if seg.end_frame > frames:
            raise ValidationError(
                f"segment [{seg.start_frame}, {seg.end_frame}) for phoneme "
                f"{seg.phoneme_index} exceeds frame count {frames}"
            )
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start_frame < prev.end_frame:
            raise ValidationError(
                f"segments for phonemes {prev.phoneme_index} and "
                f"{cur.phoneme_index} overlap "
                f"([{prev.start_frame},{prev.end_frame}) vs "
                f"[{cur.start_frame},{cur.end_frame}))"
            )
    return ordered


def read_alignments(path: str | Path) -> dict[str, list[AlignmentSegment]]:
    """Read raw alignment records grouped by utt_id (unvalidated coverage)."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read alignment file {path}: {exc}") from exc
    grouped: dict[str, list[AlignmentSegment]] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        try:
            seg = AlignmentSegment(
                phoneme_index=int(obj["phoneme_index"]),
                start_frame=int(obj["start_frame"]),
                end_frame=int(obj["end_frame"]),
            )
            utt_id = str(obj["utt_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: malformed alignment record: {exc}") from exc
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        grouped.setdefault(utt_id, []).append(seg)
    return grouped


def read_alignment(
    path: str | Path, utt_id: str, phonemes: PhonemeSequence, frames: int
) -> list[AlignmentSegment]:
    """Read and validate the alignment of one utterance from a .jsonl file."""
    grouped = read_alignments(path)
    if utt_id not in grouped:
        raise ValidationError(f"{path}: no alignment records for utterance {utt_id!r}")
    return validate_alignment(grouped[utt_id], len(phonemes), frames)


def write_alignments(
    alignments: dict[str, Sequence[AlignmentSegment]], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for utt_id, segs in alignments.items():
            for seg in segs:
                fh.write(
                    json.dumps(
                        {
                            "utt_id": utt_id,
                            "phoneme_index": seg.phoneme_index,
                            "start_frame": seg.start_frame,
                            "end_frame": seg.end_frame,
                        }
                    )
                    + "\n"
                )


# ---------------------------------------------------------------------------
# F0 contour I/O (.jsonl)
# ---------------------------------------------------------------------------

def write_f0(contours: dict[str, F0Contour], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for utt_id, contour in contours.items():
            fh.write(json.dumps({"utt_id": utt_id, "f0": contour.values.tolist()}) + "\n")


def read_f0(path: str | Path) -> dict[str, F0Contour]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read F0 file {path}: {exc}") from exc
    out: dict[str, F0Contour] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            utt_id = str(obj["utt_id"])
            values = obj["f0"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: malformed F0 record: {exc}") from exc
        if utt_id in out:
            raise ValidationError(f"{path}:{lineno}: duplicate utt_id {utt_id!r}")
        try:
            out[utt_id] = F0Contour(np.asarray(values, dtype=np.float64))
        except (ValidationError, ValueError) as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Phoneme file I/O (single utterance, space-separated symbols)
# ---------------------------------------------------------------------------

def read_phonemes(path: str | Path) -> PhonemeSequence:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read phoneme file {path}: {exc}") from exc
    symbols = text.split()
    if not symbols:
        raise FormatError(f"{path}: empty phoneme file")
    return PhonemeSequence(tuple(symbols))


def write_phonemes(seq: PhonemeSequence, path: str | Path) -> None:
    Path(path).write_text(" ".join(seq.symbols) + "\n", encoding="utf-8")


def with_paths(record: EvalRecord, **paths: str | None) -> EvalRecord:
    """Return a copy of ``record`` with the given *_path fields replaced."""
    bad = set(paths) - set(_PATH_FIELDS)
    if bad:
        raise ValueError(f"unknown path fields: {sorted(bad)}")
    return replace(record, **paths)
