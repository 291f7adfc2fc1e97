"""Deterministic synthetic desk-scale corpus generation.

Real benchmark corpora (rating datasets, SSL features, codec features) are
ingested from outside the toolkit; this module fabricates a small stand-in
with the same file formats and with enough structure for the behavioral
checks to bite:

* every phoneme symbol has a content-feature anchor, so k-means tokenization
  recovers an (approximately) deterministic phoneme-to-token map;
* direct content token files apply that map with per-phoneme substitution
  noise whose rate depends on the synthetic system's quality;
* every phoneme has a pitch template, so phoneme-pooled prosody features
  carry phoneme identity, and inverse/flipped pitch variants of the eval
  split are emitted the way a resynthesis stage would produce them;
* per-system MOS and per-utterance WER columns correlate with the injected
  corruption, giving the correlation harness real structure to find.

Everything is a pure function of the corpus seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (
    AlignmentSegment,
    EvalRecord,
    F0Contour,
    FeatureMatrix,
    TokenSequence,
    write_alignments,
    write_f0,
    write_features,
    write_manifest,
    write_tokens,
)
from .errors import ValidationError
from .metrics import perturb_flip, perturb_inverse, word_error_rate

INVENTORY = (
    "aa", "ae", "ah", "ao", "aw", "ay", "b", "ch", "d", "dh",
    "eh", "er", "ey", "f", "g", "hh", "ih", "iy", "jh", "k",
    "l", "m", "n", "ng", "ow", "oy", "p", "r", "s", "sh",
    "t", "th", "uh", "uw", "v", "w", "y", "z", "zh",
)
UNVOICED = frozenset({"ch", "f", "hh", "k", "p", "s", "sh", "t", "th"})

PROSODY_DIMS = 6
F0_EVAL_VARIANTS = ("original", "inverse", "flipped")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    train_n: int = 500
    eval_n: int = 100
    n_systems: int = 8
    content_dims: int = 8
    min_phonemes: int = 6
    max_phonemes: int = 16
    min_duration: int = 3
    max_duration: int = 6
    anchor_scale: float = 4.0
    feature_noise: float = 0.3
    natural_substitution: float = 0.10

    def __post_init__(self):
        if self.train_n < 1 or self.eval_n < 1:
            raise ValidationError("train_n and eval_n must be >= 1")
        if self.n_systems < 1:
            raise ValidationError("n_systems must be >= 1")
        if not 2 <= self.min_phonemes <= self.max_phonemes:
            raise ValidationError("need 2 <= min_phonemes <= max_phonemes")
        if not 1 <= self.min_duration <= self.max_duration:
            raise ValidationError("need 1 <= min_duration <= max_duration")


@dataclass(frozen=True)
class _Inventory:
    anchors: np.ndarray  # (n_symbols, content_dims)
    pitch_mult: np.ndarray  # (n_symbols,)
    pitch_amp: np.ndarray  # (n_symbols,) intra-phoneme modulation depth
    pitch_freq: np.ndarray  # (n_symbols,) modulation cycles per phoneme
    pitch_phase: np.ndarray  # (n_symbols,)


def _build_inventory(cfg: SynthConfig, rng: np.random.Generator) -> _Inventory:
    n = len(INVENTORY)
    anchors = rng.normal(0.0, 1.0, size=(n, cfg.content_dims)) * cfg.anchor_scale
    # Each symbol gets a level and a smooth intra-phoneme contour template;
    # together they make pooled prosody features phoneme-identifying.
    pitch_mult = np.exp(rng.uniform(np.log(0.65), np.log(1.5), size=n))
    pitch_amp = rng.uniform(0.03, 0.12, size=n)
    pitch_freq = rng.uniform(0.5, 2.0, size=n)
    pitch_phase = rng.uniform(0.0, 1.0, size=n)
    return _Inventory(
        anchors=anchors,
        pitch_mult=pitch_mult,
        pitch_amp=pitch_amp,
        pitch_freq=pitch_freq,
        pitch_phase=pitch_phase,
    )


F0_LOG_REFERENCE_HZ = 170.0


def prosody_features_from_f0(contour: F0Contour) -> FeatureMatrix:
    """Deterministic frame features derived from a pitch contour.

    Voiced frames carry the log pitch relative to a fixed reference plus
    redundant nonlinear channels of it; unvoiced frames are zero with an
    indicator channel. Being a pure function of the contour, perturbing the
    contour is the only thing that can change these features, mirroring a
    resynthesis stage driven by a pitch track.
    """
    values = contour.values
    voiced = contour.voiced_mask
    n = len(values)
    out = np.zeros((n, PROSODY_DIMS), dtype=np.float64)
    if voiced.any():
        z = np.zeros(n)
        z[voiced] = np.log(values[voiced] / F0_LOG_REFERENCE_HZ)
        out[:, 0] = z
        out[:, 1] = z * z
        out[:, 2] = np.tanh(2.0 * z)
        out[:, 3] = np.where(voiced, 1.0, 0.0)
        out[:, 4] = np.abs(z)
        out[:, 5] = 0.5 * z * z * z
    return FeatureMatrix(out.astype(np.float32))


@dataclass(frozen=True)
class _Utterance:
    utt_id: str
    system_id: str
    phonemes: tuple[str, ...]
    durations: tuple[int, ...]
    tokens: tuple[int, ...]
    text: str
    hyp_text: str
    mos: float
    content: FeatureMatrix
    f0: F0Contour
    segments: tuple[AlignmentSegment, ...]


def _make_text(phonemes: tuple[str, ...], rng: np.random.Generator) -> str:
    words = []
    i = 0
    while i < len(phonemes):
        size = int(rng.integers(2, 5))
        words.append("".join(phonemes[i : i + size]))
        i += size
    return " ".join(words)


def _corrupt_text(text: str, rate: float, rng: np.random.Generator) -> str:
    words = text.split()
    out = []
    for w in words:
        if rng.random() < rate:
            out.append(w[::-1] + "x")
        else:
            out.append(w)
    return " ".join(out)


def _synth_utterance(
    cfg: SynthConfig,
    inv: _Inventory,
    utt_id: str,
    system_id: str,
    substitution: float,
    hyp_rate: float,
    mos_base: float,
    rng: np.random.Generator,
) -> _Utterance:
    n_sym = len(INVENTORY)
    while True:
        length = int(rng.integers(cfg.min_phonemes, cfg.max_phonemes + 1))
        phoneme_ids = rng.integers(0, n_sym, size=length)
        if any(INVENTORY[p] not in UNVOICED for p in phoneme_ids):
            break
    phonemes = tuple(INVENTORY[p] for p in phoneme_ids)
    durations = tuple(int(d) for d in rng.integers(cfg.min_duration, cfg.max_duration + 1, size=length))

    # Phoneme-level substitution corrupts the token AND the frames it spans,
    # like a synthesis system realizing the wrong sound.
    realized = phoneme_ids.copy()
    for i in range(length):
        if rng.random() < substitution:
            realized[i] = int(rng.integers(0, n_sym))
    tokens = tuple(int(r) for r in realized)

    frames = int(np.sum(durations))
    content = np.empty((frames, cfg.content_dims), dtype=np.float64)
    f0 = np.zeros(frames, dtype=np.float64)
    # Narrow base-pitch band: phoneme templates, not speaker range, should
    # dominate the pooled prosody features at desk scale.
    base_pitch = float(rng.uniform(162.0, 178.0))
    pos = 0
    for i in range(length):
        d = durations[i]
        sym_id = int(realized[i])
        block = inv.anchors[sym_id] + rng.normal(0.0, cfg.feature_noise, size=(d, cfg.content_dims))
        content[pos : pos + d] = block
        if INVENTORY[sym_id] not in UNVOICED:
            t_frac = (np.arange(d) + 0.5) / d
            shape = 1.0 + inv.pitch_amp[sym_id] * np.sin(
                2.0 * np.pi * (inv.pitch_freq[sym_id] * t_frac + inv.pitch_phase[sym_id])
            )
            jitter = 1.0 + rng.normal(0.0, 0.01, size=d)
            f0[pos : pos + d] = base_pitch * inv.pitch_mult[sym_id] * shape * jitter
        pos += d

    segments = []
    pos = 0
    for i, d in enumerate(durations):
        segments.append(AlignmentSegment(phoneme_index=i, start_frame=pos, end_frame=pos + d))
        pos += d

    text = _make_text(phonemes, rng)
    hyp_text = _corrupt_text(text, hyp_rate, rng)
    mos = float(np.clip(mos_base + rng.normal(0.0, 0.15), 1.0, 5.0))
    return _Utterance(
        utt_id=utt_id,
        system_id=system_id,
        phonemes=phonemes,
        durations=durations,
        tokens=tokens,
        text=text,
        hyp_text=hyp_text,
        mos=mos,
        content=FeatureMatrix(content.astype(np.float32)),
        f0=F0Contour(f0),
        segments=tuple(segments),
    )


def _system_params(cfg: SynthConfig, index: int) -> tuple[str, float, float, float]:
    """(system_id, substitution rate, hypothesis corruption rate, MOS base)."""
    if cfg.n_systems == 1:
        quality = 1.0
    else:
        quality = 1.0 - 0.7 * index / (cfg.n_systems - 1)
    substitution = 0.05 + (1.0 - quality) * 0.35
    hyp_rate = 0.02 + (1.0 - quality) * 0.4
    mos_base = 1.5 + 3.2 * quality
    return f"sys{index:02d}", substitution, hyp_rate, mos_base


def generate_corpus(cfg: SynthConfig, out_dir: str | Path) -> dict:
    """Write the full synthetic corpus; returns a manifest of what was written."""
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    for variant in F0_EVAL_VARIANTS:
        (out / "prosody_features" / variant).mkdir(parents=True, exist_ok=True)
    (out / "prosody_features" / "train").mkdir(parents=True, exist_ok=True)

    root = np.random.SeedSequence(cfg.seed)
    inv_seq, train_seq, eval_seq = root.spawn(3)
    inv = _build_inventory(cfg, np.random.default_rng(inv_seq))

    vocab = len(INVENTORY)

    def build_split(
        n: int, prefix: str, seq: np.random.SeedSequence, is_eval: bool
    ) -> list[_Utterance]:
        utts = []
        children = seq.spawn(n)
        for i in range(n):
            rng = np.random.default_rng(children[i])
            if is_eval:
                sys_index = i % cfg.n_systems
                system_id, substitution, hyp_rate, mos_base = _system_params(cfg, sys_index)
            else:
                system_id = "natural"
                substitution = cfg.natural_substitution
                hyp_rate = 0.0
                mos_base = 4.6
            utts.append(
                _synth_utterance(
                    cfg, inv, f"{prefix}{i:05d}", system_id, substitution, hyp_rate,
                    mos_base, rng,
                )
            )
        return utts

    train = build_split(cfg.train_n, "tr", train_seq, is_eval=False)
    evals = build_split(cfg.eval_n, "ev", eval_seq, is_eval=True)

    def emit_split(utts: list[_Utterance], split: str) -> None:
        tokens = {u.utt_id: TokenSequence(u.tokens, vocab) for u in utts}
        write_tokens(tokens, out / f"{split}.tok")
        write_alignments({u.utt_id: u.segments for u in utts}, out / f"{split}_alignments.jsonl")
        for u in utts:
            write_features(u.content, out / "features" / f"{u.utt_id}.ttsf")

        records = []
        for u in utts:
            wer = word_error_rate(u.text, u.hyp_text) if split == "eval" else None
            records.append(
                EvalRecord(
                    utt_id=u.utt_id,
                    system_id=u.system_id,
                    text=u.text,
                    phonemes=u.phonemes,
                    mos=round(u.mos, 4) if split == "eval" else None,
                    wer=round(wer, 6) if wer is not None else None,
                    feature_path=f"features/{u.utt_id}.ttsf",
                    token_path=f"{split}.tok",
                    alignment_path=f"{split}_alignments.jsonl",
                )
            )
        write_manifest(records, out / f"{split}.jsonl")

    emit_split(train, "train")
    emit_split(evals, "eval")

    # Hypothesis transcripts for the WER baseline.
    with open(out / "eval_hyps.jsonl", "w", encoding="utf-8") as fh:
        for u in evals:
            fh.write(json.dumps({"utt_id": u.utt_id, "text": u.hyp_text}) + "\n")

    # Prosody views: train split once, eval split per pitch variant.
    def emit_prosody(
        utts: list[_Utterance], split: str, variant: str | None, system_override: str | None
    ) -> None:
        tag = f"{split}_prosody" if variant is None else f"{split}_prosody_{variant}"
        subdir = "train" if variant is None else variant
        contours: dict[str, F0Contour] = {}
        records = []
        for u in utts:
            contour = u.f0
            if variant == "inverse":
                contour = perturb_inverse(contour)
            elif variant == "flipped":
                contour = perturb_flip(contour)
            contours[u.utt_id] = contour
            feats = prosody_features_from_f0(contour)
            feat_ref = f"prosody_features/{subdir}/{u.utt_id}.ttsf"
            write_features(feats, out / feat_ref)
            records.append(
                EvalRecord(
                    utt_id=u.utt_id,
                    system_id=system_override or u.system_id,
                    text=u.text,
                    phonemes=u.phonemes,
                    feature_path=feat_ref,
                    alignment_path=f"{split}_alignments.jsonl",
                    f0_path=f"{tag}_f0.jsonl",
                )
            )
        write_f0(contours, out / f"{tag}_f0.jsonl")
        write_manifest(records, out / f"{tag}.jsonl")

    emit_prosody(train, "train", None, None)
    emit_prosody(evals, "eval", "original", "resynth_original")
    emit_prosody(evals, "eval", "inverse", "resynth_inverse")
    emit_prosody(evals, "eval", "flipped", "resynth_flipped")

    info = {
        "seed": cfg.seed,
        "train_n": cfg.train_n,
        "eval_n": cfg.eval_n,
        "n_systems": cfg.n_systems,
        "inventory": list(INVENTORY),
        "content_vocab": vocab,
        "content_dims": cfg.content_dims,
        "prosody_dims": PROSODY_DIMS,
        "total_train_tokens": sum(len(u.tokens) for u in train),
        "manifests": {
            "train": "train.jsonl",
            "eval": "eval.jsonl",
            "train_prosody": "train_prosody.jsonl",
            "eval_prosody": [f"eval_prosody_{v}.jsonl" for v in F0_EVAL_VARIANTS],
        },
    }
    (out / "corpus.json").write_text(json.dumps(info, indent=2) + "\n", encoding="utf-8")
    return info
