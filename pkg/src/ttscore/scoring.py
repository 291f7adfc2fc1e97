"""The published metrics: mean per-token conditional log-likelihood scores.

``ttscore_int`` scores content tokens given phonemes, ``ttscore_pro`` scores
phoneme-level prosody tokens given phonemes, and ``ulm_score`` is the
unconditional decoder-only baseline. All values are natural-log based and
averaged over the scored positions (data tokens plus EOS), so they are
always <= 0 and exp(value) is a valid per-token probability.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import (
    CorpusWarning,
    EvalRecord,
    PhonemeSequence,
    TokenSequence,
    read_phonemes,
    read_tokens,
    resolve_path,
)
from .errors import FormatError, TTScoreError, ValidationError
from .generator import GeneratorModel, score_batch

METRICS = ("ttscore_int", "ttscore_pro", "ulm_score")


@dataclass(frozen=True)
class ScoreResult:
    utt_id: str
    metric: str
    value: float
    token_count: int
    system_id: str = ""

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric {self.metric!r}")
        if not (math.isfinite(self.value) and self.value <= 0.0):
            raise ValidationError(f"score must be finite and <= 0, got {self.value}")
        if self.token_count < 1:
            raise ValidationError(f"token_count must be >= 1, got {self.token_count}")


def _mean_logprob(
    model: GeneratorModel,
    phonemes: PhonemeSequence | None,
    tokens: TokenSequence,
    metric: str,
    utt_id: str,
    system_id: str,
) -> ScoreResult:
    logprobs = score_batch(model, [(phonemes, tokens)])[0]
    value = sum(logprobs) / len(logprobs)
    return ScoreResult(
        utt_id=utt_id,
        metric=metric,
        value=value,
        token_count=len(logprobs),
        system_id=system_id,
    )


def ttscore_int(
    model: GeneratorModel,
    phonemes: PhonemeSequence,
    content_tokens: TokenSequence,
    utt_id: str = "",
    system_id: str = "",
) -> ScoreResult:
    """Intelligibility score: mean log p(content tokens | phonemes)."""
    if not model.config.conditional:
        raise ValidationError("ttscore_int requires a conditional (encoder-decoder) model")
    return _mean_logprob(model, phonemes, content_tokens, "ttscore_int", utt_id, system_id)


def ttscore_pro(
    model: GeneratorModel,
    phonemes: PhonemeSequence,
    prosody_tokens: TokenSequence,
    utt_id: str = "",
    system_id: str = "",
    on_length_mismatch: str = "reject",
) -> ScoreResult:
    """Prosody score: mean log p(prosody tokens | phonemes).

    Prosody tokens are phoneme-level, so their count must equal the phoneme
    count; ``on_length_mismatch`` may relax that to a warning.
    """
    if not model.config.conditional:
        raise ValidationError("ttscore_pro requires a conditional (encoder-decoder) model")
    if len(prosody_tokens) != len(phonemes):
        msg = (
            f"prosody token count {len(prosody_tokens)} != phoneme count "
            f"{len(phonemes)} for utterance {utt_id or '<unnamed>'}"
        )
        if on_length_mismatch == "warn":
            warnings.warn(msg, CorpusWarning, stacklevel=2)
        elif on_length_mismatch == "reject":
            raise ValidationError(msg)
        else:
            raise ValidationError(
                f"on_length_mismatch must be 'reject' or 'warn', got {on_length_mismatch!r}"
            )
    return _mean_logprob(model, phonemes, prosody_tokens, "ttscore_pro", utt_id, system_id)


def ulm_score(
    model: GeneratorModel,
    tokens: TokenSequence,
    utt_id: str = "",
    system_id: str = "",
) -> ScoreResult:
    """Unconditional baseline: mean log p(tokens) under the decoder-only model."""
    if model.config.conditional:
        raise ValidationError("ulm_score requires an unconditional (decoder-only) model")
    return _mean_logprob(model, None, tokens, "ulm_score", utt_id, system_id)


# ---------------------------------------------------------------------------
# Manifest-driven batch scoring
# ---------------------------------------------------------------------------

class _FileCache:
    """Loads token/phoneme files once per path; manifests share files freely."""

    def __init__(self, base_dir: Path):
        self.base_dir = base_dir
        self._tokens: dict[tuple[str, int], dict[str, TokenSequence]] = {}
        self._phonemes: dict[str, PhonemeSequence] = {}

    def tokens(self, ref: str, vocab_size: int) -> dict[str, TokenSequence]:
        key = (ref, vocab_size)
        if key not in self._tokens:
            self._tokens[key] = read_tokens(resolve_path(self.base_dir, ref), vocab_size)
        return self._tokens[key]

    def phonemes(self, ref: str) -> PhonemeSequence:
        if ref not in self._phonemes:
            self._phonemes[ref] = read_phonemes(resolve_path(self.base_dir, ref))
        return self._phonemes[ref]


def _record_phonemes(record: EvalRecord, cache: _FileCache) -> PhonemeSequence:
    if record.phonemes is not None:
        return record.phoneme_sequence()
    if record.phoneme_path is not None:
        return cache.phonemes(record.phoneme_path)
    raise ValidationError(f"record {record.utt_id} has neither phonemes nor phoneme_path")


def _record_tokens(
    record: EvalRecord, metric: str, vocab_size: int, cache: _FileCache
) -> TokenSequence:
    ref = record.prosody_token_path if metric == "ttscore_pro" else record.token_path
    field = "prosody_token_path" if metric == "ttscore_pro" else "token_path"
    if ref is None:
        raise ValidationError(f"record {record.utt_id} has no {field}")
    table = cache.tokens(ref, vocab_size)
    if record.utt_id not in table:
        raise ValidationError(f"{ref}: no token line for utterance {record.utt_id}")
    return table[record.utt_id]


def batch_score(
    records: Sequence[EvalRecord],
    metric: str,
    model: GeneratorModel,
    base_dir: str | Path = ".",
    batch_size: int = 32,
    on_length_mismatch: str = "reject",
) -> list[ScoreResult]:
    """Score every record that resolves its inputs; failures warn and skip.

    Records are scored in manifest order. Model and codebook problems are
    fatal; per-utterance data problems degrade to warnings so a benchmark
    manifest with a few broken rows still produces results.
    """
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}")
    if metric == "ulm_score" and model.config.conditional:
        raise ValidationError("ulm_score requires an unconditional model")
    if metric != "ulm_score" and not model.config.conditional:
        raise ValidationError(f"{metric} requires a conditional model")

    cache = _FileCache(Path(base_dir))
    vocab_size = model.config.data_tgt_vocab
    prepared: list[tuple[EvalRecord, PhonemeSequence | None, TokenSequence]] = []
    for record in records:
        try:
            tokens = _record_tokens(record, metric, vocab_size, cache)
            if len(tokens) > model.config.max_len - 1:
                raise ValidationError(
                    f"token count {len(tokens)} exceeds max_len budget "
                    f"{model.config.max_len - 1}"
                )
            phonemes = None
            if metric != "ulm_score":
                phonemes = _record_phonemes(record, cache)
                if len(phonemes) > model.config.max_len:
                    raise ValidationError(
                        f"phoneme count {len(phonemes)} exceeds max_len "
                        f"{model.config.max_len}"
                    )
                if metric == "ttscore_pro" and len(tokens) != len(phonemes):
                    if on_length_mismatch == "reject":
                        raise ValidationError(
                            f"prosody token count {len(tokens)} != phoneme count "
                            f"{len(phonemes)}"
                        )
                    warnings.warn(
                        f"utterance {record.utt_id}: prosody/phoneme length mismatch "
                        f"({len(tokens)} vs {len(phonemes)})",
                        CorpusWarning,
                        stacklevel=2,
                    )
            prepared.append((record, phonemes, tokens))
        except (TTScoreError, OSError) as exc:
            warnings.warn(
                f"skipping utterance {record.utt_id}: {exc}", CorpusWarning, stacklevel=2
            )

    results: list[ScoreResult] = []
    for start in range(0, len(prepared), batch_size):
        chunk = prepared[start : start + batch_size]
        per_utt = score_batch(model, [(ph, tok) for _, ph, tok in chunk])
        for (record, _, _), logprobs in zip(chunk, per_utt):
            results.append(
                ScoreResult(
                    utt_id=record.utt_id,
                    metric=metric,
                    value=sum(logprobs) / len(logprobs),
                    token_count=len(logprobs),
                    system_id=record.system_id,
                )
            )
    return results


# ---------------------------------------------------------------------------
# Results file I/O (.jsonl)
# ---------------------------------------------------------------------------

def write_results(results: Iterable[ScoreResult], path: str | Path, append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for res in results:
            fh.write(
                json.dumps(
                    {
                        "utt_id": res.utt_id,
                        "system_id": res.system_id,
                        "metric": res.metric,
                        "value": res.value,
                        "token_count": res.token_count,
                    }
                )
                + "\n"
            )


def read_results(path: str | Path) -> list[ScoreResult]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read results file {path}: {exc}") from exc
    out: list[ScoreResult] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out.append(
                ScoreResult(
                    utt_id=str(obj["utt_id"]),
                    metric=str(obj["metric"]),
                    value=float(obj["value"]),
                    token_count=int(obj["token_count"]),
                    system_id=str(obj.get("system_id", "")),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: malformed result record: {exc}") from exc
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return out
