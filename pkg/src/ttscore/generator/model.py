"""Text-to-token sequence models and per-token log-probability scoring.

Two shapes share one implementation: a conditional encoder-decoder that
predicts discrete speech tokens from a phoneme sequence, and an unconditional
decoder-only token language model used as a baseline. Both are small
pre-norm transformers with learned absolute position embeddings; when the
embedding width differs from the layer width, learned linear projections sit
on either side of the transformer stack.

Vocabulary layout is fixed: PAD=0, BOS=1, EOS=2, UNK=3, data tokens offset
by 4. The configured vocab sizes count these four specials.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn

from ..corpus import CorpusWarning, PhonemeSequence, TokenSequence, UNK_SYMBOL
from ..errors import ValidationError

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
N_SPECIALS = 4

FFN_MULT = 4


@dataclass(frozen=True)
class GeneratorConfig:
    enc_layers: int
    dec_layers: int
    model_dim: int
    embed_dim: int
    heads: int
    dropout: float
    max_len: int
    src_vocab: int
    tgt_vocab: int
    conditional: bool

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ValidationError(
                f"model_dim {self.model_dim} not divisible by heads {self.heads}"
            )
        if self.max_len < 2:
            raise ValidationError(f"max_len must be >= 2, got {self.max_len}")
        if self.tgt_vocab < N_SPECIALS + 1:
            raise ValidationError(
                f"tgt_vocab must include the {N_SPECIALS} specials plus data tokens, "
                f"got {self.tgt_vocab}"
            )
        if self.dec_layers < 1:
            raise ValidationError("dec_layers must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.conditional:
            if self.enc_layers < 1:
                raise ValidationError("conditional models need enc_layers >= 1")
            if self.src_vocab < N_SPECIALS + 1:
                raise ValidationError(
                    f"src_vocab must include the {N_SPECIALS} specials plus data "
                    f"tokens, got {self.src_vocab}"
                )

    @property
    def data_tgt_vocab(self) -> int:
        return self.tgt_vocab - N_SPECIALS


def toy_config(src_vocab: int, tgt_vocab: int, conditional: bool = True) -> GeneratorConfig:
    """Desk-scale default: 2+2 layers, width 64, 4 heads, max_len 256."""
    return GeneratorConfig(
        enc_layers=2,
        dec_layers=2,
        model_dim=64,
        embed_dim=64,
        heads=4,
        dropout=0.1,
        max_len=256,
        src_vocab=src_vocab,
        tgt_vocab=tgt_vocab,
        conditional=conditional,
    )


class MultiHeadAttention(nn.Module):
    def __init__(self, model_dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = model_dim // heads
        self.q_proj = nn.Linear(model_dim, model_dim)
        self.k_proj = nn.Linear(model_dim, model_dim)
        self.v_proj = nn.Linear(model_dim, model_dim)
        self.out_proj = nn.Linear(model_dim, model_dim)

    def forward(
        self,
        query: torch.Tensor,
        keyval: torch.Tensor,
        mask: torch.Tensor | None,
    ) -> torch.Tensor:
        # query: (B, Tq, D), keyval: (B, Tk, D), mask: broadcastable to
        # (B, heads, Tq, Tk) with True marking *blocked* positions.
        b, tq, _ = query.shape
        tk = keyval.shape[1]
        q = self.q_proj(query).view(b, tq, self.heads, self.head_dim).transpose(1, 2)
        k = self.k_proj(keyval).view(b, tk, self.heads, self.head_dim).transpose(1, 2)
        v = self.v_proj(keyval).view(b, tk, self.heads, self.head_dim).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if mask is not None:
            scores = scores.masked_fill(mask, float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, tq, -1)
        return self.out_proj(out)


class FeedForward(nn.Module):
    def __init__(self, model_dim: int, dropout: float):
        super().__init__()
        self.up = nn.Linear(model_dim, FFN_MULT * model_dim)
        self.down = nn.Linear(FFN_MULT * model_dim, model_dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.down(self.dropout(F.gelu(self.up(x))))


class EncoderLayer(nn.Module):
    def __init__(self, model_dim: int, heads: int, dropout: float):
        super().__init__()
        self.self_attn = MultiHeadAttention(model_dim, heads)
        self.ffn = FeedForward(model_dim, dropout)
        self.norm1 = nn.LayerNorm(model_dim)
        self.norm2 = nn.LayerNorm(model_dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor | None) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.dropout(self.self_attn(h, h, pad_mask))
        x = x + self.dropout(self.ffn(self.norm2(x)))
        return x


class DecoderLayer(nn.Module):
    def __init__(self, model_dim: int, heads: int, dropout: float, cross: bool):
        super().__init__()
        self.self_attn = MultiHeadAttention(model_dim, heads)
        self.cross_attn = MultiHeadAttention(model_dim, heads) if cross else None
        self.ffn = FeedForward(model_dim, dropout)
        self.norm1 = nn.LayerNorm(model_dim)
        self.norm_cross = nn.LayerNorm(model_dim) if cross else None
        self.norm2 = nn.LayerNorm(model_dim)
        self.dropout = nn.Dropout(dropout)

    def forward(
        self,
        x: torch.Tensor,
        causal_mask: torch.Tensor,
        memory: torch.Tensor | None,
        memory_mask: torch.Tensor | None,
    ) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.dropout(self.self_attn(h, h, causal_mask))
        if self.cross_attn is not None:
            assert memory is not None
            x = x + self.dropout(
                self.cross_attn(self.norm_cross(x), memory, memory_mask)
            )
        x = x + self.dropout(self.ffn(self.norm2(x)))
        return x


class Embedder(nn.Module):
    """Token + learned absolute position embeddings, projected to model width."""

    def __init__(self, vocab: int, embed_dim: int, model_dim: int, max_len: int, dropout: float):
        super().__init__()
        self.tok = nn.Embedding(vocab, embed_dim)
        self.pos = nn.Embedding(max_len, embed_dim)
        self.proj = nn.Linear(embed_dim, model_dim) if embed_dim != model_dim else None
        self.dropout = nn.Dropout(dropout)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = self.tok(ids) + self.pos(positions)[None, :, :]
        if self.proj is not None:
            x = self.proj(x)
        return self.dropout(x)


class TokenGenerator(nn.Module):
    """The full network; forward returns logits over the target vocabulary."""

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        d, h, p = config.model_dim, config.heads, config.dropout
        if config.conditional:
            self.src_embed = Embedder(config.src_vocab, config.embed_dim, d, config.max_len, p)
            self.encoder = nn.ModuleList(
                EncoderLayer(d, h, p) for _ in range(config.enc_layers)
            )
            self.enc_norm = nn.LayerNorm(d)
        else:
            self.src_embed = None
            self.encoder = None
            self.enc_norm = None
        self.tgt_embed = Embedder(config.tgt_vocab, config.embed_dim, d, config.max_len, p)
        self.decoder = nn.ModuleList(
            DecoderLayer(d, h, p, cross=config.conditional)
            for _ in range(config.dec_layers)
        )
        self.dec_norm = nn.LayerNorm(d)
        self.out_proj = (
            nn.Linear(d, config.embed_dim) if config.embed_dim != d else None
        )
        self.head = nn.Linear(config.embed_dim, config.tgt_vocab)

    def forward(self, src_ids: torch.Tensor | None, tgt_in_ids: torch.Tensor) -> torch.Tensor:
        # src_ids: (B, S) or None for unconditional; tgt_in_ids: (B, T).
        memory = None
        memory_mask = None
        if self.config.conditional:
            assert src_ids is not None
            src_pad = src_ids == PAD_ID  # (B, S)
            enc_mask = src_pad[:, None, None, :]
            x = self.src_embed(src_ids)
            for layer in self.encoder:
                x = layer(x, enc_mask)
            memory = self.enc_norm(x)
            memory_mask = src_pad[:, None, None, :]

        t = tgt_in_ids.shape[1]
        causal = torch.triu(
            torch.ones(t, t, dtype=torch.bool, device=tgt_in_ids.device), diagonal=1
        )
        tgt_pad = tgt_in_ids == PAD_ID
        dec_mask = causal[None, None, :, :] | tgt_pad[:, None, None, :]
        y = self.tgt_embed(tgt_in_ids)
        for layer in self.decoder:
            y = layer(y, dec_mask, memory, memory_mask)
        y = self.dec_norm(y)
        if self.out_proj is not None:
            y = self.out_proj(y)
        return self.head(y)


@dataclass(frozen=True, eq=False)
class GeneratorModel:
    """A network plus the bookkeeping needed to score utterances with it."""

    config: GeneratorConfig
    net: TokenGenerator
    trained_steps: int = 0
    src_inventory: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.src_inventory is not None:
            if UNK_SYMBOL in self.src_inventory:
                raise ValidationError(f"inventory must not contain the reserved {UNK_SYMBOL}")
            expected = len(self.src_inventory) + N_SPECIALS
            if expected != self.config.src_vocab:
                raise ValidationError(
                    f"inventory of {len(self.src_inventory)} symbols implies "
                    f"src_vocab {expected}, config says {self.config.src_vocab}"
                )
        for name, param in self.net.named_parameters():
            if not torch.all(torch.isfinite(param)):
                raise ValidationError(f"parameter {name} contains non-finite values")

    @property
    def dtype(self) -> torch.dtype:
        return next(self.net.parameters()).dtype

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.net.parameters())


def build_model(
    config: GeneratorConfig,
    seed: int,
    src_inventory: Sequence[str] | None = None,
) -> GeneratorModel:
    """Construct a model with seeded, bitwise-reproducible initialization."""
    net = TokenGenerator(config)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, param in net.named_parameters():
            if "norm" in name and name.endswith(".weight"):
                param.fill_(1.0)
            elif name.endswith(".bias"):
                param.zero_()
            else:
                param.normal_(0.0, 0.02, generator=gen)
    net.eval()
    return GeneratorModel(
        config=config,
        net=net,
        trained_steps=0,
        src_inventory=tuple(src_inventory) if src_inventory is not None else None,
    )


# ---------------------------------------------------------------------------
# Sequence encoding
# ---------------------------------------------------------------------------

def encode_source(model: GeneratorModel, phonemes: PhonemeSequence) -> list[int]:
    """Map phoneme symbols to model ids via the stored inventory (UNK fallback)."""
    if model.src_inventory is None:
        raise ValidationError("model has no phoneme inventory; cannot encode source")
    index = {sym: i for i, sym in enumerate(model.src_inventory)}
    mapped = phonemes.mapped_to(model.src_inventory)
    return [
        UNK_ID if sym == UNK_SYMBOL else N_SPECIALS + index[sym]
        for sym in mapped.symbols
    ]


def encode_target(model: GeneratorModel, tokens: TokenSequence) -> tuple[list[int], list[int]]:
    """Return (decoder input ids, target ids): BOS-shifted input, EOS-closed target."""
    if tokens.vocab_size != model.config.data_tgt_vocab:
        raise ValidationError(
            f"token vocab {tokens.vocab_size} does not match model data vocab "
            f"{model.config.data_tgt_vocab}"
        )
    data = [i + N_SPECIALS for i in tokens.ids]
    dec_in = [BOS_ID] + data
    targets = data + [EOS_ID]
    return dec_in, targets


def _truncate(ids: list[int], limit: int, what: str) -> list[int]:
    if len(ids) <= limit:
        return ids
    warnings.warn(
        f"{what} of length {len(ids)} truncated to max_len budget {limit}",
        CorpusWarning,
        stacklevel=3,
    )
    return ids[:limit]


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def _batch_tensors(
    model: GeneratorModel,
    items: Sequence[tuple[PhonemeSequence | None, TokenSequence]],
    truncate: bool,
) -> tuple[torch.Tensor | None, torch.Tensor, torch.Tensor]:
    cfg = model.config
    src_rows: list[list[int]] = []
    dec_rows: list[list[int]] = []
    tgt_rows: list[list[int]] = []
    for phonemes, tokens in items:
        if cfg.conditional:
            if phonemes is None:
                raise ValidationError("conditional model requires a phoneme sequence")
            src = encode_source(model, phonemes)
            if len(src) > cfg.max_len:
                if truncate:
                    src = _truncate(src, cfg.max_len, "source sequence")
                else:
                    raise ValidationError(
                        f"source length {len(src)} exceeds max_len {cfg.max_len}"
                    )
            src_rows.append(src)
        elif phonemes is not None:
            raise ValidationError("unconditional model must not receive phonemes")
        dec_in, targets = encode_target(model, tokens)
        if len(dec_in) > cfg.max_len:
            if truncate:
                data = _truncate(dec_in[1:], cfg.max_len - 1, "target sequence")
                dec_in = [BOS_ID] + data
                targets = data + [EOS_ID]
            else:
                raise ValidationError(
                    f"target length {len(tokens)} exceeds max_len budget "
                    f"{cfg.max_len - 1}"
                )
        dec_rows.append(dec_in)
        tgt_rows.append(targets)

    def pad(rows: list[list[int]]) -> torch.Tensor:
        width = max(len(r) for r in rows)
        out = torch.full((len(rows), width), PAD_ID, dtype=torch.long)
        for i, r in enumerate(rows):
            out[i, : len(r)] = torch.tensor(r, dtype=torch.long)
        return out

    src_t = pad(src_rows) if cfg.conditional else None
    return src_t, pad(dec_rows), pad(tgt_rows)


def score_batch(
    model: GeneratorModel,
    items: Sequence[tuple[PhonemeSequence | None, TokenSequence]],
) -> list[list[float]]:
    """Per-position log-probabilities for a batch of utterances.

    Each inner list covers the data tokens followed by EOS. Dropout is
    disabled and the final log-softmax runs in float64 regardless of model
    precision.
    """
    if not items:
        return []
    src_t, dec_t, tgt_t = _batch_tensors(model, items, truncate=False)
    model.net.eval()
    with torch.no_grad():
        logits = model.net(src_t, dec_t)
        logprobs = F.log_softmax(logits.double(), dim=-1)
        picked = logprobs.gather(-1, tgt_t[:, :, None]).squeeze(-1)
    out: list[list[float]] = []
    for i, (_, tokens) in enumerate(items):
        out.append([float(v) for v in picked[i, : len(tokens) + 1]])
    return out


def token_logprobs(
    model: GeneratorModel,
    phonemes: PhonemeSequence | None,
    tokens: TokenSequence,
) -> list[float]:
    """log p(token_i | tokens_<i, phonemes) for each target position, EOS included."""
    return score_batch(model, [(phonemes, tokens)])[0]


def with_net(model: GeneratorModel, net: TokenGenerator, trained_steps: int) -> GeneratorModel:
    return replace(model, net=net, trained_steps=trained_steps)
