"""Teacher-forced training of token generators.

The loss is cross-entropy of the right-shifted target sequence (BOS
prepended, EOS appended, PAD excluded). Runs are deterministic for a fixed
seed with single-worker execution: the epoch shuffle is a pure function of
(seed, epoch), and pairs are canonicalized by content before the first
shuffle so the result does not depend on input order.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from ..corpus import PhonemeSequence, TokenSequence
from ..errors import NumericError, ValidationError
from .model import (
    PAD_ID,
    GeneratorModel,
    TokenGenerator,
    _batch_tensors,
    with_net,
)

WARMUP_FRACTION = 0.01

Pair = tuple[PhonemeSequence | None, TokenSequence]


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    learning_rate: float = 3e-4
    weight_decay: float = 0.01
    epochs: int = 10
    seed: int = 0
    precision: str = "single"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        if self.precision not in ("single", "double"):
            raise ValidationError(f"precision must be single|double, got {self.precision!r}")

    @property
    def dtype(self) -> torch.dtype:
        return torch.float64 if self.precision == "double" else torch.float32


def teacher_forced_loss(
    net: TokenGenerator,
    src: torch.Tensor | None,
    dec_in: torch.Tensor,
    targets: torch.Tensor,
) -> tuple[torch.Tensor, int]:
    """Mean per-token cross-entropy over non-PAD target positions."""
    logits = net(src, dec_in)
    loss = F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), targets.reshape(-1), ignore_index=PAD_ID
    )
    n_tokens = int((targets != PAD_ID).sum())
    return loss, n_tokens


def _canonical_order(pairs: Sequence[Pair]) -> list[Pair]:
    def key(pair: Pair):
        phonemes, tokens = pair
        return (phonemes.symbols if phonemes is not None else (), tokens.ids)

    return sorted(pairs, key=key)


def _epoch_permutation(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(
    model: GeneratorModel,
    pairs: Sequence[Pair],
    cfg: TrainConfig,
) -> tuple[GeneratorModel, list[float]]:
    """Train a copy of ``model`` on (phonemes, tokens) pairs.

    Returns the trained model and the per-epoch mean token loss trace. The
    input model is left untouched; zero epochs returns an identical copy.
    """
    if not pairs:
        raise ValidationError("empty training corpus")
    net = copy.deepcopy(model.net).to(cfg.dtype)
    net.train()
    torch.manual_seed(cfg.seed)

    ordered = _canonical_order(pairs)
    n = len(ordered)
    steps_per_epoch = math.ceil(n / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.epochs
    warmup_steps = max(1, int(WARMUP_FRACTION * total_steps)) if total_steps else 1

    optimizer = torch.optim.AdamW(
        net.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )

    trace: list[float] = []
    step = 0
    for epoch in range(cfg.epochs):
        perm = _epoch_permutation(n, cfg.seed, epoch)
        epoch_loss = 0.0
        epoch_tokens = 0
        for start in range(0, n, cfg.batch_size):
            batch = [ordered[i] for i in perm[start : start + cfg.batch_size]]
            # Encoding only touches config and inventory, not the weights.
            src, dec_in, targets = _batch_tensors(model, batch, truncate=True)
            step += 1
            lr_scale = min(1.0, step / warmup_steps)
            for group in optimizer.param_groups:
                group["lr"] = cfg.learning_rate * lr_scale
            optimizer.zero_grad()
            loss, n_tokens = teacher_forced_loss(net, src, dec_in, targets)
            if not torch.isfinite(loss):
                raise NumericError(
                    f"non-finite loss {loss.item()} at epoch {epoch}, step {step}; "
                    f"reduce the learning rate or inspect the corpus"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * n_tokens
            epoch_tokens += n_tokens
        trace.append(epoch_loss / max(epoch_tokens, 1))

    net.eval()
    return with_net(model, net, model.trained_steps + step), trace
