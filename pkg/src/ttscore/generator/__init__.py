"""Trainable text-to-token sequence models and their persistence."""

from .checkpoint import load_checkpoint, save_checkpoint
from .model import (
    BOS_ID,
    EOS_ID,
    N_SPECIALS,
    PAD_ID,
    UNK_ID,
    GeneratorConfig,
    GeneratorModel,
    TokenGenerator,
    build_model,
    encode_source,
    encode_target,
    score_batch,
    token_logprobs,
    toy_config,
)
from .train import TrainConfig, teacher_forced_loss, train

__all__ = [
    "BOS_ID",
    "EOS_ID",
    "N_SPECIALS",
    "PAD_ID",
    "UNK_ID",
    "GeneratorConfig",
    "GeneratorModel",
    "TokenGenerator",
    "TrainConfig",
    "build_model",
    "encode_source",
    "encode_target",
    "load_checkpoint",
    "save_checkpoint",
    "score_batch",
    "teacher_forced_loss",
    "token_logprobs",
    "toy_config",
    "train",
]
