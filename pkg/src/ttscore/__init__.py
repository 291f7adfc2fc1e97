"""Reference-free evaluation of synthesized speech.

TTScore-int and TTScore-pro score an utterance as the mean conditional
log-likelihood of its discrete speech tokens (content tokens from k-means
over frame features; prosody tokens from phoneme-pooled features through
residual vector quantization) given the input phoneme sequence, under
trainable text-to-token generators. The package also ships the baseline
metrics (WER/CER, F0-RMSE, F0 correlation, an unconditional token LM) and
the correlation benchmark harness used to validate the scores.
"""

__version__ = "0.1.0"
