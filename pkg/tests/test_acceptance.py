"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``. The discrimination and
perturbation checks drive the real CLI on the seeded synthetic corpus; the
numeric checks compare against independent oracles at their stated
tolerances.
"""

import copy
import json
import math
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
import torch

from ttscore.cli import main
from ttscore.corpus import (
    EvalRecord,
    F0Contour,
    FeatureMatrix,
    PhonemeSequence,
    TokenSequence,
    parse_manifest,
    write_manifest,
)
from ttscore.generator import (
    GeneratorConfig,
    build_model,
    load_checkpoint,
    save_checkpoint,
    score_batch,
    teacher_forced_loss,
    token_logprobs,
)
from ttscore.generator.model import _batch_tensors
from ttscore.metrics import (
    cohens_d,
    distribution_summary,
    error_rate,
    f0_corr,
    levenshtein,
    pearson,
    perturb_flip,
    perturb_inverse,
    spearman,
    system_aggregate,
    word_error_rate,
)
from ttscore.prosody import rvq_fit, rvq_encode, reconstruction_mse
from ttscore.quantizer import kmeans_assign, kmeans_fit, lloyd
from ttscore.scoring import read_results

SEED = 11


def _run(*argv):
    rc = main([str(a) for a in argv])
    assert rc == 0, f"command failed ({rc}): {argv}"


def _passed(name):
    print(f"\nACCEPTANCE PASS: {name}")


# ---------------------------------------------------------------------------
# Shared synthetic corpus + trained generators (criteria 1 and 2)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def workdir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def corpus_dir(workdir) -> Path:
    out = workdir / "corpus"
    _run("synth-corpus", "--out", out, "--train-n", 500, "--eval-n", 100,
         "--seed", SEED)
    return out


@pytest.fixture(scope="module")
def content_generator(workdir, corpus_dir) -> Path:
    ckpt = workdir / "content_gen.ckpt"
    _run("train-gen", "--manifest", corpus_dir / "train.jsonl", "--out", ckpt,
         "--vocab", 39, "--epochs", 12, "--batch-size", 16, "--seed", SEED)
    return ckpt


def test_c01_discrimination_matched_vs_shuffled(workdir, corpus_dir, content_generator):
    """Matched (phonemes, tokens) outscores cross-shuffled phonemes >= 95%."""
    start = time.monotonic()
    matched_out = workdir / "matched.jsonl"
    _run("score", "--metric", "ttscore-int", "--manifest", corpus_dir / "eval.jsonl",
         "--checkpoint", content_generator, "--out", matched_out)

    records = parse_manifest(corpus_dir / "eval.jsonl")
    rotated = [
        EvalRecord(
            utt_id=rec.utt_id, system_id=rec.system_id, text=rec.text,
            phonemes=records[(i + 1) % len(records)].phonemes,
            feature_path=rec.feature_path, token_path=rec.token_path,
            alignment_path=rec.alignment_path,
        )
        for i, rec in enumerate(records)
    ]
    shuffled_manifest = corpus_dir / "eval_shuffled.jsonl"
    write_manifest(rotated, shuffled_manifest)
    shuffled_out = workdir / "shuffled.jsonl"
    _run("score", "--metric", "ttscore-int", "--manifest", shuffled_manifest,
         "--checkpoint", content_generator, "--out", shuffled_out)

    matched = {r.utt_id: r.value for r in read_results(matched_out)}
    shuffled = {r.utt_id: r.value for r in read_results(shuffled_out)}
    assert len(matched) == 100 and len(shuffled) == 100
    wins = sum(1 for u in matched if matched[u] > shuffled[u])
    elapsed = time.monotonic() - start
    assert wins >= 95, f"matched pairs won only {wins}/100"
    assert elapsed < 600, f"scoring stage took {elapsed:.0f}s"
    _passed(f"conditional-likelihood discrimination ({wins}/100 matched wins)")


@pytest.fixture(scope="module")
def prosody_assets(workdir, corpus_dir):
    """Pool + RVQ + prosody generator trained on the original contours."""
    pooled_train = workdir / "pooled_train"
    _run("pool", "--manifest", corpus_dir / "train_prosody.jsonl", "--out-dir", pooled_train)
    rvq = workdir / "rvq.json"
    _run("fit-rvq", "--manifest", pooled_train / "pooled.jsonl", "--stages", 1,
         "--k", 12, "--out", rvq, "--seed", SEED)
    encoded_train = workdir / "train_encoded.jsonl"
    _run("encode-rvq", "--manifest", pooled_train / "pooled.jsonl", "--rvq", rvq,
         "--out-tokens", workdir / "train_pros.tok", "--out-manifest", encoded_train)
    ckpt = workdir / "prosody_gen.ckpt"
    _run("train-gen", "--manifest", encoded_train, "--out", ckpt, "--rvq", rvq,
         "--prosody", "--epochs", 20, "--batch-size", 16, "--lr", "1e-3", "--seed", SEED)
    return {"rvq": rvq, "ckpt": ckpt}


def _score_prosody_variant(workdir, corpus_dir, assets, variant: str) -> dict[str, float]:
    pooled = workdir / f"pooled_eval_{variant}"
    _run("pool", "--manifest", corpus_dir / f"eval_prosody_{variant}.jsonl",
         "--out-dir", pooled)
    encoded = workdir / f"eval_encoded_{variant}.jsonl"
    _run("encode-rvq", "--manifest", pooled / "pooled.jsonl", "--rvq", assets["rvq"],
         "--out-tokens", workdir / f"eval_pros_{variant}.tok", "--out-manifest", encoded)
    out = workdir / f"pro_scores_{variant}.jsonl"
    _run("score", "--metric", "ttscore-pro", "--manifest", encoded,
         "--checkpoint", assets["ckpt"], "--out", out)
    return {r.utt_id: r.value for r in read_results(out)}


def test_c02_prosody_perturbation_shift(workdir, corpus_dir, prosody_assets):
    """Original-pitch scores beat inverse-perturbed with Cohen's d > 0.5."""
    original = _score_prosody_variant(workdir, corpus_dir, prosody_assets, "original")
    inverse = _score_prosody_variant(workdir, corpus_dir, prosody_assets, "inverse")
    assert len(original) == 100 and len(inverse) == 100
    orig_vals = list(original.values())
    inv_vals = list(inverse.values())
    mean_diff = float(np.mean(orig_vals) - np.mean(inv_vals))
    d = cohens_d(orig_vals, inv_vals)
    assert mean_diff > 0, f"mean shift not positive: {mean_diff}"
    assert d > 0.5, f"Cohen's d too small: {d}"
    _passed(f"prosody perturbation shift (mean diff {mean_diff:.3f}, d {d:.2f})")


# ---------------------------------------------------------------------------
# Gradient check (criterion 3)
# ---------------------------------------------------------------------------

def test_c03_gradient_check():
    """Autograd vs central differences, double precision, <= 1k parameters."""
    start = time.monotonic()
    cfg = GeneratorConfig(
        enc_layers=1, dec_layers=1, model_dim=4, embed_dim=4, heads=1,
        dropout=0.0, max_len=8, src_vocab=8, tgt_vocab=8, conditional=True,
    )
    model = build_model(cfg, seed=SEED, src_inventory=("p0", "p1", "p2", "p3"))
    n_params = model.parameter_count()
    assert n_params <= 1000
    net = copy.deepcopy(model.net).to(torch.float64)
    net.eval()
    pairs = [
        (PhonemeSequence(("p0", "p1", "p2")), TokenSequence((1, 2, 3), 4)),
        (PhonemeSequence(("p3", "p2")), TokenSequence((0, 1), 4)),
    ]
    src, dec_in, tgt = _batch_tensors(model, pairs, truncate=False)
    loss, _ = teacher_forced_loss(net, src, dec_in, tgt)
    net.zero_grad()
    loss.backward()
    h = 1e-5
    worst = 0.0
    with torch.no_grad():
        for param in net.parameters():
            flat, grad = param.view(-1), param.grad.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + h
                up, _ = teacher_forced_loss(net, src, dec_in, tgt)
                flat[i] = orig - h
                down, _ = teacher_forced_loss(net, src, dec_in, tgt)
                flat[i] = orig
                fd = (up.item() - down.item()) / (2 * h)
                a = grad[i].item()
                worst = max(worst, abs(a - fd) / max(abs(a), abs(fd), 1e-6))
    elapsed = time.monotonic() - start
    assert worst < 1e-3, f"worst relative gradient error {worst:.2e}"
    assert elapsed < 60, f"gradient check took {elapsed:.1f}s"
    _passed(f"gradient check ({n_params} params, worst rel err {worst:.1e})")


# ---------------------------------------------------------------------------
# Clustering oracle (criterion 4)
# ---------------------------------------------------------------------------

def test_c04_clustering_oracle():
    points = np.array(
        [[0, 0], [0, 1], [1, 0], [1, 1], [10, 10], [10, 11], [11, 10], [11, 11]],
        dtype=np.float32,
    )
    pts64 = points.astype(np.float64)
    best = np.inf
    for bits in range(1, 2**8 - 1):
        labels = np.array([(bits >> i) & 1 for i in range(8)], dtype=bool)
        sse = 0.0
        for side in (labels, ~labels):
            centroid = pts64[side].mean(axis=0)
            diff = pts64[side] - centroid
            sse += float(np.einsum("nd,nd->", diff, diff))
        best = min(best, sse)
    cb = kmeans_fit([FeatureMatrix(points)], k=2, seed=SEED)
    assert cb.inertia == best, f"{cb.inertia} != exhaustive optimum {best}"

    rng = np.random.default_rng(SEED)
    for _ in range(100):
        pts = rng.normal(size=(int(rng.integers(20, 60)), int(rng.integers(2, 5))))
        k = int(rng.integers(2, 7))
        init = pts[rng.choice(pts.shape[0], size=k, replace=False)]
        _, _, trace = lloyd(pts, init, max_iters=40, tol=0.0)
        assert all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(trace, trace[1:]))
    _passed("clustering oracle (exact 2-partition optimum, 100 monotone traces)")


# ---------------------------------------------------------------------------
# RVQ properties (criterion 5)
# ---------------------------------------------------------------------------

def test_c05_rvq_properties():
    rng = np.random.default_rng(SEED)
    for trial in range(50):
        rows = rng.normal(size=(int(rng.integers(30, 70)), int(rng.integers(2, 6))))
        data = [FeatureMatrix(rows.astype(np.float32))]
        seed = int(rng.integers(0, 10_000))
        single = rvq_fit(data, stages=1, k_per_stage=5, seed=seed)
        plain = kmeans_fit(data, k=5, seed=seed)
        assert np.array_equal(single.stage_centroids[0], plain.centroids)
        assert rvq_encode(data[0], single).stages[0].ids == kmeans_assign(data[0], plain).ids
        errors = [
            reconstruction_mse(data, rvq_fit(data, stages=s, k_per_stage=5, seed=seed))
            for s in (1, 2, 3)
        ]
        assert errors[0] >= errors[1] - 1e-12 and errors[1] >= errors[2] - 1e-12, errors
    _passed("RVQ properties (stage-1 degeneracy, MSE monotone over 50 datasets)")


# ---------------------------------------------------------------------------
# Statistics oracles (criterion 6)
# ---------------------------------------------------------------------------

def _pearson_oracle(xs, ys):
    n = len(xs)
    mx, my = math.fsum(xs) / n, math.fsum(ys) / n
    cov = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = math.fsum((x - mx) ** 2 for x in xs)
    vy = math.fsum((y - my) ** 2 for y in ys)
    return cov / math.sqrt(vx * vy)


def _ranks_oracle(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for idx in order[i : j + 1]:
            ranks[idx] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _quantile_oracle(sorted_vals, q):
    # Linear interpolation between order statistics (inclusive endpoints).
    pos = q * (len(sorted_vals) - 1)
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    frac = pos - lo
    return sorted_vals[lo] * (1 - frac) + sorted_vals[hi] * frac


def test_c06_statistics_oracles():
    rng = np.random.default_rng(SEED)
    for _ in range(1000):
        n = int(rng.integers(3, 20))
        xs = rng.normal(size=n).tolist()
        ys = rng.normal(size=n).tolist()
        assert abs(pearson(xs, ys) - _pearson_oracle(xs, ys)) < 1e-10

    for _ in range(1000):
        n = int(rng.integers(3, 20))
        xs = rng.integers(0, 6, size=n).astype(float).tolist()  # ties likely
        ys = rng.normal(size=n).tolist()
        if len(set(xs)) < 2:
            continue
        expected = _pearson_oracle(_ranks_oracle(xs), _ranks_oracle(ys))
        assert abs(spearman(xs, ys) - expected) < 1e-10

    # Hand-ranked tie example.
    assert abs(spearman([1, 2, 2, 3], [10, 20, 20, 30]) - 1.0) < 1e-12

    for _ in range(1000):
        n_sys = int(rng.integers(1, 6))
        rows = []
        expected = {}
        for s in range(n_sys):
            vals = rng.normal(size=int(rng.integers(1, 8))).tolist()
            expected[f"s{s}"] = math.fsum(vals) / len(vals)
            rows.extend((f"s{s}", v) for v in vals)
        got = system_aggregate(rows)
        assert [sid for sid, _ in got] == sorted(expected)
        for sid, mean in got:
            assert abs(mean - expected[sid]) < 1e-10

    for _ in range(1000):
        groups = {}
        rows = []
        for g in range(int(rng.integers(2, 4))):
            vals = rng.normal(size=int(rng.integers(2, 12))).tolist()
            groups[f"g{g}"] = vals
            rows.extend((f"g{g}", v) for v in vals)
        bins = int(rng.integers(1, 8))
        summaries, shifts = distribution_summary(rows, bins=bins)
        everything = [v for vals in groups.values() for v in vals]
        lo, hi = min(everything), max(everything)
        for s in summaries:
            vals = groups[s.group]
            n = len(vals)
            mean = math.fsum(vals) / n
            var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
            assert abs(s.mean - mean) < 1e-10
            assert abs(s.std - math.sqrt(var)) < 1e-10
            sv = sorted(vals)
            for q, got_q in zip((0.0, 0.25, 0.5, 0.75, 1.0), s.quantiles):
                assert abs(got_q - _quantile_oracle(sv, q)) < 1e-10
            # Histogram oracle: edges span [lo, hi] uniformly (within the
            # numeric tolerance), and an independent bin walk over the
            # reported edges reproduces the counts exactly.
            edges = list(s.hist_edges)
            assert abs(edges[0] - lo) < 1e-10 and abs(edges[-1] - hi) < 1e-10
            width = (hi - lo) / bins
            for i in range(bins + 1):
                assert abs(edges[i] - (lo + width * i)) < 1e-10 + 1e-12 * abs(hi)
            counts = [0] * bins
            for v in vals:
                for b in range(bins):
                    last = b == bins - 1
                    if edges[b] <= v < edges[b + 1] or (last and v >= edges[b]):
                        counts[b] += 1
                        break
            assert sum(s.hist_counts) == n
            assert list(s.hist_counts) == counts
        for sh in shifts:
            a, b = groups[sh.group_a], groups[sh.group_b]
            ma, mb = math.fsum(a) / len(a), math.fsum(b) / len(b)
            assert abs(sh.mean_diff - (ma - mb)) < 1e-10
    _passed("statistics oracles (1000 random instances per function, 1e-10)")


# ---------------------------------------------------------------------------
# Edit distance (criterion 7)
# ---------------------------------------------------------------------------

def _dp_matrix_oracle(a, b):
    """Quadratic DP with a full (len+1)^2 matrix, independent of the two-row
    implementation under test."""
    rows, cols = len(a) + 1, len(b) + 1
    dp = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        dp[i][0] = i
    for j in range(cols):
        dp[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            dp[i][j] = min(
                dp[i - 1][j] + 1,
                dp[i][j - 1] + 1,
                dp[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return dp[-1][-1]


def test_c07_edit_distance():
    assert levenshtein(list("kitten"), list("sitting")) == 3
    assert word_error_rate("a b c d", "a b x d") == 0.25
    rng = np.random.default_rng(SEED)
    alphabet = "abcde"
    for _ in range(200):
        a = [alphabet[i] for i in rng.integers(0, 5, size=int(rng.integers(1, 12)))]
        b = [alphabet[i] for i in rng.integers(0, 5, size=int(rng.integers(0, 12)))]
        assert levenshtein(a, b) == _dp_matrix_oracle(a, b)
        assert error_rate(a, b) == _dp_matrix_oracle(a, b) / len(a)
    _passed("edit distance (kitten/sitting, 200 random pairs exact)")


# ---------------------------------------------------------------------------
# Scoring identities (criterion 8)
# ---------------------------------------------------------------------------

def _zeroed_conditional(tgt_vocab: int):
    cfg = GeneratorConfig(
        enc_layers=1, dec_layers=1, model_dim=8, embed_dim=8, heads=2,
        dropout=0.0, max_len=32, src_vocab=9, tgt_vocab=tgt_vocab, conditional=True,
    )
    model = build_model(cfg, seed=SEED, src_inventory=tuple(f"p{i}" for i in range(5)))
    with torch.no_grad():
        for p in model.net.parameters():
            p.zero_()
    return model


def test_c08_scoring_identities(tmp_path):
    rng = np.random.default_rng(SEED)
    for vocab in (10, 54, 504):
        model = _zeroed_conditional(vocab)
        data_vocab = vocab - 4
        ids = tuple(int(i) for i in rng.integers(0, data_vocab, size=6))
        lps = token_logprobs(model, PhonemeSequence(("p0", "p2")), TokenSequence(ids, data_vocab))
        for lp in lps:
            assert abs(lp - (-math.log(vocab))) < 1e-6, (vocab, lp)

    inv = tuple(f"p{i}" for i in range(5))
    cfg = GeneratorConfig(
        enc_layers=1, dec_layers=1, model_dim=8, embed_dim=8, heads=2,
        dropout=0.0, max_len=32, src_vocab=9, tgt_vocab=10, conditional=True,
    )
    model = build_model(cfg, seed=SEED + 1, src_inventory=inv)
    items = []
    for _ in range(6):
        n = int(rng.integers(2, 9))
        items.append(
            (
                PhonemeSequence(tuple(f"p{i}" for i in rng.integers(0, 5, size=n))),
                TokenSequence(tuple(int(t) for t in rng.integers(0, 6, size=n)), 6),
            )
        )
    batched = score_batch(model, items)
    for item, from_batch in zip(items, batched):
        single = token_logprobs(model, item[0], item[1])
        for a, b in zip(single, from_batch):
            assert abs(a - b) < 1e-6

    ckpt = tmp_path / "ident.ckpt"
    save_checkpoint(model, ckpt)
    loaded = load_checkpoint(ckpt)
    for item in items:
        assert token_logprobs(loaded, *item) == token_logprobs(model, *item)
    _passed("scoring identities (-ln V for V in {10,54,504}; batch; checkpoint)")


# ---------------------------------------------------------------------------
# F0 transforms (criterion 9)
# ---------------------------------------------------------------------------

def test_c09_f0_transforms():
    rng = np.random.default_rng(SEED)
    for _ in range(100):
        n = int(rng.integers(4, 60))
        vals = rng.uniform(100, 280, size=n)
        vals[rng.random(n) < 0.25] = 0.0
        if not (vals > 0).any():
            vals[0] = 150.0
        contour = F0Contour(vals)

        flipped_twice = perturb_flip(perturb_flip(contour))
        assert np.array_equal(flipped_twice.values, contour.values)

        inv = perturb_inverse(contour)
        mask = contour.voiced_mask
        assert abs(inv.values[mask].mean() - contour.values[mask].mean()) < 1e-9
        assert np.array_equal(inv.values[~mask], contour.values[~mask])

    vals = np.asarray(np.random.default_rng(SEED + 1).uniform(120, 260, size=80))
    contour = F0Contour(vals)
    assert abs(f0_corr(contour, perturb_inverse(contour)) - (-1.0)) < 1e-9
    _passed("F0 transforms (flip involution, inverse mean preservation, corr -1)")


# ---------------------------------------------------------------------------
# End-to-end determinism (criterion 10)
# ---------------------------------------------------------------------------

def _full_pipeline(root: Path) -> dict[str, bytes]:
    corpus_dir = root / "corpus"
    _run("synth-corpus", "--out", corpus_dir, "--train-n", 60, "--eval-n", 30,
         "--systems", 4, "--seed", SEED)
    cb = root / "kmeans.json"
    _run("fit-kmeans", "--manifest", corpus_dir / "train.jsonl", "--k", 12,
         "--out", cb, "--seed", SEED)
    train_tok = root / "train_kmeans.tok"
    train_manifest = root / "train_tokenized.jsonl"
    _run("tokenize", "--manifest", corpus_dir / "train.jsonl", "--codebook", cb,
         "--out-tokens", train_tok, "--out-manifest", train_manifest)
    eval_tok = root / "eval_kmeans.tok"
    eval_manifest = root / "eval_tokenized.jsonl"
    _run("tokenize", "--manifest", corpus_dir / "eval.jsonl", "--codebook", cb,
         "--out-tokens", eval_tok, "--out-manifest", eval_manifest)
    gen = root / "gen.ckpt"
    _run("train-gen", "--manifest", train_manifest, "--out", gen, "--codebook", cb,
         "--epochs", 3, "--enc-layers", 1, "--dec-layers", 1, "--model-dim", 32,
         "--embed-dim", 32, "--heads", 2, "--seed", SEED, "--batch-size", 8)
    scores = root / "scores.jsonl"
    _run("score", "--metric", "ttscore-int", "--manifest", eval_manifest,
         "--checkpoint", gen, "--out", scores, "--workers", 1)

    pooled_train = root / "pooled_train"
    _run("pool", "--manifest", corpus_dir / "train_prosody.jsonl", "--out-dir", pooled_train)
    rvq = root / "rvq.json"
    _run("fit-rvq", "--manifest", pooled_train / "pooled.jsonl", "--stages", 1,
         "--k", 8, "--out", rvq, "--seed", SEED)
    encoded_train = root / "train_encoded.jsonl"
    _run("encode-rvq", "--manifest", pooled_train / "pooled.jsonl", "--rvq", rvq,
         "--out-tokens", root / "train_pros.tok", "--out-manifest", encoded_train)
    pro_gen = root / "pro.ckpt"
    _run("train-gen", "--manifest", encoded_train, "--out", pro_gen, "--rvq", rvq,
         "--prosody", "--epochs", 3, "--enc-layers", 1, "--dec-layers", 1,
         "--model-dim", 32, "--embed-dim", 32, "--heads", 2, "--seed", SEED,
         "--batch-size", 8)
    pooled_eval = root / "pooled_eval"
    _run("pool", "--manifest", corpus_dir / "eval_prosody_original.jsonl",
         "--out-dir", pooled_eval)
    encoded_eval = root / "eval_encoded.jsonl"
    _run("encode-rvq", "--manifest", pooled_eval / "pooled.jsonl", "--rvq", rvq,
         "--out-tokens", root / "eval_pros.tok", "--out-manifest", encoded_eval)
    pro_scores = root / "pro_scores.jsonl"
    _run("score", "--metric", "ttscore-pro", "--manifest", encoded_eval,
         "--checkpoint", pro_gen, "--out", pro_scores, "--workers", 1)

    wer_out = root / "wer.jsonl"
    _run("wer", "--manifest", corpus_dir / "eval.jsonl",
         "--hyp", corpus_dir / "eval_hyps.jsonl", "--out", wer_out)
    report = root / "report.jsonl"
    _run("correlate", "--scores", scores, wer_out, "--manifest", corpus_dir / "eval.jsonl",
         "--pairs", "ttscore_int:mos,ttscore_int:wer", "--out", report)
    dist = root / "dist.jsonl"
    _run("distributions", "--scores", scores, "--bins", 8, "--out", dist)

    return {
        name: (root / name).read_bytes()
        for name in ("scores.jsonl", "pro_scores.jsonl", "wer.jsonl",
                     "report.jsonl", "dist.jsonl", "train_kmeans.tok")
    }


def test_c10_end_to_end_determinism(tmp_path_factory):
    run_a = _full_pipeline(tmp_path_factory.mktemp("e2e_a"))
    run_b = _full_pipeline(tmp_path_factory.mktemp("e2e_b"))
    assert run_a.keys() == run_b.keys()
    for name in run_a:
        assert run_a[name] == run_b[name], f"{name} differs between identical runs"
    _passed("end-to-end determinism (byte-identical artifacts across reruns)")
