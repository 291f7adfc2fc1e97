"""Command-line driver wiring the pipeline stages together.

Option precedence is command line > config file (``--config``, JSON) >
environment (``TTSCORE_<OPTION>``) > built-in default. All randomness flows
from the single ``--seed`` option of each command. Artifact-producing
commands write a ``<output>.run.json`` manifest with the resolved options so
any run can be reproduced.

Exit codes: 0 success, 2 usage, 3 validation failure, 4 I/O or format
failure, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, corpus, metrics, prosody, quantizer, scoring, synth
from .errors import FormatError, NumericError, TTScoreError, ValidationError
from .generator import (
    GeneratorConfig,
    TrainConfig,
    build_model,
    load_checkpoint,
    save_checkpoint,
    train,
)

ENV_PREFIX = "TTSCORE_"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_NUMERIC = 5


def _cast_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"cannot interpret {raw!r} as a boolean")


class Resolver:
    """Fills unset CLI options from config file, environment, then defaults."""

    def __init__(self, args: argparse.Namespace, command: str):
        self.args = args
        self.command = command
        self.config: dict = {}
        self.resolved: dict = {}
        if getattr(args, "config", None):
            try:
                self.config = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except OSError as exc:
                raise FormatError(f"cannot read config file {args.config}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid config file {args.config}: {exc}") from exc
            if not isinstance(self.config, dict):
                raise FormatError(f"config file {args.config} must hold a JSON object")
        if hasattr(args, "seed"):
            # Recorded in every run manifest even when a command is
            # deterministic without it.
            self.get("seed", 0, int)

    def get(self, name: str, default, cast=str):
        cli_value = getattr(self.args, name, None)
        if cli_value is not None:
            value = cli_value
        else:
            value = None
            scoped = self.config.get(self.command)
            if isinstance(scoped, dict) and name in scoped:
                value = scoped[name]
            elif name in self.config and not isinstance(self.config[name], dict):
                value = self.config[name]
            if value is None:
                env_key = ENV_PREFIX + name.upper()
                if env_key in os.environ:
                    value = os.environ[env_key]
            if value is None:
                value = default
        if value is not None and cast is not None:
            value = _cast_bool(value) if cast is bool else cast(value)
        self.resolved[name] = value
        return value


def _write_run_manifest(primary_output: Path, command: str, inputs: dict, options: dict) -> None:
    target = (
        primary_output / "run.json"
        if primary_output.is_dir()
        else primary_output.with_name(primary_output.name + ".run.json")
    )
    payload = {
        "command": command,
        "toolkit_version": __version__,
        "inputs": inputs,
        "options": options,
    }
    target.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _rebase(ref: str | None, src_dir: Path, dst_dir: Path) -> str | None:
    if ref is None:
        return None
    return os.path.relpath(corpus.resolve_path(src_dir, ref), dst_dir)


def _rebase_record(rec: corpus.EvalRecord, src_dir: Path, dst_dir: Path) -> corpus.EvalRecord:
    return corpus.with_paths(
        rec,
        phoneme_path=_rebase(rec.phoneme_path, src_dir, dst_dir),
        feature_path=_rebase(rec.feature_path, src_dir, dst_dir),
        token_path=_rebase(rec.token_path, src_dir, dst_dir),
        prosody_token_path=_rebase(rec.prosody_token_path, src_dir, dst_dir),
        alignment_path=_rebase(rec.alignment_path, src_dir, dst_dir),
        f0_path=_rebase(rec.f0_path, src_dir, dst_dir),
    )


def _load_manifest(path: str) -> tuple[list[corpus.EvalRecord], Path]:
    records = corpus.parse_manifest(path)
    return records, Path(path).parent


def _record_features(rec: corpus.EvalRecord, base: Path) -> corpus.FeatureMatrix:
    if rec.feature_path is None:
        raise ValidationError(f"record {rec.utt_id} has no feature_path")
    return corpus.read_features(corpus.resolve_path(base, rec.feature_path))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth_corpus(args: argparse.Namespace) -> int:
    res = Resolver(args, "synth-corpus")
    out_dir = Path(res.get("out", None))
    cfg = synth.SynthConfig(
        seed=res.get("seed", 0, int),
        train_n=res.get("train_n", 500, int),
        eval_n=res.get("eval_n", 100, int),
        n_systems=res.get("systems", 8, int),
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    info = synth.generate_corpus(cfg, out_dir)
    _write_run_manifest(out_dir, "synth-corpus", {}, res.resolved)
    print(f"wrote synthetic corpus ({info['train_n']} train / {info['eval_n']} eval) to {out_dir}")
    return EXIT_OK


def cmd_fit_kmeans(args: argparse.Namespace) -> int:
    res = Resolver(args, "fit-kmeans")
    records, base = _load_manifest(res.get("manifest", None))
    k = res.get("k", None, int)
    out = Path(res.get("out", None))
    features = [_record_features(rec, base) for rec in records]
    codebook = quantizer.kmeans_fit(
        features,
        k=k,
        max_iters=res.get("max_iters", quantizer.DEFAULT_MAX_ITERS, int),
        tol=res.get("tol", quantizer.DEFAULT_TOL, float),
        seed=res.get("seed", 0, int),
        max_frames=res.get("max_frames", None, int),
    )
    quantizer.write_codebook(codebook, out)
    _write_run_manifest(out, "fit-kmeans", {"manifest": str(args.manifest)}, res.resolved)
    print(f"fit k={codebook.k} codebook on {len(features)} utterances, inertia {codebook.inertia:.6g}")
    return EXIT_OK


def cmd_tokenize(args: argparse.Namespace) -> int:
    res = Resolver(args, "tokenize")
    records, base = _load_manifest(res.get("manifest", None))
    codebook = quantizer.read_codebook(res.get("codebook", None))
    out_tokens = Path(res.get("out_tokens", None))
    sequences = {}
    for rec in records:
        feats = _record_features(rec, base)
        sequences[rec.utt_id] = quantizer.kmeans_assign(feats, codebook)
    corpus.write_tokens(sequences, out_tokens)
    out_manifest = res.get("out_manifest", None)
    if out_manifest:
        dst = Path(out_manifest)
        updated = [
            corpus.with_paths(
                _rebase_record(rec, base, dst.parent),
                token_path=os.path.relpath(out_tokens, dst.parent),
            )
            for rec in records
        ]
        corpus.write_manifest(updated, dst)
    _write_run_manifest(out_tokens, "tokenize", {"manifest": str(args.manifest)}, res.resolved)
    print(f"tokenized {len(sequences)} utterances with k={codebook.k}")
    return EXIT_OK


def cmd_pool(args: argparse.Namespace) -> int:
    res = Resolver(args, "pool")
    records, base = _load_manifest(res.get("manifest", None))
    out_dir = Path(res.get("out_dir", None))
    mode = res.get("mode", "mean")
    out_dir.mkdir(parents=True, exist_ok=True)
    updated = []
    for rec in records:
        feats = _record_features(rec, base)
        if rec.alignment_path is None:
            raise ValidationError(f"record {rec.utt_id} has no alignment_path")
        phonemes = rec.phoneme_sequence()
        segments = corpus.read_alignment(
            corpus.resolve_path(base, rec.alignment_path), rec.utt_id, phonemes, feats.frames
        )
        pooled = prosody.pool_phoneme(feats, segments, mode=mode)
        ref = f"{rec.utt_id}.ttsf"
        corpus.write_features(pooled, out_dir / ref)
        # Frame-level alignment and F0 references no longer describe the
        # pooled (phoneme-level) matrix; drop them from the output view.
        updated.append(
            corpus.with_paths(
                _rebase_record(rec, base, out_dir),
                feature_path=ref,
                alignment_path=None,
                f0_path=None,
            )
        )
    out_manifest = Path(res.get("out_manifest", None) or out_dir / "pooled.jsonl")
    corpus.write_manifest(updated, out_manifest)
    _write_run_manifest(out_dir, "pool", {"manifest": str(args.manifest)}, res.resolved)
    print(f"pooled {len(updated)} utterances into {out_dir} ({mode})")
    return EXIT_OK


def cmd_fit_rvq(args: argparse.Namespace) -> int:
    res = Resolver(args, "fit-rvq")
    records, base = _load_manifest(res.get("manifest", None))
    out = Path(res.get("out", None))
    pooled = [_record_features(rec, base) for rec in records]
    codebook = prosody.rvq_fit(
        pooled,
        stages=res.get("stages", 1, int),
        k_per_stage=res.get("k", None, int),
        seed=res.get("seed", 0, int),
    )
    prosody.write_rvq(codebook, out)
    mse = prosody.reconstruction_mse(pooled, codebook)
    _write_run_manifest(out, "fit-rvq", {"manifest": str(args.manifest)}, res.resolved)
    print(
        f"fit RVQ ({codebook.stages} stage(s), k={codebook.k_per_stage}) on "
        f"{len(pooled)} utterances, reconstruction MSE {mse:.6g}"
    )
    return EXIT_OK


def cmd_encode_rvq(args: argparse.Namespace) -> int:
    res = Resolver(args, "encode-rvq")
    records, base = _load_manifest(res.get("manifest", None))
    codebook = prosody.read_rvq(res.get("rvq", None))
    out_base = Path(res.get("out_tokens", None))
    per_stage: list[dict[str, corpus.TokenSequence]] = [dict() for _ in range(codebook.stages)]
    for rec in records:
        feats = _record_features(rec, base)
        stacked = prosody.rvq_encode(feats, codebook)
        for s, seq in enumerate(stacked.stages):
            per_stage[s][rec.utt_id] = seq
    stage_files = []
    for s, table in enumerate(per_stage):
        stage_file = prosody.stage_token_path(out_base, s)
        corpus.write_tokens(table, stage_file)
        stage_files.append(stage_file)
    out_manifest = res.get("out_manifest", None)
    if out_manifest:
        dst = Path(out_manifest)
        updated = [
            corpus.with_paths(
                _rebase_record(rec, base, dst.parent),
                prosody_token_path=os.path.relpath(stage_files[0], dst.parent),
            )
            for rec in records
        ]
        corpus.write_manifest(updated, dst)
    _write_run_manifest(stage_files[0], "encode-rvq", {"manifest": str(args.manifest)}, res.resolved)
    print(f"encoded {len(records)} utterances into {codebook.stages} stage file(s)")
    return EXIT_OK


def _collect_inventory(records: list[corpus.EvalRecord]) -> tuple[str, ...]:
    symbols: set[str] = set()
    for rec in records:
        if rec.phonemes:
            symbols.update(rec.phonemes)
    symbols.discard(corpus.UNK_SYMBOL)
    if not symbols:
        raise ValidationError("no inline phonemes in manifest; cannot build an inventory")
    return tuple(sorted(symbols))


def _data_vocab(res: Resolver) -> int:
    vocab = res.get("vocab", None, int)
    codebook_path = res.get("codebook", None)
    rvq_path = res.get("rvq", None)
    given = [x for x in (vocab, codebook_path, rvq_path) if x is not None]
    if len(given) != 1:
        raise ValidationError("specify exactly one of --vocab, --codebook, --rvq")
    if vocab is not None:
        return vocab
    if codebook_path is not None:
        return quantizer.read_codebook(codebook_path).k
    return prosody.read_rvq(rvq_path).k_per_stage


def cmd_train_gen(args: argparse.Namespace) -> int:
    res = Resolver(args, "train-gen")
    records, base = _load_manifest(res.get("manifest", None))
    out = Path(res.get("out", None))
    unconditional = res.get("unconditional", False, bool)
    use_prosody_tokens = res.get("prosody", False, bool)
    data_vocab = _data_vocab(res)
    seed = res.get("seed", 0, int)

    token_field = "prosody_token_path" if use_prosody_tokens else "token_path"
    token_cache: dict[str, dict[str, corpus.TokenSequence]] = {}
    pairs = []
    for rec in records:
        ref = getattr(rec, token_field)
        if ref is None:
            raise ValidationError(f"record {rec.utt_id} has no {token_field}")
        if ref not in token_cache:
            token_cache[ref] = corpus.read_tokens(corpus.resolve_path(base, ref), data_vocab)
        if rec.utt_id not in token_cache[ref]:
            raise ValidationError(f"{ref}: no token line for utterance {rec.utt_id}")
        tokens = token_cache[ref][rec.utt_id]
        phonemes = None if unconditional else rec.phoneme_sequence()
        pairs.append((phonemes, tokens))

    inventory = None if unconditional else _collect_inventory(records)
    config = GeneratorConfig(
        enc_layers=0 if unconditional else res.get("enc_layers", 2, int),
        dec_layers=res.get("dec_layers", 2, int),
        model_dim=res.get("model_dim", 64, int),
        embed_dim=res.get("embed_dim", 64, int),
        heads=res.get("heads", 4, int),
        dropout=res.get("dropout", 0.1, float),
        max_len=res.get("max_len", 256, int),
        src_vocab=0 if unconditional else len(inventory) + 4,
        tgt_vocab=data_vocab + 4,
        conditional=not unconditional,
    )
    model = build_model(config, seed=seed, src_inventory=inventory)
    tcfg = TrainConfig(
        batch_size=res.get("batch_size", 8, int),
        learning_rate=res.get("lr", 3e-4, float),
        weight_decay=res.get("weight_decay", 0.01, float),
        epochs=res.get("epochs", 10, int),
        seed=seed,
        precision=res.get("precision", "single"),
    )
    trained, trace = train(model, pairs, tcfg)
    save_checkpoint(trained, out)
    options = dict(res.resolved)
    options["final_epoch_loss"] = trace[-1] if trace else None
    _write_run_manifest(out, "train-gen", {"manifest": str(args.manifest)}, options)
    kind = "unconditional" if unconditional else "conditional"
    final = f"{trace[-1]:.4f}" if trace else "n/a"
    print(
        f"trained {kind} generator on {len(pairs)} pairs for {tcfg.epochs} epoch(s); "
        f"final mean token loss {final}"
    )
    return EXIT_OK


_METRIC_NAMES = {"ttscore-int": "ttscore_int", "ttscore-pro": "ttscore_pro", "ulm": "ulm_score"}


def cmd_score(args: argparse.Namespace) -> int:
    res = Resolver(args, "score")
    metric_flag = res.get("metric", None)
    if metric_flag not in _METRIC_NAMES:
        raise ValidationError(f"--metric must be one of {sorted(_METRIC_NAMES)}")
    metric = _METRIC_NAMES[metric_flag]
    records, base = _load_manifest(res.get("manifest", None))
    model = load_checkpoint(res.get("checkpoint", None))
    out = Path(res.get("out", None))
    batch_size = res.get("batch_size", 32, int)
    workers = res.get("workers", 1, int)
    mismatch = res.get("on_length_mismatch", "reject")

    if workers <= 1 or len(records) < 2:
        results = scoring.batch_score(
            records, metric, model, base_dir=base, batch_size=batch_size,
            on_length_mismatch=mismatch,
        )
    else:
        chunk_size = max(1, (len(records) + workers - 1) // workers)
        chunks = [records[i : i + chunk_size] for i in range(0, len(records), chunk_size)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda chunk: scoring.batch_score(
                        chunk, metric, model, base_dir=base, batch_size=batch_size,
                        on_length_mismatch=mismatch,
                    ),
                    chunks,
                )
            )
        results = [r for part in parts for r in part]

    scoring.write_results(results, out, append=res.get("append", False, bool))
    _write_run_manifest(out, "score", {"manifest": str(args.manifest)}, res.resolved)
    skipped = len(records) - len(results)
    note = f" ({skipped} skipped)" if skipped else ""
    print(f"scored {len(results)} utterances with {metric}{note}")
    return EXIT_OK


def _read_hyps(path: str | Path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out[str(obj["utt_id"])] = str(obj["text"])
        except (json.JSONDecodeError, KeyError) as exc:
            raise FormatError(f"{path}:{lineno}: malformed hypothesis record: {exc}") from exc
    return out


def cmd_wer(args: argparse.Namespace) -> int:
    res = Resolver(args, "wer")
    records, _ = _load_manifest(res.get("manifest", None))
    hyps = _read_hyps(res.get("hyp", None))
    level = res.get("level", "word")
    if level not in ("word", "char"):
        raise ValidationError(f"--level must be word or char, got {level!r}")
    out = Path(res.get("out", None))
    rate = metrics.word_error_rate if level == "word" else metrics.char_error_rate
    name = "wer" if level == "word" else "cer"
    values = []
    for rec in records:
        if rec.utt_id not in hyps:
            warnings.warn(
                f"no hypothesis for utterance {rec.utt_id}; skipped",
                corpus.CorpusWarning, stacklevel=2,
            )
            continue
        if not rec.text:
            raise ValidationError(f"record {rec.utt_id} has no reference text")
        values.append(
            metrics.MetricValue(rec.utt_id, rec.system_id, name, rate(rec.text, hyps[rec.utt_id]))
        )
    metrics.write_metric_values(values, out)
    _write_run_manifest(out, "wer", {"manifest": str(args.manifest)}, res.resolved)
    print(f"computed {name} for {len(values)} utterances")
    return EXIT_OK


def cmd_f0_metrics(args: argparse.Namespace) -> int:
    res = Resolver(args, "f0-metrics")
    refs = corpus.read_f0(res.get("ref", None))
    hyps = corpus.read_f0(res.get("hyp", None))
    log_domain = res.get("log", False, bool)
    out = Path(res.get("out", None))
    systems: dict[str, str] = {}
    manifest = res.get("manifest", None)
    if manifest:
        for rec in corpus.parse_manifest(manifest):
            systems[rec.utt_id] = rec.system_id
    shared = sorted(set(refs) & set(hyps))
    if not shared:
        raise ValidationError("reference and hypothesis F0 files share no utterances")
    rmse_name = "log_f0_rmse" if log_domain else "f0_rmse"
    values = []
    for utt_id in shared:
        sid = systems.get(utt_id, "")
        try:
            values.append(
                metrics.MetricValue(
                    utt_id, sid, rmse_name,
                    metrics.f0_rmse(refs[utt_id], hyps[utt_id], log_domain=log_domain),
                )
            )
            values.append(
                metrics.MetricValue(
                    utt_id, sid, "f0_corr", metrics.f0_corr(refs[utt_id], hyps[utt_id])
                )
            )
        except (NumericError, ValidationError) as exc:
            warnings.warn(
                f"utterance {utt_id}: {exc}", corpus.CorpusWarning, stacklevel=2
            )
    metrics.write_metric_values(values, out)
    _write_run_manifest(out, "f0-metrics", {"ref": str(args.ref), "hyp": str(args.hyp)}, res.resolved)
    print(f"computed F0 metrics for {len(shared)} utterance pairs")
    return EXIT_OK


def cmd_perturb_f0(args: argparse.Namespace) -> int:
    res = Resolver(args, "perturb-f0")
    contours = corpus.read_f0(res.get("f0", None))
    mode = res.get("mode", None)
    if mode not in ("inverse", "flip"):
        raise ValidationError(f"--mode must be inverse or flip, got {mode!r}")
    out = Path(res.get("out", None))
    fn = metrics.perturb_inverse if mode == "inverse" else metrics.perturb_flip
    corpus.write_f0({utt: fn(contour) for utt, contour in contours.items()}, out)
    _write_run_manifest(out, "perturb-f0", {"f0": str(args.f0)}, res.resolved)
    print(f"perturbed {len(contours)} contours ({mode})")
    return EXIT_OK


def _parse_pairs(raw: str) -> list[tuple[str, str]]:
    pairs = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ValidationError(f"pair {chunk!r} must look like metric_a:metric_b")
        a, _, b = chunk.partition(":")
        pairs.append((a.strip(), b.strip()))
    if not pairs:
        raise ValidationError("no metric pairs given")
    return pairs


def cmd_correlate(args: argparse.Namespace) -> int:
    res = Resolver(args, "correlate")
    records, _ = _load_manifest(res.get("manifest", None))
    values = []
    for scores_path in args.scores:
        values.extend(metrics.read_metric_values(scores_path))
    pairs = _parse_pairs(res.get("pairs", None))
    levels = tuple(
        level.strip() for level in res.get("levels", "utterance,system").split(",") if level.strip()
    )
    out = Path(res.get("out", None))
    reports = metrics.correlation_run(records, values, pairs, levels)
    metrics.write_reports(reports, out)
    table = res.get("table", None)
    if table:
        Path(table).write_text(metrics.render_report_table(reports), encoding="utf-8")
    _write_run_manifest(
        out, "correlate",
        {"manifest": str(args.manifest), "scores": [str(s) for s in args.scores]},
        res.resolved,
    )
    print(f"wrote {len(reports)} correlation report(s) to {out}")
    return EXIT_OK


def cmd_distributions(args: argparse.Namespace) -> int:
    res = Resolver(args, "distributions")
    values = []
    for scores_path in args.scores:
        values.extend(metrics.read_metric_values(scores_path))
    metric = res.get("metric", None)
    present = sorted({v.metric for v in values})
    if metric is None:
        if len(present) != 1:
            raise ValidationError(
                f"scores contain metrics {present}; pick one with --metric"
            )
        metric = present[0]
    rows = [(v.system_id or "ungrouped", v.value) for v in values if v.metric == metric]
    if not rows:
        raise ValidationError(f"no values for metric {metric!r}")
    summaries, shifts = metrics.distribution_summary(rows, bins=res.get("bins", 20, int))
    out = Path(res.get("out", None))
    with open(out, "w", encoding="utf-8") as fh:
        for s in summaries:
            fh.write(json.dumps({
                "type": "summary", "group": s.group, "n": s.n, "mean": s.mean,
                "std": s.std, "quantiles": list(s.quantiles),
                "hist_edges": list(s.hist_edges), "hist_counts": list(s.hist_counts),
            }) + "\n")
        for sh in shifts:
            fh.write(json.dumps({
                "type": "shift", "group_a": sh.group_a, "group_b": sh.group_b,
                "mean_diff": sh.mean_diff, "cohens_d": sh.cohens_d,
            }) + "\n")
    _write_run_manifest(out, "distributions", {"scores": [str(s) for s in args.scores]}, res.resolved)
    print(f"summarized {len(summaries)} group(s) for {metric}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    res = Resolver(args, "validate")
    vocab = res.get("vocab", None, int)
    caught: list[warnings.WarningMessage] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        records, base = _load_manifest(res.get("manifest", None))
        n_files = 0
        for rec in records:
            frames = None
            if rec.feature_path:
                feats = corpus.read_features(corpus.resolve_path(base, rec.feature_path))
                frames = feats.frames
                n_files += 1
            if rec.token_path:
                table = corpus.read_tokens(corpus.resolve_path(base, rec.token_path), vocab)
                if rec.utt_id not in table:
                    raise ValidationError(f"{rec.token_path}: no token line for {rec.utt_id}")
                n_files += 1
            if rec.prosody_token_path:
                table = corpus.read_tokens(corpus.resolve_path(base, rec.prosody_token_path), vocab)
                if rec.utt_id not in table:
                    raise ValidationError(f"{rec.prosody_token_path}: no token line for {rec.utt_id}")
                if rec.phonemes and len(table[rec.utt_id]) != len(rec.phonemes):
                    raise ValidationError(
                        f"{rec.utt_id}: prosody token count {len(table[rec.utt_id])} != "
                        f"phoneme count {len(rec.phonemes)}"
                    )
                n_files += 1
            if rec.alignment_path:
                if rec.phonemes is None or frames is None:
                    warnings.warn(
                        f"{rec.utt_id}: alignment present but phonemes or features "
                        f"missing; coverage not checked",
                        corpus.CorpusWarning, stacklevel=2,
                    )
                else:
                    corpus.read_alignment(
                        corpus.resolve_path(base, rec.alignment_path),
                        rec.utt_id, rec.phoneme_sequence(), frames,
                    )
                n_files += 1
            if rec.f0_path:
                contours = corpus.read_f0(corpus.resolve_path(base, rec.f0_path))
                if rec.utt_id not in contours:
                    raise ValidationError(f"{rec.f0_path}: no contour for {rec.utt_id}")
                if frames is not None and len(contours[rec.utt_id]) != frames:
                    raise ValidationError(
                        f"{rec.utt_id}: F0 length {len(contours[rec.utt_id])} != "
                        f"feature frames {frames}"
                    )
                n_files += 1
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"validated {len(records)} records, {n_files} file references, {len(caught)} warnings")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON config file (command line overrides it)")
    sp.add_argument("--seed", type=int, help="seed for all randomness (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttscore",
        description="Reference-free intelligibility and prosody scoring for synthesized speech.",
    )
    parser.add_argument("--version", action="version", version=f"ttscore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth-corpus", help="generate the deterministic synthetic corpus")
    _add_common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--train-n", type=int, dest="train_n")
    sp.add_argument("--eval-n", type=int, dest="eval_n")
    sp.add_argument("--systems", type=int)
    sp.set_defaults(func=cmd_synth_corpus)

    sp = sub.add_parser("fit-kmeans", help="train a content-token codebook")
    _add_common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--max-iters", type=int, dest="max_iters")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-frames", type=int, dest="max_frames")
    sp.set_defaults(func=cmd_fit_kmeans)

    sp = sub.add_parser("tokenize", help="assign content tokens with a codebook")
    _add_common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--codebook", required=True)
    sp.add_argument("--out-tokens", required=True, dest="out_tokens")
    sp.add_argument("--out-manifest", dest="out_manifest")
    sp.set_defaults(func=cmd_tokenize)

    sp = sub.add_parser("pool", help="pool frame features per aligned phoneme")
    _add_common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out-dir", required=True, dest="out_dir")
    sp.add_argument("--out-manifest", dest="out_manifest")
    sp.add_argument("--mode", choices=("mean", "max"))
    sp.set_defaults(func=cmd_pool)

    sp = sub.add_parser("fit-rvq", help="train residual prosody codebooks")
    _add_common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--stages", type=int)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_fit_rvq)

    sp = sub.add_parser("encode-rvq", help="encode pooled features to prosody tokens")
    _add_common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--rvq", required=True)
    sp.add_argument("--out-tokens", required=True, dest="out_tokens")
    sp.add_argument("--out-manifest", dest="out_manifest")
    sp.set_defaults(func=cmd_encode_rvq)

    sp = sub.add_parser("train-gen", help="train a token generator (conditional or uLM)")
    _add_common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--vocab", type=int)
    sp.add_argument("--codebook")
    sp.add_argument("--rvq")
    sp.add_argument("--unconditional", action=argparse.BooleanOptionalAction)
    sp.add_argument("--prosody", action=argparse.BooleanOptionalAction,
                    help="train on prosody_token_path instead of token_path")
    sp.add_argument("--enc-layers", type=int, dest="enc_layers")
    sp.add_argument("--dec-layers", type=int, dest="dec_layers")
    sp.add_argument("--model-dim", type=int, dest="model_dim")
    sp.add_argument("--embed-dim", type=int, dest="embed_dim")
    sp.add_argument("--heads", type=int)
    sp.add_argument("--dropout", type=float)
    sp.add_argument("--max-len", type=int, dest="max_len")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", type=int, dest="batch_size")
    sp.add_argument("--lr", type=float)
    sp.add_argument("--weight-decay", type=float, dest="weight_decay")
    sp.add_argument("--precision", choices=("single", "double"))
    sp.set_defaults(func=cmd_train_gen)

    sp = sub.add_parser("score", help="score a manifest with a trained generator")
    _add_common(sp)
    sp.add_argument("--metric", required=True, choices=sorted(_METRIC_NAMES))
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--batch-size", type=int, dest="batch_size")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--append", action=argparse.BooleanOptionalAction)
    sp.add_argument("--on-length-mismatch", choices=("reject", "warn"),
                    dest="on_length_mismatch")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("wer", help="word/character error rates from transcripts")
    _add_common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--hyp", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--level", choices=("word", "char"))
    sp.set_defaults(func=cmd_wer)

    sp = sub.add_parser("f0-metrics", help="F0 RMSE / correlation over co-voiced frames")
    _add_common(sp)
    sp.add_argument("--ref", required=True)
    sp.add_argument("--hyp", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--log", action=argparse.BooleanOptionalAction)
    sp.add_argument("--manifest")
    sp.set_defaults(func=cmd_f0_metrics)

    sp = sub.add_parser("perturb-f0", help="invert or time-flip pitch contours")
    _add_common(sp)
    sp.add_argument("--f0", required=True)
    sp.add_argument("--mode", required=True, choices=("inverse", "flip"))
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_perturb_f0)

    sp = sub.add_parser("correlate", help="correlate score columns at both levels")
    _add_common(sp)
    sp.add_argument("--scores", required=True, nargs="+")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--pairs", required=True,
                    help="comma-separated metric pairs, e.g. ttscore_int:mos,ttscore_int:wer")
    sp.add_argument("--levels")
    sp.add_argument("--out", required=True)
    sp.add_argument("--table", help="also render a plain-text table here")
    sp.set_defaults(func=cmd_correlate)

    sp = sub.add_parser("distributions", help="grouped score distributions and shifts")
    _add_common(sp)
    sp.add_argument("--scores", required=True, nargs="+")
    sp.add_argument("--metric")
    sp.add_argument("--bins", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_distributions)

    sp = sub.add_parser("validate", help="validate a manifest and every file it references")
    _add_common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--vocab", type=int)
    sp.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TTScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
