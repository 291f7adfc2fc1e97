"""Baseline metrics, correlation analysis, F0 perturbations and reports.

Contains the statistics the benchmark harness is built on: Pearson/Spearman
correlations at utterance and system level, Levenshtein-based word/character
error rates, the reference-bound F0 baselines (RMSE and correlation over
co-voiced frames), the two pitch-contour perturbations used for sanity
analysis, and grouped score-distribution summaries with shift statistics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import EvalRecord, F0Contour
from .errors import FormatError, NumericError, ValidationError
from .scoring import ScoreResult

LOG_F0_FLOOR_HZ = 1e-8
INVERSE_F0_FLOOR_HZ = 1.0


# ---------------------------------------------------------------------------
# Correlation statistics
# ---------------------------------------------------------------------------

def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Product-moment correlation; undefined for constant series."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ValidationError(f"series must be equal-length 1-D, got {x.shape} vs {y.shape}")
    if x.shape[0] < 2:
        raise ValidationError(f"need at least 2 points, got {x.shape[0]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("series contain non-finite values")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(xc @ xc))
    sy = math.sqrt(float(yc @ yc))
    if sx == 0.0 or sy == 0.0:
        raise NumericError("correlation undefined for a constant series")
    return float(xc @ yc) / (sx * sy)


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties receiving the average of their rank range."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=np.float64)
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        ranks[order[i : j + 1]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation: Pearson of average-ranked series."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape:
        raise ValidationError(f"series must be equal-length, got {x.shape} vs {y.shape}")
    return pearson(average_ranks(x), average_ranks(y))


def system_aggregate(records: Iterable[tuple[str, float]]) -> list[tuple[str, float]]:
    """Per-system arithmetic means, sorted by system id."""
    grouped: dict[str, list[float]] = {}
    for system_id, value in records:
        grouped.setdefault(system_id, []).append(float(value))
    return [(sid, float(np.mean(grouped[sid]))) for sid in sorted(grouped)]


# ---------------------------------------------------------------------------
# Edit distance and error rates
# ---------------------------------------------------------------------------

def levenshtein(reference: Sequence, hypothesis: Sequence) -> int:
    """Unit-cost edit distance, two-row dynamic program."""
    ref = list(reference)
    hyp = list(hypothesis)
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, start=1):
            cur[j] = min(
                prev[j] + 1,  # deletion
                cur[j - 1] + 1,  # insertion
                prev[j - 1] + (0 if r == h else 1),  # substitution / match
            )
        prev = cur
    return prev[-1]


def error_rate(reference: Sequence, hypothesis: Sequence) -> float:
    """Edit distance normalized by reference length (word or char tokens)."""
    if len(reference) == 0:
        raise ValidationError("error rate undefined for an empty reference")
    return levenshtein(reference, hypothesis) / len(reference)


def word_error_rate(reference: str, hypothesis: str) -> float:
    return error_rate(reference.split(), hypothesis.split())


def char_error_rate(reference: str, hypothesis: str) -> float:
    return error_rate(list(reference.replace(" ", "")), list(hypothesis.replace(" ", "")))


# ---------------------------------------------------------------------------
# F0 baselines and perturbations
# ---------------------------------------------------------------------------

def _covoiced(ref: F0Contour, hyp: F0Contour) -> np.ndarray:
    if len(ref) != len(hyp):
        raise ValidationError(f"contour lengths differ: {len(ref)} vs {len(hyp)}")
    return ref.voiced_mask & hyp.voiced_mask


def f0_rmse(ref: F0Contour, hyp: F0Contour, log_domain: bool = False) -> float:
    """RMSE over frames voiced in both contours, optionally in ln(Hz)."""
    mask = _covoiced(ref, hyp)
    if not mask.any():
        raise NumericError("no co-voiced frames; F0 RMSE undefined")
    a = ref.values[mask]
    b = hyp.values[mask]
    if log_domain:
        a = np.log(np.maximum(a, LOG_F0_FLOOR_HZ))
        b = np.log(np.maximum(b, LOG_F0_FLOOR_HZ))
    diff = a - b
    return float(np.sqrt(np.mean(diff * diff)))


def f0_corr(ref: F0Contour, hyp: F0Contour) -> float:
    """Pearson correlation over co-voiced frames."""
    mask = _covoiced(ref, hyp)
    if mask.sum() < 2:
        raise NumericError("need at least 2 co-voiced frames for F0 correlation")
    return pearson(ref.values[mask], hyp.values[mask])


def perturb_inverse(f0: F0Contour) -> F0Contour:
    """Reflect voiced F0 values around their mean; unvoiced frames stay 0.

    Reflections falling at or below zero are clamped to a small positive
    floor so the frame stays voiced.
    """
    mask = f0.voiced_mask
    if not mask.any():
        raise ValidationError("cannot invert an all-unvoiced contour")
    out = f0.values.copy()
    mean = float(out[mask].mean())
    out[mask] = np.maximum(2.0 * mean - out[mask], INVERSE_F0_FLOOR_HZ)
    return F0Contour(out)


def perturb_flip(f0: F0Contour) -> F0Contour:
    """Reverse the contour in time, unvoiced markers included."""
    return F0Contour(f0.values[::-1].copy())


# ---------------------------------------------------------------------------
# Distribution summaries (score-shift analysis)
# ---------------------------------------------------------------------------

QUANTILE_POINTS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class DistributionSummary:
    group: str
    n: int
    mean: float
    std: float
    quantiles: tuple[float, ...]
    hist_edges: tuple[float, ...]
    hist_counts: tuple[int, ...]

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"group {self.group!r} needs >= 2 values, got {self.n}")
        if sum(self.hist_counts) != self.n:
            raise ValidationError("histogram counts must sum to n")
        if any(
            self.quantiles[i] > self.quantiles[i + 1]
            for i in range(len(self.quantiles) - 1)
        ):
            raise ValidationError("quantiles must be non-decreasing")


@dataclass(frozen=True)
class GroupShift:
    group_a: str
    group_b: str
    mean_diff: float
    cohens_d: float


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    """Effect size with pooled sample standard deviation."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if len(x) < 2 or len(y) < 2:
        raise ValidationError("Cohen's d needs >= 2 values per group")
    diff = float(x.mean() - y.mean())
    pooled_var = ((len(x) - 1) * x.var(ddof=1) + (len(y) - 1) * y.var(ddof=1)) / (
        len(x) + len(y) - 2
    )
    if pooled_var == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / math.sqrt(pooled_var)


def distribution_summary(
    scores: Iterable[tuple[str, float]], bins: int = 20
) -> tuple[list[DistributionSummary], list[GroupShift]]:
    """Per-group summaries over shared histogram bins, plus pairwise shifts."""
    if bins < 1:
        raise ValidationError(f"bins must be >= 1, got {bins}")
    grouped: dict[str, list[float]] = {}
    for group, value in scores:
        grouped.setdefault(str(group), []).append(float(value))
    if not grouped:
        raise ValidationError("no scores supplied")
    for group, values in grouped.items():
        if len(values) < 2:
            raise ValidationError(f"group {group!r} needs >= 2 values, got {len(values)}")
    everything = np.concatenate([np.asarray(v) for v in grouped.values()])
    lo, hi = float(everything.min()), float(everything.max())
    if lo == hi:
        hi = lo + 1.0  # degenerate range: one bin catches everything
    edges = np.linspace(lo, hi, bins + 1)

    summaries = []
    for group in sorted(grouped):
        values = np.asarray(grouped[group], dtype=np.float64)
        counts, _ = np.histogram(values, bins=edges)
        summaries.append(
            DistributionSummary(
                group=group,
                n=len(values),
                mean=float(values.mean()),
                std=float(values.std(ddof=1)),
                quantiles=tuple(float(q) for q in np.quantile(values, QUANTILE_POINTS)),
                hist_edges=tuple(float(e) for e in edges),
                hist_counts=tuple(int(c) for c in counts),
            )
        )
    shifts = []
    names = sorted(grouped)
    for i, ga in enumerate(names):
        for gb in names[i + 1 :]:
            shifts.append(
                GroupShift(
                    group_a=ga,
                    group_b=gb,
                    mean_diff=float(np.mean(grouped[ga]) - np.mean(grouped[gb])),
                    cohens_d=cohens_d(grouped[ga], grouped[gb]),
                )
            )
    return summaries, shifts


# ---------------------------------------------------------------------------
# Generic per-utterance metric values (scores, error rates, F0 baselines)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricValue:
    utt_id: str
    system_id: str
    metric: str
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValidationError(f"metric value must be finite, got {self.value}")


def write_metric_values(
    values: Iterable[MetricValue], path: str | Path, append: bool = False
) -> None:
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for v in values:
            fh.write(
                json.dumps(
                    {
                        "utt_id": v.utt_id,
                        "system_id": v.system_id,
                        "metric": v.metric,
                        "value": v.value,
                    }
                )
                + "\n"
            )


def read_metric_values(path: str | Path) -> list[MetricValue]:
    """Tolerant reader for results files; extra fields (token_count) ignored."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read results file {path}: {exc}") from exc
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out.append(
                MetricValue(
                    utt_id=str(obj["utt_id"]),
                    system_id=str(obj.get("system_id", "")),
                    metric=str(obj["metric"]),
                    value=float(obj["value"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: malformed metric record: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Correlation reports (joined scores vs manifest columns)
# ---------------------------------------------------------------------------

LEVELS = ("utterance", "system")


@dataclass(frozen=True)
class CorrelationReport:
    metric_a: str
    metric_b: str
    level: str
    lcc: float
    srcc: float
    n: int

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValidationError(f"level must be one of {LEVELS}, got {self.level!r}")
        if abs(self.lcc) > 1.0 + 1e-12 or abs(self.srcc) > 1.0 + 1e-12:
            raise ValidationError("correlation coefficients must lie in [-1, 1]")
        if self.n < 2:
            raise ValidationError(f"need n >= 2, got {self.n}")


def build_columns(
    records: Sequence[EvalRecord], results: Sequence[MetricValue | ScoreResult]
) -> tuple[dict[str, dict[str, float]], dict[str, str]]:
    """Column tables keyed by utt_id: manifest mos/wer/cer plus score metrics."""
    columns: dict[str, dict[str, float]] = {}
    systems: dict[str, str] = {}
    for rec in records:
        systems[rec.utt_id] = rec.system_id
        for name in ("mos", "wer", "cer"):
            value = getattr(rec, name)
            if value is not None:
                columns.setdefault(name, {})[rec.utt_id] = float(value)
    for res in results:
        columns.setdefault(res.metric, {})[res.utt_id] = res.value
        if res.utt_id not in systems and res.system_id:
            systems[res.utt_id] = res.system_id
    return columns, systems


def correlation_run(
    records: Sequence[EvalRecord],
    results: Sequence[MetricValue | ScoreResult],
    pairs: Sequence[tuple[str, str]],
    levels: Sequence[str] = LEVELS,
) -> list[CorrelationReport]:
    """One report per (metric pair, level), joined on utt_id.

    Utterance level correlates raw values; system level correlates the
    per-system means of both series over the joined utterances.
    """
    for level in levels:
        if level not in LEVELS:
            raise ValidationError(f"unknown level {level!r}")
    columns, systems = build_columns(records, results)
    reports: list[CorrelationReport] = []
    for metric_a, metric_b in pairs:
        for name in (metric_a, metric_b):
            if name not in columns:
                raise ValidationError(f"no values for metric {name!r} in the join")
        col_a, col_b = columns[metric_a], columns[metric_b]
        joined = sorted(set(col_a) & set(col_b))
        if len(joined) < 2:
            raise ValidationError(
                f"join of {metric_a!r} and {metric_b!r} has {len(joined)} rows, need >= 2"
            )
        xs = [col_a[u] for u in joined]
        ys = [col_b[u] for u in joined]
        for level in levels:
            if level == "utterance":
                sx, sy = xs, ys
            else:
                missing = [u for u in joined if u not in systems]
                if missing:
                    raise ValidationError(
                        f"no system id for utterances {missing[:5]}; system-level "
                        f"correlation needs manifest records or system_id in results"
                    )
                sys_x = system_aggregate((systems[u], col_a[u]) for u in joined)
                sys_y = system_aggregate((systems[u], col_b[u]) for u in joined)
                sx = [v for _, v in sys_x]
                sy = [v for _, v in sys_y]
            reports.append(
                CorrelationReport(
                    metric_a=metric_a,
                    metric_b=metric_b,
                    level=level,
                    lcc=pearson(sx, sy),
                    srcc=spearman(sx, sy),
                    n=len(sx),
                )
            )
    return reports


def write_reports(reports: Iterable[CorrelationReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports:
            fh.write(
                json.dumps(
                    {
                        "metric_a": rep.metric_a,
                        "metric_b": rep.metric_b,
                        "level": rep.level,
                        "lcc": rep.lcc,
                        "srcc": rep.srcc,
                        "n": rep.n,
                    }
                )
                + "\n"
            )


def render_report_table(reports: Sequence[CorrelationReport]) -> str:
    """Plain-text table of the correlation reports."""
    header = f"{'metric_a':<16} {'metric_b':<12} {'level':<10} {'LCC':>8} {'SRCC':>8} {'n':>6}"
    lines = [header, "-" * len(header)]
    for rep in reports:
        lines.append(
            f"{rep.metric_a:<16} {rep.metric_b:<12} {rep.level:<10} "
            f"{rep.lcc:>8.4f} {rep.srcc:>8.4f} {rep.n:>6d}"
        )
    return "\n".join(lines) + "\n"


def read_reports(path: str | Path) -> list[CorrelationReport]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read report file {path}: {exc}") from exc
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out.append(
                CorrelationReport(
                    metric_a=str(obj["metric_a"]),
                    metric_b=str(obj["metric_b"]),
                    level=str(obj["level"]),
                    lcc=float(obj["lcc"]),
                    srcc=float(obj["srcc"]),
                    n=int(obj["n"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: malformed report record: {exc}") from exc
    return out
