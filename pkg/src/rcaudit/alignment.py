"""Alignment statistics: one-tailed Welch test, per-instance alignment
verdicts, dataset-level alignment scores, and random-partition calibration.

An explanation "aligns" with the expected reasoning step when (a) the model
answers both the original instance and its counterfactual twin exactly
correctly and (b) the positive partition's mean saliency is significantly
higher than the negative partition's under a one-tailed two-sample test.
The test is Welch's (unequal variances, Welch-Satterthwaite degrees of
freedom); signed saliency scores enter it as-is.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from scipy import stats

from .counterfactuals import CFPair
from .errors import InputError
from .gateway.base import ModelGateway, predict
from .metrics import exact_match
from .partitions import TokenPartition, build_skill_partition, random_partition, seed_for
from .saliency import SaliencyCache, SaliencyConfig, SaliencyMap, compute_saliency, restrict_map
from .types import RCInstance


@dataclass(frozen=True)
class SignificanceResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    significant: bool
    mean_positive: float
    mean_negative: float


def _sample_stats(values: Sequence[float]) -> tuple[float, float, int]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, var, n


def t_test_one_tailed(
    positive: Sequence[float], negative: Sequence[float], alpha: float = 0.05
) -> SignificanceResult:
    """Welch's t-test of H1: mean(positive) > mean(negative).

    Zero-variance degenerate cases are defined rather than erroneous:
    identical constant samples give t=0, p=0.5; strictly ordered constant
    samples give t=+/-inf with p=0 or 1.
    """
    if len(positive) < 2 or len(negative) < 2:
        raise InputError("t-test requires at least 2 values per side")
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0,1), got {alpha}")
    m_pos, v_pos, n_pos = _sample_stats(positive)
    m_neg, v_neg, n_neg = _sample_stats(negative)
    if v_pos == 0.0 and v_neg == 0.0:
        if m_pos == m_neg:
            t, df, p = 0.0, float(n_pos + n_neg - 2), 0.5
        elif m_pos > m_neg:
            t, df, p = math.inf, float(n_pos + n_neg - 2), 0.0
        else:
            t, df, p = -math.inf, float(n_pos + n_neg - 2), 1.0
    else:
        se_pos = v_pos / n_pos
        se_neg = v_neg / n_neg
        t = (m_pos - m_neg) / math.sqrt(se_pos + se_neg)
        df = (se_pos + se_neg) ** 2 / (
            se_pos**2 / (n_pos - 1) + se_neg**2 / (n_neg - 1)
        )
        p = float(stats.t.sf(t, df))
    return SignificanceResult(
        t_statistic=t,
        degrees_of_freedom=df,
        p_value=p,
        significant=bool(p < alpha and t > 0),
        mean_positive=m_pos,
        mean_negative=m_neg,
    )


@dataclass(frozen=True)
class AlignmentRecord:
    instance_id: str
    cf_both_correct: bool
    significance: SignificanceResult
    aligned: bool


def partition_test(
    saliency: SaliencyMap, partition: TokenPartition, alpha: float = 0.05
) -> SignificanceResult:
    """Welch test on a saliency map restricted to a partition's two sides."""
    if saliency.instance_id != partition.instance_id:
        raise InputError(
            f"saliency is for {saliency.instance_id!r}, partition for {partition.instance_id!r}"
        )
    restricted = restrict_map(saliency, partition.scope)
    n = len(restricted.scores)
    for idx in partition.positive | partition.negative:
        if idx >= n:
            raise InputError(f"{partition.instance_id}: partition index {idx} out of scope")
    pos = [restricted.scores[i] for i in sorted(partition.positive)]
    neg = [restricted.scores[i] for i in sorted(partition.negative)]
    return t_test_one_tailed(pos, neg, alpha)


def explanation_alignment(
    pair: CFPair,
    saliency: SaliencyMap,
    partition: TokenPartition,
    gateway: ModelGateway,
    alpha: float = 0.05,
) -> AlignmentRecord:
    """Per-instance alignment verdict: CF robustness AND saliency placement.

    The saliency map must describe the pair's original instance; the
    counterfactual twin only contributes the answered-correctly check.
    """
    if saliency.instance_id != pair.original.id:
        raise InputError(
            f"saliency is for {saliency.instance_id!r}, pair for {pair.original.id!r}"
        )
    significance = partition_test(saliency, partition, alpha)
    both = True
    for instance in (pair.original, pair.perturbed):
        pred = predict(gateway, instance).predicted_span.text
        if not exact_match(pred, [a.text for a in instance.gold_answers]):
            both = False
            break
    return AlignmentRecord(
        instance_id=pair.original.id,
        cf_both_correct=both,
        significance=significance,
        aligned=bool(both and significance.significant),
    )


def alignment_score(records: Sequence[AlignmentRecord]) -> float:
    if not records:
        raise InputError("alignment_score requires at least one record")
    return sum(r.aligned for r in records) / len(records)


@dataclass(frozen=True)
class AlignmentReport:
    dataset_id: str
    model_id: str
    reasoning_step: str
    method: str
    records: tuple[AlignmentRecord, ...]
    skipped: tuple[tuple[str, str], ...] = ()

    @property
    def score(self) -> float:
        return alignment_score(list(self.records))


def audit_alignment(
    gateway: ModelGateway,
    pairs: Sequence[CFPair],
    config: SaliencyConfig,
    alpha: float = 0.05,
    cache: SaliencyCache | None = None,
    dataset_id: str = "dataset",
) -> AlignmentReport:
    """Run the full alignment audit over CF pairs with one saliency config.

    Pairs whose original lacks a buildable skill partition, or whose
    partition leaves a side too small for the significance test, are skipped
    and listed in the report instead of failing the run. Records are ordered
    by instance id so reports are deterministic regardless of scheduling.
    """
    if cache is None:
        cache = SaliencyCache()
    records: list[AlignmentRecord] = []
    skipped: list[tuple[str, str]] = []
    steps: set[str] = set()
    for pair in sorted(pairs, key=lambda p: p.original.id):
        try:
            partition = build_skill_partition(pair.original)
        except InputError as exc:
            skipped.append((pair.original.id, str(exc)))
            continue
        saliency = cache.get_or_compute(gateway, pair.original, config)
        try:
            record = explanation_alignment(pair, saliency, partition, gateway, alpha)
        except InputError as exc:
            # e.g. a single-token operator leaves one side too small to test
            skipped.append((pair.original.id, str(exc)))
            continue
        records.append(record)
        steps.add(partition.skill_step)
    if not records:
        raise InputError(f"{dataset_id}: no usable pairs for the alignment audit")
    return AlignmentReport(
        dataset_id=dataset_id,
        model_id=gateway.model_id,
        reasoning_step="+".join(sorted(steps)),
        method=config.method,
        records=tuple(records),
        skipped=tuple(skipped),
    )


def _calibration_counts(
    instances: Iterable[RCInstance],
    gateway: ModelGateway,
    config: SaliencyConfig,
    n_partitions: int,
    seed: int,
    alpha: float,
) -> tuple[int, int]:
    if n_partitions < 1:
        raise InputError("calibration needs n_partitions >= 1")
    significant = 0
    total = 0
    for instance in instances:
        saliency = compute_saliency(gateway, instance, config)
        for draw in range(n_partitions):
            partition = random_partition(instance, seed=seed_for(seed, instance.id, draw))
            result = partition_test(saliency, partition, alpha)
            significant += int(result.significant)
            total += 1
    if total == 0:
        raise InputError("calibration needs at least one instance")
    return significant, total


def calibration_rate(
    instances: Iterable[RCInstance],
    gateway: ModelGateway,
    config: SaliencyConfig,
    n_partitions: int = 1,
    seed: int = 0,
    alpha: float = 0.05,
) -> float:
    """Fraction of seeded random size-matched partitions judged significant.

    A sound test keeps this near alpha: random partitions carry no signal,
    so rejections here are false positives.
    """
    significant, total = _calibration_counts(
        instances, gateway, config, n_partitions, seed, alpha
    )
    return significant / total


@dataclass(frozen=True)
class CalibrationReport:
    rate: float
    n_significant: int
    n_draws: int
    alpha: float
    seed: int
    ci_low: float
    ci_high: float


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if trials <= 0:
        raise InputError("wilson_interval requires trials > 0")
    phat = successes / trials
    denom = 1 + z**2 / trials
    center = (phat + z**2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z**2 / (4 * trials**2))
    # clamp so rounding noise never pushes the interval off the estimate
    return min(phat, max(0.0, center - half)), max(phat, min(1.0, center + half))


def calibrate(
    instances: Sequence[RCInstance],
    gateway: ModelGateway,
    config: SaliencyConfig,
    n_partitions: int = 1,
    seed: int = 0,
    alpha: float = 0.05,
) -> CalibrationReport:
    significant, total = _calibration_counts(
        instances, gateway, config, n_partitions, seed, alpha
    )
    low, high = wilson_interval(significant, total)
    return CalibrationReport(
        rate=significant / total,
        n_significant=significant,
        n_draws=total,
        alpha=alpha,
        seed=seed,
        ci_low=low,
        ci_high=high,
    )


def record_to_dict(record: AlignmentRecord) -> dict:
    sig = record.significance
    return {
        "instance_id": record.instance_id,
        "cf_both_correct": record.cf_both_correct,
        "aligned": record.aligned,
        "t": sig.t_statistic,
        "df": sig.degrees_of_freedom,
        "p": sig.p_value,
        "significant": sig.significant,
        "mean_positive": sig.mean_positive,
        "mean_negative": sig.mean_negative,
    }


def save_records(records: Iterable[AlignmentRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")


def alignment_csv(reports: Sequence[AlignmentReport]) -> str:
    """Render reports as a CSV grid: one row per model, one column per
    (method, reasoning step), cells as percentages with one decimal."""
    if not reports:
        raise InputError("alignment_csv requires at least one report")
    columns = sorted({(r.method, r.reasoning_step) for r in reports})
    models = sorted({r.model_id for r in reports})
    cells: dict[tuple[str, str, str], float] = {}
    for report in reports:
        cells[(report.model_id, report.method, report.reasoning_step)] = report.score
    lines = ["model," + ",".join(f"{m}:{s}" for m, s in columns)]
    for model in models:
        row = [model]
        for method, step in columns:
            value = cells.get((model, method, step))
            row.append("" if value is None else f"{100 * value:.1f}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
