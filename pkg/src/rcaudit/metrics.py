"""Extractive-QA answer metrics: normalization, token F1, and exact match.

Normalization follows the de-facto extractive-QA convention: lowercase,
strip punctuation, drop the articles a/an/the, collapse whitespace. F1 uses
bag-of-token (multiset) overlap so repeated tokens are not double-credited;
with several gold answers the best-scoring one counts.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from typing import Iterable, Mapping, Sequence

from .errors import InputError
from .types import EvalResult, RCInstance

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation and articles, collapse whitespace."""
    text = text.lower().translate(_PUNCT_TABLE)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


def token_f1(predicted: str, gold_answers: Sequence[str]) -> float:
    """Best bag-of-token F1 of the prediction against any gold answer."""
    if not gold_answers:
        raise InputError("token_f1 requires at least one gold answer")
    pred = normalize_answer(predicted)
    best = 0.0
    for gold_text in gold_answers:
        gold = normalize_answer(gold_text)
        if not pred and not gold:
            best = max(best, 1.0)
            continue
        pred_tokens = Counter(pred.split())
        gold_tokens = Counter(gold.split())
        overlap = sum((pred_tokens & gold_tokens).values())
        if overlap == 0:
            continue
        precision = overlap / sum(pred_tokens.values())
        recall = overlap / sum(gold_tokens.values())
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


def exact_match(predicted: str, gold_answers: Sequence[str]) -> bool:
    """True iff the normalized prediction equals any normalized gold answer."""
    if not gold_answers:
        raise InputError("exact_match requires at least one gold answer")
    pred = normalize_answer(predicted)
    return any(pred == normalize_answer(g) for g in gold_answers)


def evaluate_dataset(
    predictions: Mapping[str, str], instances: Iterable[RCInstance]
) -> EvalResult:
    """Macro-average token F1 and exact match over a dataset.

    Raises InputError when the instance list is empty or any instance id is
    missing from `predictions`.
    """
    f1_total = 0.0
    em_total = 0
    n = 0
    for instance in instances:
        if instance.id not in predictions:
            raise InputError(f"no prediction for instance {instance.id!r}")
        golds = [a.text for a in instance.gold_answers]
        pred = predictions[instance.id]
        f1_total += token_f1(pred, golds)
        em_total += int(exact_match(pred, golds))
        n += 1
    if n == 0:
        raise InputError("evaluate_dataset requires at least one instance")
    return EvalResult(f1=f1_total / n, exact_match=em_total / n, n_instances=n)
