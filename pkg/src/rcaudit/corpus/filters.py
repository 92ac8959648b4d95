"""Skill-subset filters: comparative questions and answer-in-cluster coreference."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from ..errors import InputError
from ..metrics import normalize_answer
from ..text import find_token_run, tokenize
from ..types import AnswerSpan, QuestionAnnotations, RCInstance


@dataclass(frozen=True)
class ComparativeLexicon:
    """Comparative surface forms with their in-distribution antonyms."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise InputError("comparative lexicon must be non-empty")
        for surface, partner in self.entries:
            if surface != surface.lower() or partner != partner.lower():
                raise InputError(f"lexicon forms must be lowercase: {surface!r} -> {partner!r}")

    def surfaces(self) -> tuple[str, ...]:
        return tuple(surface for surface, _ in self.entries)


DEFAULT_LEXICON = ComparativeLexicon(
    entries=(
        ("earlier", "later"),
        ("later", "earlier"),
        ("first", "later"),
        ("more recently", "earlier"),
        ("older", "younger"),
        ("younger", "older"),
    )
)


def match_operator(
    instance: RCInstance, lexicon: ComparativeLexicon = DEFAULT_LEXICON
) -> frozenset[int] | None:
    """Question token indices of the longest lexicon entry present, if any."""
    best: frozenset[int] | None = None
    best_len = 0
    for surface, _ in lexicon.entries:
        needle = tuple(t.text for t in tokenize(surface))
        if len(needle) <= best_len:
            continue
        hit = find_token_run(instance.question, needle)
        if hit is not None:
            best = frozenset(range(hit, hit + len(needle)))
            best_len = len(needle)
    return best


def filter_comparison(
    instances: Iterable[RCInstance], lexicon: ComparativeLexicon = DEFAULT_LEXICON
) -> list[RCInstance]:
    """Keep questions containing a comparative form; mark skill and operator."""
    kept = []
    for instance in instances:
        operator = match_operator(instance, lexicon)
        if operator is None:
            continue
        base = instance.annotations or QuestionAnnotations()
        kept.append(
            replace(
                instance,
                skill="comparison",
                annotations=replace(base, comparison_operator=operator),
            )
        )
    return kept


def filter_coref_answer_in_cluster(
    instances: Iterable[RCInstance],
    clusters: Mapping[str, Sequence[Sequence[AnswerSpan]]] | None = None,
) -> list[RCInstance]:
    """Keep instances where some coreference cluster contains the answer.

    `clusters` optionally supplies externally resolved clusters by instance
    id, overriding any stored on the instance. The first cluster holding a
    mention that normalizes to a gold answer is recorded as relevant and the
    instance is marked with the coreference skill.
    """
    kept = []
    for instance in instances:
        if clusters is not None and instance.id in clusters:
            instance = replace(
                instance,
                coref_clusters=tuple(tuple(c) for c in clusters[instance.id]),
                relevant_cluster=None,
            )
        golds = {normalize_answer(a.text) for a in instance.gold_answers}
        relevant = None
        for c_idx, cluster in enumerate(instance.coref_clusters):
            if any(normalize_answer(m.text) in golds for m in cluster):
                relevant = c_idx
                break
        if relevant is None:
            continue
        kept.append(replace(instance, skill="coreference", relevant_cluster=relevant))
    return kept
