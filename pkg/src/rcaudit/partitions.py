"""Positive/negative token partitions encoding expected reasoning steps.

A partition names the tokens a model following the expected reasoning
process should rely on (positive) and a disjoint set it should not
(negative). Comparison questions partition the question words around the
comparative operator; coreference questions partition the context words
around the relevant mention cluster. Random partitions of matching sizes
provide the calibration null.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .types import RCInstance, Scope

SKILL_STEPS = ("comparison_operation", "coreference_resolution", "random")


@dataclass(frozen=True)
class TokenPartition:
    instance_id: str
    scope: Scope
    positive: frozenset[int]
    negative: frozenset[int]
    skill_step: str

    def __post_init__(self) -> None:
        if self.skill_step not in SKILL_STEPS:
            raise InputError(f"unknown skill step {self.skill_step!r}")
        if not self.positive or not self.negative:
            raise InputError(f"{self.instance_id}: partition sides must be non-empty")
        if self.positive & self.negative:
            raise InputError(f"{self.instance_id}: partition sides overlap")


def scope_size(instance: RCInstance, scope: Scope) -> int:
    if scope == "question_tokens":
        return instance.n_question
    if scope == "context_tokens":
        return instance.n_context
    raise InputError(f"partitions need a question or context scope, not {scope!r}")


def check_bounds(partition: TokenPartition, instance: RCInstance) -> TokenPartition:
    n = scope_size(instance, partition.scope)
    for idx in partition.positive | partition.negative:
        if not 0 <= idx < n:
            raise InputError(f"{instance.id}: partition index {idx} outside {partition.scope}")
    return partition


def build_comparison_partition(instance: RCInstance) -> TokenPartition:
    """Question-scope partition: operator words against filler words.

    Negative = question words minus the operator, the compared entities,
    value words, verb words, and commas (commas belong to neither side;
    other punctuation such as the question mark stays negative).
    """
    if instance.skill != "comparison":
        raise InputError(f"{instance.id}: comparison partition needs the comparison skill")
    ann = instance.annotations
    if ann is None or not ann.comparison_operator:
        raise InputError(f"{instance.id}: missing operator annotation")
    if instance.unannotatable:
        raise InputError(f"{instance.id}: flagged un-annotatable")
    excluded: set[int] = set(ann.comparison_operator)
    for entity in ann.compared_entities:
        excluded |= entity
    excluded |= ann.value_tokens
    excluded |= ann.verb_tokens
    negative = frozenset(
        i
        for i, tok in enumerate(instance.question)
        if i not in excluded and tok.text != ","
    )
    if not negative:
        raise InputError(f"{instance.id}: comparison partition has an empty negative side")
    return check_bounds(
        TokenPartition(
            instance_id=instance.id,
            scope="question_tokens",
            positive=frozenset(ann.comparison_operator),
            negative=negative,
            skill_step="comparison_operation",
        ),
        instance,
    )


def build_coref_partition(
    instance: RCInstance, relevant_cluster: int | None = None
) -> TokenPartition:
    """Context-scope partition: cluster mention words against the rest.

    Negative excludes (besides the cluster itself) context words whose
    casefolded text also appears among the question words, since those are
    legitimately useful to any model regardless of coreference reasoning.
    """
    if instance.skill != "coreference":
        raise InputError(f"{instance.id}: coreference partition needs the coreference skill")
    cluster_idx = instance.relevant_cluster if relevant_cluster is None else relevant_cluster
    if cluster_idx is None or not 0 <= cluster_idx < len(instance.coref_clusters):
        raise InputError(f"{instance.id}: no relevant coreference cluster recorded")
    positive: set[int] = set()
    for mention in instance.coref_clusters[cluster_idx]:
        positive.update(range(mention.token_start, mention.token_end + 1))
    question_words = {tok.text.casefold() for tok in instance.question}
    negative = frozenset(
        i
        for i, tok in enumerate(instance.context_tokens)
        if i not in positive and tok.text.casefold() not in question_words
    )
    if not positive:
        raise InputError(f"{instance.id}: coreference partition has an empty positive side")
    if not negative:
        raise InputError(f"{instance.id}: coreference partition has an empty negative side")
    return check_bounds(
        TokenPartition(
            instance_id=instance.id,
            scope="context_tokens",
            positive=frozenset(positive),
            negative=negative,
            skill_step="coreference_resolution",
        ),
        instance,
    )


def build_skill_partition(instance: RCInstance) -> TokenPartition:
    if instance.skill == "comparison":
        return build_comparison_partition(instance)
    if instance.skill == "coreference":
        return build_coref_partition(instance)
    raise InputError(f"{instance.id}: no partition defined for skill {instance.skill!r}")


def random_partition(
    instance: RCInstance,
    pos_size: int | None = None,
    neg_size: int | None = None,
    seed: int = 0,
    scope: Scope | None = None,
) -> TokenPartition:
    """Uniform disjoint index sets of the requested sizes; seeded.

    Sizes default to the instance's own skill-partition sizes so calibration
    draws are size-matched; instances without a usable skill partition fall
    back to a 2 / rest split. Sizes below 2 are clamped up to 2.
    """
    if scope is None:
        scope = "context_tokens" if instance.skill == "coreference" else "question_tokens"
    n = scope_size(instance, scope)
    if pos_size is None or neg_size is None:
        try:
            skill = build_skill_partition(instance)
            default_pos, default_neg = len(skill.positive), len(skill.negative)
        except InputError:
            default_pos, default_neg = 2, n - 2
        if pos_size is None:
            pos_size = default_pos
        if neg_size is None:
            neg_size = default_neg
    pos_size = max(2, int(pos_size))
    neg_size = max(2, int(neg_size))
    if pos_size + neg_size > n:
        raise InputError(
            f"{instance.id}: cannot draw {pos_size}+{neg_size} indices from {n} {scope}"
        )
    rng = np.random.default_rng(seed)
    drawn = rng.permutation(n)[: pos_size + neg_size]
    return TokenPartition(
        instance_id=instance.id,
        scope=scope,
        positive=frozenset(int(i) for i in drawn[:pos_size]),
        negative=frozenset(int(i) for i in drawn[pos_size:]),
        skill_step="random",
    )


def seed_for(global_seed: int, instance_id: str, draw: int = 0) -> int:
    """Stable per-instance RNG seed derived from the global seed."""
    digest = hashlib.sha256(f"{global_seed}\x00{instance_id}\x00{draw}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
