"""Counterfactual perturbations: antonym-swapped comparisons and
manually authored coreference edits.

A counterfactual (CF) pair couples an instance with a minimally edited
twin whose correct answer has changed. Comparison questions are perturbed
automatically by swapping the comparative operator for an antonym (from an
in-distribution or out-of-distribution table) and flipping the gold answer
to the other compared entity. Coreference CFs cannot be generated reliably,
so this module instead defines their file format and a validator for
hand-authored pairs (a new sentence is inserted whose entity takes over the
answer role while the old answer entity remains in the context).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import GatewayError, InputError
from .gateway.base import ModelGateway, predict
from .metrics import exact_match, normalize_answer, token_f1
from .text import find_token_run, tokenize
from .types import AnswerSpan, EvalResult, QuestionAnnotations, RCInstance, Sentence

PERTURBATIONS = ("antonym_swap", "cluster_insertion")
DISTRIBUTION_TAGS = ("in_distribution", "out_of_distribution")


@dataclass(frozen=True)
class AntonymTable:
    """Operator surface form -> candidate replacement surfaces."""

    entries: Mapping[str, tuple[str, ...]]
    distribution_tag: str

    def __post_init__(self) -> None:
        if self.distribution_tag not in DISTRIBUTION_TAGS:
            raise InputError(f"unknown distribution tag {self.distribution_tag!r}")
        for key, replacements in self.entries.items():
            if not replacements:
                raise InputError(f"antonym entry {key!r} has no replacements")
            if key in replacements:
                raise InputError(f"antonym entry {key!r} maps to itself")


IN_DISTRIBUTION_TABLE = AntonymTable(
    entries={
        "earlier": ("later",),
        "later": ("earlier",),
        "first": ("later",),
        "more recently": ("earlier",),
        "older": ("younger",),
        "younger": ("older",),
    },
    distribution_tag="in_distribution",
)

OUT_OF_DISTRIBUTION_TABLE = AntonymTable(
    entries={
        "first": ("less recently",),
        "older": ("less old", "more junior", "less mature", "less grown-up"),
        "earlier": ("subsequently", "thereafter", "less recently"),
        "later": ("less recently",),
        "younger": ("more old", "less junior", "more mature", "more grown-up"),
        "more recently": ("less recently", "longer ago"),
    },
    distribution_tag="out_of_distribution",
)

ANTONYM_TABLES = {
    "in_dist": IN_DISTRIBUTION_TABLE,
    "ood": OUT_OF_DISTRIBUTION_TABLE,
}


@dataclass(frozen=True)
class CFPair:
    original: RCInstance
    perturbed: RCInstance
    perturbation: str
    distribution_tag: str
    replaced_operator: tuple[str, str] | None = None


def _contiguous(indices: frozenset[int], what: str, instance_id: str) -> tuple[int, int]:
    lo, hi = min(indices), max(indices)
    if len(indices) != hi - lo + 1:
        raise InputError(f"{instance_id}: {what} token indices are not contiguous")
    return lo, hi


def _question_surface(instance: RCInstance, indices: frozenset[int]) -> str:
    lo, hi = _contiguous(indices, "annotation", instance.id)
    return instance.question_text[
        instance.question[lo].char_start : instance.question[hi].char_end
    ]


def _splice_question(
    instance: RCInstance, op_indices: frozenset[int], new_surface: str
) -> tuple[tuple, str, frozenset[int], int]:
    """Replace the operator words; returns (tokens, text, new operator
    indices, token-count delta for indices after the operator)."""
    lo, hi = _contiguous(op_indices, "operator", instance.id)
    old_start = instance.question[lo].char_start
    old_end = instance.question[hi].char_end
    new_text = instance.question_text[:old_start] + new_surface + instance.question_text[old_end:]
    new_tokens = tokenize(new_text)
    n_new_op = len(tokenize(new_surface))
    delta = n_new_op - (hi - lo + 1)
    new_op = frozenset(range(lo, lo + n_new_op))
    return new_tokens, new_text, new_op, delta


def _shift_indices(indices: frozenset[int], after: int, delta: int) -> frozenset[int]:
    return frozenset(i + delta if i > after else i for i in indices)


def _entity_context_span(instance: RCInstance, entity: frozenset[int]) -> AnswerSpan:
    words = tuple(instance.question[i].text for i in sorted(entity))
    hit = find_token_run(instance.context_tokens, words)
    if hit is None:
        raise InputError(
            f"{instance.id}: compared entity {' '.join(words)!r} not found in context"
        )
    start, end = hit, hit + len(words) - 1
    sent_idx = instance.sentence_of(start)
    if instance.sentence_of(end) != sent_idx:
        raise InputError(f"{instance.id}: entity span crosses a sentence boundary")
    return AnswerSpan(
        text=instance.span_surface(start, end),
        sentence_index=sent_idx,
        token_start=start,
        token_end=end,
    )


def perturb_comparison(
    instance: RCInstance,
    table: AntonymTable = IN_DISTRIBUTION_TABLE,
    replacement_index: int | None = None,
    choose_seed: int | None = None,
) -> CFPair:
    """Swap the comparative operator for an antonym and flip the gold answer.

    The replacement is the table's first candidate unless an explicit index
    or a seed (uniform choice) is given. Requires a two-entity comparison
    whose gold answer names one of the compared entities.
    """
    if instance.skill != "comparison" or instance.annotations is None:
        raise InputError(f"{instance.id}: antonym swap needs an annotated comparison instance")
    ann = instance.annotations
    old_surface = _question_surface(instance, ann.comparison_operator)
    key = " ".join(
        instance.question[i].text for i in sorted(ann.comparison_operator)
    ).casefold()
    replacements = table.entries.get(key)
    if replacements is None:
        raise InputError(f"{instance.id}: operator {key!r} not in the {table.distribution_tag} table")
    if replacement_index is None:
        if choose_seed is not None:
            replacement_index = int(
                np.random.default_rng(choose_seed).integers(len(replacements))
            )
        else:
            replacement_index = 0
    if not 0 <= replacement_index < len(replacements):
        raise InputError(f"{instance.id}: replacement index {replacement_index} out of range")
    new_surface = replacements[replacement_index]
    if len(ann.compared_entities) != 2:
        raise InputError(f"{instance.id}: antonym swap needs exactly two compared entities")
    gold_norms = {normalize_answer(a.text) for a in instance.gold_answers}
    entity_surfaces = [_question_surface(instance, e) for e in ann.compared_entities]
    matches = [i for i, s in enumerate(entity_surfaces) if normalize_answer(s) in gold_norms]
    if not matches:
        raise InputError(f"{instance.id}: gold answer names neither compared entity")
    other = ann.compared_entities[1 - matches[0]]
    new_gold = _entity_context_span(instance, other)
    op_hi = max(ann.comparison_operator)
    new_tokens, new_text, new_op, delta = _splice_question(
        instance, ann.comparison_operator, new_surface
    )
    new_ann = QuestionAnnotations(
        comparison_operator=new_op,
        compared_entities=tuple(
            _shift_indices(e, op_hi, delta) for e in ann.compared_entities
        ),
        value_tokens=_shift_indices(ann.value_tokens, op_hi, delta),
        verb_tokens=_shift_indices(ann.verb_tokens, op_hi, delta),
    )
    perturbed = replace(
        instance,
        id=f"{instance.id}::cf",
        question=new_tokens,
        question_text=new_text,
        gold_answers=(new_gold,),
        annotations=new_ann,
    )
    pair = CFPair(
        original=instance,
        perturbed=perturbed,
        perturbation="antonym_swap",
        distribution_tag=table.distribution_tag,
        replaced_operator=(old_surface, new_surface),
    )
    violations = validate_cf(pair)
    if violations:
        raise InputError(f"{instance.id}: generated pair is invalid: {'; '.join(violations)}")
    return pair


def _context_words(instance: RCInstance) -> list[str]:
    return [t.text for t in instance.context_tokens]


def _occurs_in_context(instance: RCInstance, text: str) -> bool:
    needle = tuple(t.text for t in tokenize(text))
    return bool(needle) and find_token_run(instance.context_tokens, needle) is not None


def validate_cf(pair: CFPair) -> list[str]:
    """All invariant violations of a CF pair; an empty list means valid."""
    violations: list[str] = []
    orig, pert = pair.original, pair.perturbed
    if pair.perturbation not in PERTURBATIONS:
        violations.append(f"unknown perturbation {pair.perturbation!r}")
    if pair.distribution_tag not in DISTRIBUTION_TAGS:
        violations.append(f"unknown distribution tag {pair.distribution_tag!r}")
    if not pert.gold_answers:
        return violations + ["perturbed instance has no gold answer"]
    orig_norms = {normalize_answer(a.text) for a in orig.gold_answers}
    if any(normalize_answer(a.text) in orig_norms for a in pert.gold_answers):
        violations.append("label did not change")
    for gold in orig.gold_answers:
        if not _occurs_in_context(pert, gold.text):
            violations.append(f"original answer {gold.text!r} missing from perturbed context")
            break
    for gold in pert.gold_answers:
        try:
            surface = pert.span_surface(gold.token_start, gold.token_end)
        except InputError as exc:
            violations.append(str(exc))
            continue
        if surface != gold.text:
            violations.append(f"new answer {gold.text!r} does not match its span")
    if pair.perturbation == "antonym_swap":
        if _context_words(orig) != _context_words(pert):
            violations.append("context changed under antonym swap")
        if pair.replaced_operator is None:
            violations.append("antonym swap lacks replaced_operator")
        else:
            old_op = tuple(t.text for t in tokenize(pair.replaced_operator[0]))
            new_op = tuple(t.text for t in tokenize(pair.replaced_operator[1]))
            o_hit = find_token_run(orig.question, old_op)
            p_hit = find_token_run(pert.question, new_op)
            if o_hit is None or p_hit is None or o_hit != p_hit:
                violations.append("operator positions do not line up")
            else:
                o_rest = [
                    t.text
                    for i, t in enumerate(orig.question)
                    if not o_hit <= i < o_hit + len(old_op)
                ]
                p_rest = [
                    t.text
                    for i, t in enumerate(pert.question)
                    if not p_hit <= i < p_hit + len(new_op)
                ]
                if o_rest != p_rest:
                    violations.append("question differs outside the operator")
    elif pair.perturbation == "cluster_insertion":
        if [t.text for t in orig.question] != [t.text for t in pert.question]:
            violations.append("question changed under cluster insertion")
        if _context_words(orig) == _context_words(pert):
            violations.append("context unchanged under cluster insertion")
    return violations


def _sentence_docs(instance: RCInstance) -> list[dict]:
    return [
        {"text": s.text, "supporting": s.is_supporting_fact, "paragraph_id": s.paragraph_id}
        for s in instance.context
    ]


def _context_from_docs(docs: Sequence[dict]) -> tuple[Sentence, ...]:
    sentences = []
    for doc in docs:
        toks = tokenize(doc["text"])
        if not toks:
            raise InputError("empty sentence in perturbed context")
        sentences.append(
            Sentence(
                tokens=toks,
                is_supporting_fact=bool(doc.get("supporting", False)),
                paragraph_id=str(doc.get("paragraph_id", "0")),
            )
        )
    return tuple(sentences)


def save_cf_pairs(pairs: Iterable[CFPair], path: str | Path) -> None:
    """Write pairs to the JSON-lines CF file format."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            gold = pair.perturbed.gold_answers[0]
            record: dict = {
                "original_id": pair.original.id,
                "perturbation": pair.perturbation,
                "new_answer": {
                    "text": gold.text,
                    "sent": gold.sentence_index,
                    "tok_start": gold.token_start,
                    "tok_end": gold.token_end,
                },
                "distribution_tag": pair.distribution_tag,
            }
            if pair.replaced_operator is not None:
                record["replaced_operator"] = list(pair.replaced_operator)
            if pair.perturbation == "cluster_insertion":
                record["perturbed_context"] = _sentence_docs(pair.perturbed)
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _pair_from_record(record: dict, original: RCInstance) -> CFPair:
    answer = record["new_answer"]
    gold = AnswerSpan(
        text=answer["text"],
        sentence_index=answer["sent"],
        token_start=answer["tok_start"],
        token_end=answer["tok_end"],
    )
    perturbation = record["perturbation"]
    if perturbation == "antonym_swap":
        old_surface, new_surface = record["replaced_operator"]
        old_op = tuple(t.text for t in tokenize(old_surface))
        hit = find_token_run(original.question, old_op)
        if hit is None:
            raise InputError(
                f"{original.id}: operator {old_surface!r} not found in the original question"
            )
        op_indices = frozenset(range(hit, hit + len(old_op)))
        ann = original.annotations or QuestionAnnotations(comparison_operator=op_indices)
        base = replace(original, annotations=replace(ann, comparison_operator=op_indices))
        new_tokens, new_text, new_op, delta = _splice_question(base, op_indices, new_surface)
        op_hi = max(op_indices)
        new_ann = QuestionAnnotations(
            comparison_operator=new_op,
            compared_entities=tuple(
                _shift_indices(e, op_hi, delta) for e in ann.compared_entities
            ),
            value_tokens=_shift_indices(ann.value_tokens, op_hi, delta),
            verb_tokens=_shift_indices(ann.verb_tokens, op_hi, delta),
        )
        perturbed = replace(
            original,
            id=f"{original.id}::cf",
            question=new_tokens,
            question_text=new_text,
            gold_answers=(gold,),
            annotations=new_ann,
        )
        return CFPair(
            original=original,
            perturbed=perturbed,
            perturbation="antonym_swap",
            distribution_tag=record["distribution_tag"],
            replaced_operator=(old_surface, new_surface),
        )
    if perturbation == "cluster_insertion":
        perturbed = replace(
            original,
            id=f"{original.id}::cf",
            context=_context_from_docs(record["perturbed_context"]),
            gold_answers=(gold,),
            coref_clusters=(),
            relevant_cluster=None,
        )
        return CFPair(
            original=original,
            perturbed=perturbed,
            perturbation="cluster_insertion",
            distribution_tag=record["distribution_tag"],
        )
    raise InputError(f"{original.id}: unknown perturbation {perturbation!r}")


def load_cf_pairs(path: str | Path, originals: Iterable[RCInstance]) -> list[CFPair]:
    """Read a CF file and rebuild validated pairs against their originals.

    Raises InputError listing every pair that fails validation.
    """
    by_id = {inst.id: inst for inst in originals}
    pairs: list[CFPair] = []
    bad: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: bad JSON on line {line_no + 1}: {exc}") from exc
            original_id = record.get("original_id")
            original = by_id.get(original_id)
            if original is None:
                raise InputError(f"{path}: unknown original instance {original_id!r}")
            try:
                pair = _pair_from_record(record, original)
            except (KeyError, TypeError) as exc:
                raise InputError(f"{path}: malformed record for {original_id!r}: {exc}") from exc
            violations = validate_cf(pair)
            if violations:
                bad.append(f"{original_id}: {'; '.join(violations)}")
                continue
            pairs.append(pair)
    if bad:
        raise InputError(f"{path}: invalid counterfactual pairs: " + " | ".join(bad))
    return pairs


def load_manual_coref_cf(path: str | Path, originals: Iterable[RCInstance]) -> list[CFPair]:
    """Load hand-authored cluster-insertion pairs (rejects other kinds)."""
    pairs = load_cf_pairs(path, originals)
    wrong = [p.original.id for p in pairs if p.perturbation != "cluster_insertion"]
    if wrong:
        raise InputError(f"{path}: non-coreference perturbations for {wrong}")
    return pairs


@dataclass(frozen=True)
class CFAccuracy:
    original: EvalResult
    perturbed: EvalResult
    both_correct: float


def cf_accuracy(gateway: ModelGateway, pairs: Sequence[CFPair]) -> CFAccuracy:
    """Evaluate a model on both members of every pair.

    Reports per-condition F1/EM plus the rate at which both the original
    and the perturbed instance are answered exactly correctly.
    """
    if not pairs:
        raise InputError("cf_accuracy requires at least one pair")
    stats = {"original": [0.0, 0], "perturbed": [0.0, 0]}
    both = 0
    for pair in pairs:
        correct = {}
        for condition, instance in (("original", pair.original), ("perturbed", pair.perturbed)):
            try:
                pred = predict(gateway, instance).predicted_span.text
            except GatewayError:
                raise
            except Exception as exc:
                raise GatewayError(f"{instance.id}: {exc}") from exc
            golds = [a.text for a in instance.gold_answers]
            stats[condition][0] += token_f1(pred, golds)
            correct[condition] = exact_match(pred, golds)
            stats[condition][1] += int(correct[condition])
        both += int(correct["original"] and correct["perturbed"])
    n = len(pairs)
    return CFAccuracy(
        original=EvalResult(f1=stats["original"][0] / n, exact_match=stats["original"][1] / n, n_instances=n),
        perturbed=EvalResult(f1=stats["perturbed"][0] / n, exact_match=stats["perturbed"][1] / n, n_instances=n),
        both_correct=both / n,
    )
