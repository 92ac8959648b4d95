"""Unified on-disk instance schema (UTF-8 JSON lines).

One instance per line:

    {"id": ..., "question": {"text": ..., "tokens": [{"text","start","end"}]},
     "context": [{"paragraph_id", "supporting", "tokens": [...]}],
     "answers": [{"text","sent","tok_start","tok_end"}],
     "skill": ..., "annotations": {...}?, "coref_clusters": [[span...]]?}

Loading a file written by `save_jsonl` reproduces the in-memory instances
exactly, field for field.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from ..errors import InputError
from ..types import (
    AnswerSpan,
    QuestionAnnotations,
    RCInstance,
    Sentence,
    Token,
    validate_instance,
)


def _tokens_to_dicts(tokens: tuple[Token, ...]) -> list[dict]:
    return [{"text": t.text, "start": t.char_start, "end": t.char_end} for t in tokens]


def _tokens_from_dicts(items: list[dict]) -> tuple[Token, ...]:
    return tuple(
        Token(text=d["text"], index=i, char_start=d["start"], char_end=d["end"])
        for i, d in enumerate(items)
    )


def _span_to_dict(span: AnswerSpan) -> dict:
    return {
        "text": span.text,
        "sent": span.sentence_index,
        "tok_start": span.token_start,
        "tok_end": span.token_end,
    }


def _span_from_dict(d: dict) -> AnswerSpan:
    return AnswerSpan(
        text=d["text"],
        sentence_index=d["sent"],
        token_start=d["tok_start"],
        token_end=d["tok_end"],
    )


def instance_to_dict(instance: RCInstance) -> dict:
    doc: dict = {
        "id": instance.id,
        "question": {
            "text": instance.question_text,
            "tokens": _tokens_to_dicts(instance.question),
        },
        "context": [
            {
                "paragraph_id": s.paragraph_id,
                "supporting": s.is_supporting_fact,
                "tokens": _tokens_to_dicts(s.tokens),
            }
            for s in instance.context
        ],
        "answers": [_span_to_dict(a) for a in instance.gold_answers],
        "skill": instance.skill,
    }
    ann: dict = {}
    if instance.annotations is not None:
        qa = instance.annotations
        ann = {
            "comparison_operator": sorted(qa.comparison_operator),
            "compared_entities": [sorted(e) for e in qa.compared_entities],
            "value_tokens": sorted(qa.value_tokens),
            "verb_tokens": sorted(qa.verb_tokens),
        }
    if instance.relevant_cluster is not None:
        ann["relevant_cluster"] = instance.relevant_cluster
    if instance.unannotatable:
        ann["unannotatable"] = True
    if ann:
        doc["annotations"] = ann
    if instance.coref_clusters:
        doc["coref_clusters"] = [
            [_span_to_dict(m) for m in cluster] for cluster in instance.coref_clusters
        ]
    return doc


def instance_from_dict(doc: dict) -> RCInstance:
    try:
        ann_doc = doc.get("annotations") or {}
        annotations = None
        if any(
            key in ann_doc
            for key in ("comparison_operator", "compared_entities", "value_tokens", "verb_tokens")
        ):
            annotations = QuestionAnnotations(
                comparison_operator=frozenset(ann_doc.get("comparison_operator", ())),
                compared_entities=tuple(
                    frozenset(e) for e in ann_doc.get("compared_entities", ())
                ),
                value_tokens=frozenset(ann_doc.get("value_tokens", ())),
                verb_tokens=frozenset(ann_doc.get("verb_tokens", ())),
            )
        return RCInstance(
            id=doc["id"],
            question=_tokens_from_dicts(doc["question"]["tokens"]),
            question_text=doc["question"]["text"],
            context=tuple(
                Sentence(
                    tokens=_tokens_from_dicts(s["tokens"]),
                    is_supporting_fact=bool(s["supporting"]),
                    paragraph_id=str(s["paragraph_id"]),
                )
                for s in doc["context"]
            ),
            gold_answers=tuple(_span_from_dict(a) for a in doc["answers"]),
            skill=doc.get("skill", "other"),
            annotations=annotations,
            coref_clusters=tuple(
                tuple(_span_from_dict(m) for m in cluster)
                for cluster in doc.get("coref_clusters", ())
            ),
            relevant_cluster=ann_doc.get("relevant_cluster"),
            unannotatable=bool(ann_doc.get("unannotatable", False)),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed instance record: {exc}") from exc


def save_jsonl(instances: Iterable[RCInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for instance in instances:
            fh.write(json.dumps(instance_to_dict(instance), ensure_ascii=False) + "\n")


def load_jsonl(path: str | Path, validate: bool = True) -> list[RCInstance]:
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: bad JSON on line {line_no + 1}: {exc}") from exc
            instance = instance_from_dict(doc)
            if validate:
                validate_instance(instance)
            instances.append(instance)
    return instances
