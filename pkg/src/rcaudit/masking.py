"""Word-level input perturbation: replace words with a model's mask token.

Word positions use the combined ordering the saliency engine works in:
question words 0..n_q-1 first, then the flattened context words. Masking
never changes token counts (a word is swapped for one mask word), so all
token indices, partitions, and answer spans stay valid; span texts are
recomputed against the edited surface.
"""

from __future__ import annotations

from dataclasses import replace

from .errors import InputError
from .text import tokens_from_words
from .types import AnswerSpan, RCInstance, Sentence


def _rebuilt_sentence(sent: Sentence, words: list[str]) -> Sentence:
    return Sentence(
        tokens=tokens_from_words(words),
        is_supporting_fact=sent.is_supporting_fact,
        paragraph_id=sent.paragraph_id,
    )


def _refresh_spans(instance: RCInstance) -> RCInstance:
    def fix(span: AnswerSpan) -> AnswerSpan:
        return replace(span, text=instance.span_surface(span.token_start, span.token_end))

    return replace(
        instance,
        gold_answers=tuple(fix(a) for a in instance.gold_answers),
        coref_clusters=tuple(tuple(fix(m) for m in c) for c in instance.coref_clusters),
    )


def mask_word(instance: RCInstance, position: int, mask_token: str = "[MASK]") -> RCInstance:
    """Replace one word (combined question-then-context position) with the mask."""
    n_q = instance.n_question
    if not 0 <= position < n_q + instance.n_context:
        raise InputError(f"{instance.id}: word position {position} out of range")
    if position < n_q:
        words = [t.text for t in instance.question]
        words[position] = mask_token
        return replace(
            instance, question=tokens_from_words(words), question_text=" ".join(words)
        )
    flat = position - n_q
    s_idx = instance.sentence_of(flat)
    local = flat - instance.sentence_offsets[s_idx]
    sent = instance.context[s_idx]
    words = [t.text for t in sent.tokens]
    words[local] = mask_token
    context = list(instance.context)
    context[s_idx] = _rebuilt_sentence(sent, words)
    return _refresh_spans(replace(instance, context=tuple(context)))


def mask_all(instance: RCInstance, mask_token: str = "[MASK]") -> RCInstance:
    """Replace every question and context word with the mask token."""
    q_words = [mask_token] * instance.n_question
    context = tuple(
        _rebuilt_sentence(sent, [mask_token] * len(sent.tokens)) for sent in instance.context
    )
    return _refresh_spans(
        replace(
            instance,
            question=tokens_from_words(q_words),
            question_text=" ".join(q_words),
            context=context,
        )
    )
