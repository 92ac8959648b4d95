"""Saliency engine: occlusion vs a hand-rolled oracle, IG closed forms, cache."""

from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import build_instance
from oracle_helpers import LinearStartGateway, oracle_occlusion
from rcaudit.errors import InputError
from rcaudit.gateway import build_gateway
from rcaudit.gateway.base import ModelGateway
from rcaudit.masking import mask_all
from rcaudit.saliency import (
    SaliencyCache,
    SaliencyConfig,
    SaliencyMap,
    compute_saliency,
    ig_saliency,
    occlusion_saliency,
    restrict_map,
    summarize,
)
from rcaudit.synthetic import make_synthetic_corpus


class CountingGateway(ModelGateway):
    """Wraps another gateway and counts predict calls."""

    def __init__(self, inner: ModelGateway) -> None:
        self.inner = inner
        self.predict_calls = 0

    @property
    def model_id(self) -> str:
        return self.inner.model_id

    @property
    def baseline_token(self) -> str:
        return self.inner.baseline_token

    def predict(self, instance):
        self.predict_calls += 1
        return self.inner.predict(instance)

    def embed(self, instance):
        return self.inner.embed(instance)

    def grad_start(self, instance, embeddings, target_position):
        return self.inner.grad_start(instance, embeddings, target_position)


class TestOcclusion:
    def test_matches_independent_two_pass_oracle(self):
        gateway = build_gateway("toy:5")
        for inst in make_synthetic_corpus(25, seed=11):
            saliency = occlusion_saliency(gateway, inst)
            anchor, scores = oracle_occlusion(gateway, inst)
            assert saliency.anchor_position == anchor
            assert list(saliency.scores) == scores  # bit-identical, not approx
            assert saliency.scope == "all"
            assert saliency.n_question == inst.n_question

    def test_scripted_sensitivities_are_recovered_exactly(self, tmp_path):
        inst = build_instance(
            "sal-1",
            "Who carried the lantern?",
            ["Mira Solis carried the lantern.", "The night was cold."],
            gold=(0, "Mira Solis"),
        )
        n_words = inst.n_question + inst.n_context
        sensitivity = [round(0.01 * (k + 1), 4) for k in range(n_words)]
        script = {
            "name": "sal",
            "instances": {"sal-1": {"answer": [0, 1], "base": 0.9, "sensitivity": sensitivity}},
        }
        path = tmp_path / "script.json"
        path.write_text(json.dumps(script))
        saliency = occlusion_saliency(build_gateway(f"scripted:{path}"), inst)
        assert list(saliency.scores) == pytest.approx(sensitivity, abs=1e-12)

    def test_position_locked_model_scores_zero_everywhere(self, corpus):
        gateway = build_gateway("oracle")
        saliency = occlusion_saliency(gateway, corpus[0])
        assert set(saliency.scores) == {0.0}


class TestIntegratedGradients:
    def test_linear_model_has_closed_form(self, corpus):
        gateway = LinearStartGateway()
        for inst in corpus[:4]:
            embeddings = gateway.embed(inst)
            baseline = gateway.embed(mask_all(inst, gateway.baseline_token))
            grad = gateway.constant_grad(embeddings.shape[0])
            expected = ((embeddings - baseline) * grad).sum(axis=1)
            for m in (1, 5, 50):
                config = SaliencyConfig(
                    method="integrated_gradients", ig_steps=m, summarizer="dot"
                )
                saliency = ig_saliency(gateway, inst, config)
                assert np.max(np.abs(np.asarray(saliency.scores) - expected)) <= 1e-9

    def test_completeness_against_probability_difference(self, corpus):
        gateway = build_gateway("toy:7")
        for inst in corpus[:3]:
            out = gateway.predict(inst)
            anchor = int(np.argmax(out.start_scores))
            blank = gateway.predict(mask_all(inst, gateway.baseline_token))
            target_gap = float(out.start_scores[anchor]) - float(blank.start_scores[anchor])
            config = SaliencyConfig(method="integrated_gradients", ig_steps=2048, summarizer="dot")
            saliency = ig_saliency(gateway, inst, config)
            assert abs(sum(saliency.scores) - target_gap) <= 1e-3

    def test_more_steps_shrink_completeness_error(self, corpus):
        gateway = build_gateway("toy:7")
        inst = corpus[0]
        out = gateway.predict(inst)
        anchor = int(np.argmax(out.start_scores))
        blank = gateway.predict(mask_all(inst, gateway.baseline_token))
        target_gap = float(out.start_scores[anchor]) - float(blank.start_scores[anchor])

        def err(steps):
            config = SaliencyConfig(
                method="integrated_gradients", ig_steps=steps, summarizer="dot"
            )
            return abs(sum(ig_saliency(gateway, inst, config).scores) - target_gap)

        assert err(64) > err(2048)

    def test_summarizer_changes_scores_not_anchor(self, corpus):
        gateway = build_gateway("toy:7")
        inst = corpus[0]
        by_kind = {
            kind: ig_saliency(
                gateway,
                inst,
                SaliencyConfig(method="integrated_gradients", ig_steps=8, summarizer=kind),
            )
            for kind in ("l2", "l1", "dot")
        }
        anchors = {s.anchor_position for s in by_kind.values()}
        assert len(anchors) == 1
        assert all(s >= 0 for s in by_kind["l2"].scores)
        assert all(s >= 0 for s in by_kind["l1"].scores)
        assert by_kind["l1"].scores != by_kind["l2"].scores


class TestSummarize:
    def test_worked_examples(self):
        assert summarize(np.array([3.0, 4.0]), "l2") == 5.0
        assert summarize(np.array([3.0, -4.0]), "l1") == 7.0
        assert summarize(np.array([3.0, -4.0]), "dot") == -1.0

    def test_rejects_empty_and_unknown(self):
        with pytest.raises(InputError):
            summarize(np.array([]), "l2")
        with pytest.raises(InputError):
            summarize(np.array([1.0]), "max")


class TestRestrictMap:
    def make_map(self, n_question=3, total=8):
        return SaliencyMap(
            instance_id="x",
            scope="all",
            scores=tuple(float(i) for i in range(total)),
            method="occlusion",
            config_hash="abc",
            model_id="toy:0",
            anchor_position=0,
            n_question=n_question,
        )

    def test_slices_question_and_context(self):
        full = self.make_map()
        q = restrict_map(full, "question_tokens")
        c = restrict_map(full, "context_tokens")
        assert q.scores == (0.0, 1.0, 2.0)
        assert c.scores == (3.0, 4.0, 5.0, 6.0, 7.0)
        assert q.scope == "question_tokens" and c.scope == "context_tokens"
        assert restrict_map(full, "all") is full

    def test_cannot_restrict_a_restricted_map(self):
        q = restrict_map(self.make_map(), "question_tokens")
        with pytest.raises(InputError):
            restrict_map(q, "context_tokens")

    def test_empty_slice_is_an_error(self):
        no_question = self.make_map(n_question=0)
        with pytest.raises(InputError):
            restrict_map(no_question, "question_tokens")


class TestConfig:
    def test_validation(self):
        with pytest.raises(InputError):
            SaliencyConfig(method="lime")
        with pytest.raises(InputError):
            SaliencyConfig(summarizer="max")
        with pytest.raises(InputError):
            SaliencyConfig(method="integrated_gradients", ig_steps=0)
        with pytest.raises(InputError):
            SaliencyConfig(baseline_policy="zeros")

    def test_hash_tracks_settings(self):
        a = SaliencyConfig(method="integrated_gradients", ig_steps=50)
        b = SaliencyConfig(method="integrated_gradients", ig_steps=64)
        assert a.config_hash != b.config_hash
        assert a.config_hash == SaliencyConfig(method="integrated_gradients", ig_steps=50).config_hash


class TestCache:
    def test_get_or_compute_hits_after_first_call(self, corpus):
        gateway = CountingGateway(build_gateway("toy:7"))
        cache = SaliencyCache()
        config = SaliencyConfig(method="occlusion")
        inst = corpus[0]
        first = cache.get_or_compute(gateway, inst, config)
        calls = gateway.predict_calls
        assert calls == 1 + inst.n_question + inst.n_context
        second = cache.get_or_compute(gateway, inst, config)
        assert gateway.predict_calls == calls  # no recomputation
        assert second is first
        assert len(cache) == 1

    def test_keys_separate_methods_and_models(self, corpus):
        gateway = build_gateway("toy:7")
        cache = SaliencyCache()
        inst = corpus[0]
        occ = SaliencyConfig(method="occlusion")
        ig = SaliencyConfig(method="integrated_gradients", ig_steps=4)
        cache.get_or_compute(gateway, inst, occ)
        cache.get_or_compute(gateway, inst, ig)
        assert len(cache) == 2
        assert cache.get("toy:7", occ, inst.id) is not None
        assert cache.get("toy:9", occ, inst.id) is None

    def test_file_round_trip_is_bit_identical(self, tmp_path, corpus):
        gateway = build_gateway("toy:7")
        cache = SaliencyCache()
        for inst in corpus[:3]:
            cache.get_or_compute(gateway, inst, SaliencyConfig(method="occlusion"))
            cache.get_or_compute(
                gateway, inst, SaliencyConfig(method="integrated_gradients", ig_steps=4)
            )
        first = tmp_path / "cache.jsonl"
        cache.save(first)
        loaded = SaliencyCache.load(first)
        assert len(loaded) == len(cache)
        for saliency in cache.maps():
            again = loaded.get(
                saliency.model_id,
                SaliencyConfig(
                    method=saliency.method,
                    ig_steps=4 if saliency.method == "integrated_gradients" else 50,
                ),
                saliency.instance_id,
            )
            assert again is not None
            assert again.scores == saliency.scores  # exact float round trip
            assert again.anchor_position == saliency.anchor_position
        second = tmp_path / "cache2.jsonl"
        loaded.save(second)
        assert first.read_bytes() == second.read_bytes()

    def test_load_rejects_malformed_records(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"model_id": "toy:7"}\n')
        with pytest.raises(InputError, match="line 1"):
            SaliencyCache.load(path)

    def test_compute_saliency_dispatches_on_method(self, corpus):
        gateway = build_gateway("toy:7")
        inst = corpus[0]
        occ = compute_saliency(gateway, inst, SaliencyConfig(method="occlusion"))
        ig = compute_saliency(
            gateway, inst, SaliencyConfig(method="integrated_gradients", ig_steps=4)
        )
        assert occ.method == "occlusion"
        assert ig.method == "integrated_gradients"
