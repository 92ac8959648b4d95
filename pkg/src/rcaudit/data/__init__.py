"""Bundled fixture data shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def _data_path(name: str) -> Path:
    with resources.as_file(resources.files(__name__) / name) as path:
        return path


def fixture_corpus_path() -> Path:
    """Path of the bundled 20-instance audit corpus (JSON lines)."""
    return _data_path("fixture_corpus.jsonl")


def coref_cf_pairs_path() -> Path:
    """Path of the bundled manual coreference counterfactual pairs."""
    return _data_path("coref_cf_pairs.jsonl")
