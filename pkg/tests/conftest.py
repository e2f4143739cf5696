from __future__ import annotations

import json
from pathlib import Path

import pytest

from sociolens.engine import Engine
from sociolens.model import Platform, parse_record

import synth

DATA_DIR = Path(__file__).resolve().parent / "data"


@pytest.fixture()
def dataset_root(tmp_path):
    root = tmp_path / "datasets"
    root.mkdir()
    return root


@pytest.fixture(scope="session")
def small_corpus_records():
    return synth.twitter_corpus(n_posts=600, seed=11, n_users=60)


@pytest.fixture(scope="session")
def small_corpus_posts(small_corpus_records):
    return [
        parse_record(json.dumps(r), i)
        for i, r in enumerate(small_corpus_records, start=1)
    ]


@pytest.fixture()
def twitter_engine(dataset_root):
    return Engine.create(dataset_root, "tw", Platform.TWITTER)


@pytest.fixture()
def youtube_engine(dataset_root):
    return Engine.create(dataset_root, "yt", Platform.YOUTUBE)
