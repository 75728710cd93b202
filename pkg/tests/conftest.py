"""Shared fixtures: a small 5-document corpus for end-to-end tests.

Document roles (the scenario behind the complex bibliography topic):
  d1  complete: a bb citation of baeza-yates naming string matching,
      secs about string matching and about approximate algorithms
  d2  no baeza-yates citation
  d3  no string-matching section (and its citation lacks the title words)
  d4  no approximate-algorithm section
  d5  unrelated filler
"""

from __future__ import annotations

from pathlib import Path

import pytest

from strux.index import IndexHandle, commit, open_index
from strux.ingest import IngestConfig, parse_document

CORPUS = {
    "d1.xml": (
        "<article><bdy>"
        "<sec>an approximate algorithm for approximate string matching</sec>"
        "<sec>string matching with an algorithm zoo</sec>"
        "<sec>as shown in <bb>baeza yates string matching essentials</bb> we proceed</sec>"
        "</bdy><bm><bib>"
        "<bb>baeza yates string matching chapter</bb>"
        "</bib></bm></article>"
    ),
    "d2.xml": (
        "<article><bdy>"
        "<sec>approximate algorithm analysis</sec>"
        "<sec>string matching by hashing</sec>"
        "</bdy><bm><bib>"
        "<bb>knuth morris pratt fast pattern matching</bb>"
        "</bib></bm></article>"
    ),
    "d3.xml": (
        "<article><bdy>"
        "<sec>an approximate algorithm for routing</sec>"
        "</bdy><bm><bib>"
        "<bb>baeza yates fast text searching</bb>"
        "</bib></bm></article>"
    ),
    "d4.xml": (
        "<article><bdy>"
        "<sec>string matching by automata</sec>"
        "</bdy><bm><bib>"
        "<bb>baeza yates string matching volume</bb>"
        "</bib></bm></article>"
    ),
    "d5.xml": (
        "<article><bdy>"
        "<sec>sorting networks and their depth</sec>"
        "</bdy></article>"
    ),
}

TOPIC_280 = (
    "//article[ about(./bb, Baeza-Yates) and about(./sec, string matching)]"
    "//sec[about(., approximate algorithm)]"
)


@pytest.fixture(scope="session")
def ingest_config() -> IngestConfig:
    return IngestConfig()


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus")
    for name, text in CORPUS.items():
        (root / name).write_text(text, "utf-8")
    return root


@pytest.fixture(scope="session")
def corpus_index(corpus_dir, ingest_config, tmp_path_factory) -> IndexHandle:
    handle = IndexHandle()
    for name in sorted(CORPUS):
        path = corpus_dir / name
        tree = parse_document(path.read_bytes(), ingest_config, doc_ref=str(path))
        handle.index_document(tree)
    index_dir = tmp_path_factory.mktemp("indexes") / "corpus"
    commit(handle, index_dir)
    return open_index(index_dir)
