"""Inverted index construction, lookup and persistence."""

import random

import pytest

from strux.index import (DuplicateDocumentError, IndexFormatError, IndexHandle,
                         commit, open_index)
from strux.ingest import IngestConfig, parse_document


@pytest.fixture(scope="module")
def config():
    return IngestConfig()


def make_tree(config, xml: bytes, ref: str):
    return parse_document(xml, config, doc_ref=ref)


def test_single_token_posting(config):
    handle = IndexHandle()
    handle.index_document(make_tree(config, b"<a><b>cat</b></a>", "doc1"))
    postings = handle.lookup("cat")
    assert len(postings) == 1
    posting = postings[0]
    assert posting.doc_id == 0
    assert posting.position == 0
    assert posting.interval.low == 1 and posting.interval.high == 1
    assert handle.dictionary.path(posting.context_id) == ("a", "b")
    assert handle.stats.doc_freq["cat"] == 1


def test_repeated_stem_two_postings_one_docfreq(config):
    handle = IndexHandle()
    handle.index_document(make_tree(config, b"<a>cat fox cat</a>", "doc1"))
    assert len(handle.lookup("cat")) == 2
    assert handle.stats.doc_freq["cat"] == 1


def test_duplicate_doc_ref_rejected(config):
    handle = IndexHandle()
    handle.index_document(make_tree(config, b"<a>cat</a>", "doc1"))
    with pytest.raises(DuplicateDocumentError):
        handle.index_document(make_tree(config, b"<a>dog</a>", "doc1"))


def test_lookup_unknown_and_stopword(config):
    handle = IndexHandle()
    handle.index_document(make_tree(config, b"<a>the cat sat</a>", "doc1"))
    assert handle.lookup("unicorn") == []
    assert handle.lookup("the") == []


def test_lookup_sorted(config):
    handle = IndexHandle()
    handle.index_document(make_tree(config, b"<a>fox <b>fox</b> fox</a>", "doc1"))
    handle.index_document(make_tree(config, b"<a>fox</a>", "doc2"))
    postings = handle.lookup("fox")
    keys = [(p.doc_id, p.position) for p in postings]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_contexts_matching(config):
    handle = IndexHandle()
    handle.index_document(make_tree(
        config,
        b"<article><bm><bib><bibl><bb>citation</bb></bibl></bib></bm>"
        b"<fm><au>surname</au></fm></article>", "doc1"))
    ids = handle.contexts_matching(lambda path: path[-1] == "bb")
    assert len(ids) == 1
    assert all(handle.dictionary.path(i)[-1] == "bb" for i in ids)
    assert handle.contexts_matching(lambda path: True) == set(range(len(handle.dictionary)))
    assert handle.contexts_matching(lambda path: len(path) > 20) == set()


def test_empty_elements_add_no_context(config):
    handle = IndexHandle()
    handle.index_document(make_tree(config, b"<a><b>cat</b><empty/></a>", "doc1"))
    paths = {path for _, path in handle.dictionary.items()}
    assert paths == {("a", "b")}


def test_stats_recount_oracle(config):
    rng = random.Random(42)
    vocab = ["fox", "wolf", "crow", "lynx", "hare", "newt"]
    handle = IndexHandle()
    raw_docs = []
    for d in range(100):
        words = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
        raw_docs.append(set(words))
        xml = f"<a><b>{' '.join(words)}</b></a>".encode()
        handle.index_document(make_tree(config, xml, f"doc{d}"))
    for term in vocab:
        expected = sum(1 for words in raw_docs if term in words)
        assert handle.stats.doc_freq.get(term, 0) == expected
    assert handle.stats.total_docs == 100
    # recount from raw postings
    for term in vocab:
        docs = {p.doc_id for p in handle.lookup(term)}
        assert len(docs) == handle.stats.doc_freq.get(term, 0)


# --- persistence ------------------------------------------------------------

def build_sample(config, n=3):
    handle = IndexHandle()
    texts = [b"<a><b>cat dog</b><c>bird</c></a>",
             b"<a><b>dog</b></a>",
             b"<a><c>cat cat fish</c></a>"]
    for i in range(n):
        handle.index_document(make_tree(config, texts[i % 3], f"doc{i}"))
    return handle


def test_commit_roundtrip(config, tmp_path):
    handle = build_sample(config)
    commit(handle, tmp_path / "idx")
    reopened = open_index(tmp_path / "idx")
    for stem in ("cat", "dog", "bird", "fish", "absent"):
        assert reopened.lookup(stem) == handle.lookup(stem)
    assert dict(reopened.dictionary.items()) == dict(handle.dictionary.items())
    assert reopened.stats.doc_freq == handle.stats.doc_freq
    assert reopened.stats.total_docs == handle.stats.total_docs
    assert reopened.doc_table == handle.doc_table
    predicate = lambda path: path[-1] == "b"
    assert reopened.contexts_matching(predicate) == handle.contexts_matching(predicate)


def test_commit_empty_fails(config, tmp_path):
    with pytest.raises(IndexFormatError):
        commit(IndexHandle(), tmp_path / "idx")


def test_commit_refuses_existing_directory(config, tmp_path):
    handle = build_sample(config)
    target = tmp_path / "idx"
    target.mkdir()
    with pytest.raises(IndexFormatError):
        commit(handle, target)


def test_committed_handle_rejects_writes(config, tmp_path):
    handle = build_sample(config)
    commit(handle, tmp_path / "idx")
    with pytest.raises(IndexFormatError):
        handle.index_document(make_tree(config, b"<a>late</a>", "late"))


def test_corrupt_version_detected(config, tmp_path):
    handle = build_sample(config)
    commit(handle, tmp_path / "idx")
    (tmp_path / "idx" / "VERSION").write_text("strux-index 999\n", "utf-8")
    with pytest.raises(IndexFormatError, match="format"):
        open_index(tmp_path / "idx")


def test_missing_version_detected(tmp_path):
    (tmp_path / "idx").mkdir()
    with pytest.raises(IndexFormatError):
        open_index(tmp_path / "idx")


def test_corrupt_terms_file_detected(config, tmp_path):
    handle = build_sample(config)
    commit(handle, tmp_path / "idx")
    kv = tmp_path / "idx" / "terms.kv"
    kv.write_bytes(b"JUNK" + kv.read_bytes()[4:])
    with pytest.raises(IndexFormatError, match="magic"):
        open_index(tmp_path / "idx")


def test_truncated_terms_file_detected(config, tmp_path):
    handle = build_sample(config)
    commit(handle, tmp_path / "idx")
    kv = tmp_path / "idx" / "terms.kv"
    kv.write_bytes(kv.read_bytes()[:-7])
    with pytest.raises(IndexFormatError):
        open_index(tmp_path / "idx")


def test_index_files_documented_layout(config, tmp_path):
    handle = build_sample(config)
    commit(handle, tmp_path / "idx")
    names = {p.name for p in (tmp_path / "idx").iterdir()}
    assert names == {"VERSION", "terms.kv", "contexts.tsv", "stats.tsv", "docs.tsv"}
    assert (tmp_path / "idx" / "VERSION").read_text("utf-8").strip() == "strux-index 1"
    # human-readable tsv side files
    stats_lines = (tmp_path / "idx" / "stats.tsv").read_text("utf-8").splitlines()
    assert all(len(line.split("\t")) == 2 for line in stats_lines)
    assert stats_lines == sorted(stats_lines)


def test_index_size_small_multiple_of_input(config, tmp_path):
    rng = random.Random(8)
    vocab = ["retrieval", "index", "vector", "kernel", "matrix", "parser",
             "token", "stream", "filter", "buffer", "signal", "window"]
    corpus_bytes = 0
    handle = IndexHandle()
    for d in range(60):
        sections = []
        for _ in range(rng.randint(2, 5)):
            words = " ".join(rng.choice(vocab) for _ in range(rng.randint(10, 30)))
            sections.append(f"<sec><p>{words}</p></sec>")
        xml = f"<article><bdy>{''.join(sections)}</bdy></article>".encode()
        corpus_bytes += len(xml)
        handle.index_document(make_tree(config, xml, f"doc{d}"))
    commit(handle, tmp_path / "idx")
    index_bytes = sum(p.stat().st_size for p in (tmp_path / "idx").iterdir())
    assert index_bytes < 4 * corpus_bytes, (index_bytes, corpus_bytes)
