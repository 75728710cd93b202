"""Contextual inverted index with on-disk persistence.

Each posting records where a stem occurred: document, context (the
root-to-node tag path of the owning element), token position within the
document, and the owning element's preorder interval.  Corpus statistics
track document frequency per stem.

Index directory layout (format version 1):

  VERSION       "strux-index 1"
  terms.kv      ordered key/value file: magic "SXKV", u32 entry count,
                then per stem (ascending byte order): u32 key length,
                key bytes (UTF-8), u32 value length, value bytes.  The
                value is u32 posting count followed by 5 x u32 per
                posting: doc_id, context_id, position, low, high.
                All integers little-endian.
  contexts.tsv  `id<TAB>/tag/tag/...` per line, ids ascending
  stats.tsv     `stem<TAB>doc_freq` per line, sorted by stem
  docs.tsv      `doc_id<TAB>source locator` per line, ids ascending

Commits write to a temporary sibling directory and rename it into
place, so a partial write never yields a readable half-index.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .ingest import ContextPath, DocumentTree, NodeInterval

FORMAT_VERSION = "strux-index 1"
_KV_MAGIC = b"SXKV"
_U32 = struct.Struct("<I")
_POSTING = struct.Struct("<IIIII")


class IndexFormatError(ValueError):
    """Unreadable, corrupt or version-mismatched index data."""


class DuplicateDocumentError(ValueError):
    """A document with the same source locator was already indexed."""


@dataclass(frozen=True)
class PostingEntry:
    doc_id: int
    context_id: int
    position: int
    interval: NodeInterval

    @property
    def node_id(self) -> int:
        return self.interval.low


class ContextDictionary:
    """Dense-id bijection between context ids and context paths."""

    def __init__(self):
        self._by_id: list[ContextPath] = []
        self._by_path: dict[ContextPath, int] = {}

    def __len__(self) -> int:
        return len(self._by_id)

    def intern(self, path: ContextPath) -> int:
        context_id = self._by_path.get(path)
        if context_id is None:
            context_id = len(self._by_id)
            self._by_id.append(path)
            self._by_path[path] = context_id
        return context_id

    def path(self, context_id: int) -> ContextPath:
        return self._by_id[context_id]

    def id_of(self, path: ContextPath) -> int | None:
        return self._by_path.get(path)

    def items(self) -> Iterable[tuple[int, ContextPath]]:
        return enumerate(self._by_id)


@dataclass
class CorpusStats:
    total_docs: int = 0
    doc_freq: dict[str, int] = field(default_factory=dict)

    def freq(self, stem: str) -> int:
        return self.doc_freq.get(stem, 0)


class IndexHandle:
    """In-memory view of the index; writable until committed/opened."""

    def __init__(self):
        self.term_lists: dict[str, list[PostingEntry]] = {}
        self.dictionary = ContextDictionary()
        self.stats = CorpusStats()
        self.doc_table: dict[int, str] = {}
        self.writable = True
        self._doc_ids: dict[str, int] = {}
        self._positions_cache: dict[int, dict[int, set[int]]] | None = None

    def doc_count(self) -> int:
        return len(self.doc_table)

    def index_document(self, tree: DocumentTree) -> int:
        if not self.writable:
            raise IndexFormatError("index is committed and read-only")
        if tree.doc_ref in self._doc_ids:
            raise DuplicateDocumentError(f"already indexed: {tree.doc_ref}")
        doc_id = len(self.doc_table)
        self.doc_table[doc_id] = tree.doc_ref
        self._doc_ids[tree.doc_ref] = doc_id
        doc_entries: dict[str, list[PostingEntry]] = {}
        for node in tree.nodes:
            if not node.tokens:
                continue
            context_id = self.dictionary.intern(tree.context_of(node.node_id))
            for token in node.tokens:
                entry = PostingEntry(doc_id, context_id, token.position, node.interval)
                doc_entries.setdefault(token.stem, []).append(entry)
        # doc ids grow monotonically, so sorting the per-document slice by
        # position keeps every term list globally (doc_id, position)-sorted
        for stem, entries in doc_entries.items():
            entries.sort(key=lambda p: p.position)
            self.term_lists.setdefault(stem, []).extend(entries)
            self.stats.doc_freq[stem] = self.stats.doc_freq.get(stem, 0) + 1
        self.stats.total_docs = len(self.doc_table)
        self._positions_cache = None
        return doc_id

    def lookup(self, stem: str) -> list[PostingEntry]:
        """All postings for a stem sorted by (doc_id, position)."""
        return self.term_lists.get(stem, [])

    def contexts_matching(self, predicate: Callable[[ContextPath], bool]) -> set[int]:
        return {cid for cid, path in self.dictionary.items() if predicate(path)}

    def owned_positions(self, doc_id: int, node_id: int) -> set[int]:
        """Token positions owned directly by one element (lazy, cached)."""
        if self._positions_cache is None:
            cache: dict[int, dict[int, set[int]]] = {}
            for postings in self.term_lists.values():
                for posting in postings:
                    doc = cache.setdefault(posting.doc_id, {})
                    doc.setdefault(posting.node_id, set()).add(posting.position)
            self._positions_cache = cache
        return self._positions_cache.get(doc_id, {}).get(node_id, set())


def index_document(handle: IndexHandle, tree: DocumentTree) -> IndexHandle:
    handle.index_document(tree)
    return handle


def commit(handle: IndexHandle, directory: str | Path) -> Path:
    """Persist the handle to a new index directory, atomically."""
    if handle.doc_count() == 0:
        raise IndexFormatError("refusing to commit an empty index")
    directory = Path(directory)
    if directory.exists():
        raise IndexFormatError(f"index directory already exists: {directory}")
    directory.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=directory.name + ".tmp-", dir=directory.parent))
    try:
        (staging / "VERSION").write_text(FORMAT_VERSION + "\n", "utf-8")
        _write_terms(staging / "terms.kv", handle.term_lists)
        with open(staging / "contexts.tsv", "w", encoding="utf-8") as out:
            for cid, path in handle.dictionary.items():
                out.write(f"{cid}\t/{'/'.join(path)}\n")
        with open(staging / "stats.tsv", "w", encoding="utf-8") as out:
            for stem in sorted(handle.stats.doc_freq):
                out.write(f"{stem}\t{handle.stats.doc_freq[stem]}\n")
        with open(staging / "docs.tsv", "w", encoding="utf-8") as out:
            for doc_id in sorted(handle.doc_table):
                out.write(f"{doc_id}\t{handle.doc_table[doc_id]}\n")
        os.replace(staging, directory)
    except OSError:
        _cleanup(staging)
        raise
    handle.writable = False
    return directory


def _cleanup(staging: Path) -> None:
    if staging.exists():
        for child in staging.iterdir():
            child.unlink()
        staging.rmdir()


def _write_terms(path: Path, term_lists: dict[str, list[PostingEntry]]) -> None:
    with open(path, "wb") as out:
        out.write(_KV_MAGIC)
        out.write(_U32.pack(len(term_lists)))
        for stem in sorted(term_lists):
            key = stem.encode("utf-8")
            postings = term_lists[stem]
            value = bytearray(_U32.pack(len(postings)))
            for p in postings:
                value += _POSTING.pack(p.doc_id, p.context_id, p.position,
                                       p.interval.low, p.interval.high)
            out.write(_U32.pack(len(key)))
            out.write(key)
            out.write(_U32.pack(len(value)))
            out.write(value)


def _read_terms(path: Path) -> dict[str, list[PostingEntry]]:
    data = path.read_bytes()
    if data[:4] != _KV_MAGIC:
        raise IndexFormatError(f"{path}: bad magic, not a terms.kv file")
    (count,) = _U32.unpack_from(data, 4)
    offset = 8
    term_lists: dict[str, list[PostingEntry]] = {}
    previous_key = None
    for _ in range(count):
        try:
            (klen,) = _U32.unpack_from(data, offset)
            offset += 4
            key = data[offset:offset + klen].decode("utf-8")
            offset += klen
            (vlen,) = _U32.unpack_from(data, offset)
            offset += 4
            value = data[offset:offset + vlen]
            if len(value) != vlen:
                raise IndexFormatError(f"{path}: truncated value for {key!r}")
            offset += vlen
            (n,) = _U32.unpack_from(value, 0)
            postings = []
            for i in range(n):
                doc_id, context_id, position, low, high = _POSTING.unpack_from(value, 4 + 20 * i)
                postings.append(PostingEntry(doc_id, context_id, position,
                                             NodeInterval(low, high)))
        except struct.error as exc:
            raise IndexFormatError(f"{path}: truncated record") from exc
        if previous_key is not None and key <= previous_key:
            raise IndexFormatError(f"{path}: keys out of order at {key!r}")
        previous_key = key
        term_lists[key] = postings
    return term_lists


def open_index(directory: str | Path) -> IndexHandle:
    """Load a committed index; the returned handle is read-only."""
    directory = Path(directory)
    version_file = directory / "VERSION"
    if not version_file.exists():
        raise IndexFormatError(f"not an index directory: {directory}")
    version = version_file.read_text("utf-8").strip()
    if version != FORMAT_VERSION:
        raise IndexFormatError(
            f"{directory}: unsupported index format {version!r}, expected {FORMAT_VERSION!r}"
        )
    handle = IndexHandle()
    handle.term_lists = _read_terms(directory / "terms.kv")
    for line in (directory / "contexts.tsv").read_text("utf-8").splitlines():
        cid_text, path_text = line.split("\t")
        path = tuple(part for part in path_text.split("/") if part)
        if handle.dictionary.intern(path) != int(cid_text):
            raise IndexFormatError(f"{directory}: non-dense context ids")
    for line in (directory / "stats.tsv").read_text("utf-8").splitlines():
        stem, freq = line.split("\t")
        handle.stats.doc_freq[stem] = int(freq)
    for line in (directory / "docs.tsv").read_text("utf-8").splitlines():
        doc_id, locator = line.split("\t", 1)
        handle.doc_table[int(doc_id)] = locator
        handle._doc_ids[locator] = int(doc_id)
    handle.stats.total_docs = len(handle.doc_table)
    handle.writable = False
    return handle
