"""XML ingestion: parse documents into labeled ordered trees and tokens.

Every element gets a preorder id and an interval label {low, high} where
low is its own id and high is the largest id in its subtree, so "d is a
descendant of a" reduces to a.low < d.id <= a.high.  Text is lowercased,
split on non-alphanumeric boundaries, stripped of numbers and stopwords,
then Porter-stemmed; surviving tokens are numbered 0,1,2,... in document
order.  Attributes, comments and processing instructions are discarded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from xml.parsers import expat

from . import porter


class XmlParseError(ValueError):
    """Raised for malformed or empty XML input."""


_WORD_RE = re.compile(r"[0-9a-z]+")


def _load_default_stopwords() -> frozenset[str]:
    text = resources.files("strux").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(_parse_stopword_lines(text.splitlines()))


def _parse_stopword_lines(lines) -> set[str]:
    words = set()
    for line in lines:
        word = line.strip().lower()
        if word and not word.startswith("#"):
            words.add(word)
    return words


@dataclass(frozen=True)
class IngestConfig:
    """Tokenization and tag-mapping settings shared by indexing and queries."""

    stopwords: frozenset[str] = field(default_factory=_load_default_stopwords)
    tag_classes: dict[str, str] = field(default_factory=dict)
    index_numbers: bool = False

    def map_tag(self, tag: str) -> str:
        return self.tag_classes.get(tag, tag)

    @classmethod
    def load(cls, path: str | Path) -> "IngestConfig":
        """Read a config file of `key = value` lines.

        Keys: `stopwords` (path, relative to the config file), `numbers`
        (on/off) and `map TAG = CLASS` entries, one per line.  `#` starts
        a comment.
        """
        path = Path(path)
        stopwords = None
        tag_classes: dict[str, str] = {}
        index_numbers = False
        for lineno, raw in enumerate(path.read_text("utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "stopwords":
                stop_path = path.parent / value
                stopwords = frozenset(
                    _parse_stopword_lines(stop_path.read_text("utf-8").splitlines())
                )
            elif key == "numbers":
                if value.lower() not in ("on", "off"):
                    raise ValueError(f"{path}:{lineno}: numbers must be on or off")
                index_numbers = value.lower() == "on"
            elif key.startswith("map ") or key.startswith("map\t"):
                tag = key[4:].strip()
                if not tag or not value:
                    raise ValueError(f"{path}:{lineno}: bad tag mapping")
                tag_classes[tag] = value
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        if stopwords is None:
            stopwords = _load_default_stopwords()
        return cls(stopwords=stopwords, tag_classes=tag_classes, index_numbers=index_numbers)


def tokenize(text: str, config: IngestConfig) -> list[str]:
    """Lowercase, split, drop numbers and stopwords, Porter-stem."""
    stems = []
    for token in _WORD_RE.findall(text.lower()):
        if token.isdigit():
            if not config.index_numbers:
                continue
            stems.append(token)
            continue
        if token in config.stopwords:
            continue
        stems.append(porter.stem(token))
    return stems


@dataclass(frozen=True)
class NodeInterval:
    low: int
    high: int

    def contains_node(self, node_id: int) -> bool:
        """True when node_id is a strict descendant."""
        return self.low < node_id <= self.high

    def covers(self, other: "NodeInterval") -> bool:
        """True when other lies strictly inside this subtree."""
        return self.low < other.low and other.high <= self.high


@dataclass(frozen=True)
class Token:
    stem: str
    position: int


ContextPath = tuple[str, ...]


@dataclass
class ElementNode:
    tag: str
    node_id: int
    interval: NodeInterval | None = None
    children: list["ElementNode"] = field(default_factory=list)
    tokens: list[Token] = field(default_factory=list)


@dataclass
class DocumentTree:
    doc_ref: str
    root: ElementNode
    nodes: list[ElementNode]     # indexed by node_id
    parents: list[int]           # parent node_id, -1 for the root

    def context_of(self, node_id: int) -> ContextPath:
        tags: list[str] = []
        current = node_id
        while current != -1:
            tags.append(self.nodes[current].tag)
            current = self.parents[current]
        return tuple(reversed(tags))

    def ancestors_of(self, node_id: int) -> list[int]:
        """Proper ancestors, nearest first."""
        out = []
        current = self.parents[node_id]
        while current != -1:
            out.append(current)
            current = self.parents[current]
        return out


def context_of(node: ElementNode, tree: DocumentTree) -> ContextPath:
    """Root-to-node tag sequence (after tag-class mapping)."""
    return tree.context_of(node.node_id)


class _TreeBuilder:
    def __init__(self, config: IngestConfig):
        self.config = config
        self.nodes: list[ElementNode] = []
        self.parents: list[int] = []
        self.stack: list[ElementNode] = []
        self.text_parts: list[str] = []
        self.next_position = 0
        self.root: ElementNode | None = None

    def _flush_text(self) -> None:
        if not self.text_parts or not self.stack:
            self.text_parts.clear()
            return
        text = "".join(self.text_parts)
        self.text_parts.clear()
        owner = self.stack[-1]
        for stem in tokenize(text, self.config):
            owner.tokens.append(Token(stem, self.next_position))
            self.next_position += 1

    def start_element(self, name: str, attrs) -> None:
        self._flush_text()
        node = ElementNode(tag=self.config.map_tag(name), node_id=len(self.nodes))
        self.nodes.append(node)
        if self.stack:
            self.parents.append(self.stack[-1].node_id)
            self.stack[-1].children.append(node)
        else:
            self.parents.append(-1)
            self.root = node
        self.stack.append(node)

    def end_element(self, name: str) -> None:
        self._flush_text()
        node = self.stack.pop()
        node.interval = NodeInterval(node.node_id, len(self.nodes) - 1)

    def character_data(self, data: str) -> None:
        self.text_parts.append(data)


def parse_document(data: bytes, config: IngestConfig, doc_ref: str = "<bytes>") -> DocumentTree:
    """Parse raw XML bytes into a DocumentTree.

    Malformed or empty input raises XmlParseError naming the byte offset.
    """
    builder = _TreeBuilder(config)
    parser = expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = builder.start_element
    parser.EndElementHandler = builder.end_element
    parser.CharacterDataHandler = builder.character_data
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        offset = parser.ErrorByteIndex
        raise XmlParseError(
            f"{doc_ref}: malformed XML at byte {offset}: {expat.errors.messages[exc.code]}"
        ) from exc
    if builder.root is None:
        raise XmlParseError(f"{doc_ref}: malformed XML at byte 0: no root element")
    return DocumentTree(
        doc_ref=doc_ref,
        root=builder.root,
        nodes=builder.nodes,
        parents=builder.parents,
    )
