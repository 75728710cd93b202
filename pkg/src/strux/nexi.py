"""NEXI content-and-structure topic parsing and strategy translation.

Supported subset:

  //path[about(REL, terms) and about(REL, terms) ...]          (simple)
  //path[...]//path[about(REL, terms) ...]                     (complex)

where REL is `.`, `./tag/...` or `.//tag/...`, relative to the
enclosing step, and terms are words, quoted phrases or -negated words.
In the complex form the first step is the support (it must exist in a
document for that document's targets to count) and the second is the
target (what gets returned).  Everything outside this subset raises
NexiParseError naming the offending construct.

Translation produces an operator tree per strategy: about terms become
SAME+ groups (optionally SEQ for quoted/hyphenated phrases), structural
constraints become IN (strict) or IN+ (vague) wrappers, supports are
joined under AND, and support/target pairs meet in a FILTER.  The
content-only strategy drops the structural wrappers but keeps FILTER.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .algebra import And, Filter, In, InPlus, QueryError, QueryTree, SamePlus, Seq, Term, Without
from .ingest import IngestConfig, tokenize
from .pathsim import QueryPath


class NexiParseError(QueryError):
    """Input outside the supported NEXI subset."""


@dataclass(frozen=True)
class TermGroup:
    """One unit of an about() clause, in surface form."""
    text: str
    quoted: bool = False
    negated: bool = False


@dataclass(frozen=True)
class AboutClause:
    path: QueryPath
    groups: tuple[TermGroup, ...]


@dataclass(frozen=True)
class CasTopic:
    target_path: QueryPath
    target_clauses: tuple[AboutClause, ...]
    support_clauses: tuple[AboutClause, ...]
    form: str                             # "simple" or "complex"

    @property
    def target_about(self) -> tuple[str, ...]:
        return tuple(" ".join(g.text for g in c.groups) for c in self.target_clauses)


@dataclass(frozen=True)
class Strategy:
    """How structural constraints are interpreted when translating."""

    name: str                             # co, vv, vs, sv, ss
    content_mode: str = "sameplus"        # sameplus or seq
    beta: float = 0.5

    VAGUE = {"co": (False, False), "vv": (True, True), "vs": (True, False),
             "sv": (False, True), "ss": (False, False)}

    def __post_init__(self):
        if self.name not in self.VAGUE:
            raise QueryError(f"unknown strategy {self.name!r}")
        if self.content_mode not in ("sameplus", "seq"):
            raise QueryError(f"unknown content mode {self.content_mode!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise QueryError("structure weight must lie in [0, 1]")

    @property
    def structural(self) -> bool:
        return self.name != "co"

    @property
    def vague_target(self) -> bool:
        return self.VAGUE[self.name][0]

    @property
    def vague_support(self) -> bool:
        return self.VAGUE[self.name][1]


_STEP_RE = re.compile(r"//?([^/\[\]()]+)")
_QUOTED_RE = re.compile(r'"([^"]*)"')


def _parse_steps(text: str, what: str) -> tuple[str, ...]:
    text = text.strip()
    rest = re.sub(_STEP_RE, "", text)
    if rest.strip("/"):
        raise NexiParseError(f"unsupported {what} path {text!r}")
    tags = tuple(m.group(1).strip() for m in _STEP_RE.finditer(text))
    for tag in tags:
        if tag == "*" or "@" in tag or not re.fullmatch(r"[\w.-]+", tag):
            raise NexiParseError(f"unsupported step {tag!r} in {what} path {text!r}")
    return tags


def _split_about_args(body: str):
    depth = 0
    for i, ch in enumerate(body):
        if ch == '"':
            depth ^= 1
        elif ch == "," and depth == 0:
            return body[:i], body[i + 1:]
    raise NexiParseError(f"about({body!r}) is missing its term argument")


def _parse_groups(text: str) -> tuple[TermGroup, ...]:
    groups: list[TermGroup] = []
    pos = 0
    for match in _QUOTED_RE.finditer(text):
        for word in text[pos:match.start()].split():
            groups.append(_word_group(word))
        phrase = match.group(1).strip()
        if phrase:
            groups.append(TermGroup(phrase, quoted=True))
        pos = match.end()
    for word in text[pos:].split():
        groups.append(_word_group(word))
    if '"' in text[pos:]:
        raise NexiParseError(f"unbalanced quote in about terms {text!r}")
    if not any(not g.negated for g in groups):
        raise NexiParseError(f"about() needs at least one positive term: {text!r}")
    return tuple(groups)


_WORD_OK = re.compile(r"[\w'.-]+")


def _word_group(word: str) -> TermGroup:
    if word.startswith("+"):
        raise NexiParseError(f"unsupported term modifier {word!r}")
    negated = word.startswith("-")
    if negated:
        word = word[1:]
        if not word:
            raise NexiParseError("dangling - in about terms")
    if not _WORD_OK.fullmatch(word):
        raise NexiParseError(f"unsupported characters in term {word!r}")
    return TermGroup(word, negated=negated)


def _parse_predicate(pred: str, base: tuple[str, ...], source: str) -> list[AboutClause]:
    clauses = []
    for i, part in enumerate(re.split(r"\s+and\s+", pred.strip(), flags=re.IGNORECASE)):
        part = part.strip()
        if i > 0 and not part:
            raise NexiParseError(f"dangling 'and' in predicate of {source!r}")
        lowered = part.lower()
        if re.search(r"\s+or\s+", lowered) or lowered.startswith("not") and "about" not in lowered[:6]:
            raise NexiParseError(f"unsupported boolean connective in {part!r}")
        m = re.fullmatch(r"about\s*\(\s*(.*)\)", part, flags=re.DOTALL | re.IGNORECASE)
        if m is None:
            raise NexiParseError(f"unsupported predicate clause {part!r}")
        rel, terms = _split_about_args(m.group(1))
        rel = rel.strip()
        if rel == ".":
            tags = base
        elif rel.startswith("./") or rel.startswith(".//"):
            tags = base + _parse_steps(rel[1:], "about")
        elif rel.startswith("//") or rel.startswith("/"):
            tags = base + _parse_steps(rel, "about")
        else:
            raise NexiParseError(f"unsupported about path {rel!r}")
        clauses.append(AboutClause(QueryPath(tags), _parse_groups(terms)))
    return clauses


_TOPIC_RE = re.compile(
    r"^\s*(//[^\[\]]+)\[(.*?)\]\s*(?:(//?[^\[\]]+)\[(.*?)\]\s*)?$",
    flags=re.DOTALL,
)


def parse_nexi(text: str) -> CasTopic:
    """Parse a castitle string into a structured topic."""
    match = _TOPIC_RE.match(text.strip())
    if match is None:
        raise NexiParseError(f"not a supported //path[about(...)] topic: {text.strip()!r}")
    first_path, first_pred, second_path, second_pred = match.groups()
    first_tags = _parse_steps(first_path, "target")
    first_clauses = _parse_predicate(first_pred, first_tags, first_path)
    if second_path is None:
        supports = tuple(c for c in first_clauses if c.path.tags != first_tags)
        targets = tuple(c for c in first_clauses if c.path.tags == first_tags)
        return CasTopic(QueryPath(first_tags), targets, supports, "simple")
    target_tags = first_tags + _parse_steps(second_path, "target")
    target_clauses = _parse_predicate(second_pred, target_tags, second_path)
    return CasTopic(QueryPath(target_tags), tuple(target_clauses),
                    tuple(first_clauses), "complex")


def print_topic(topic: CasTopic) -> str:
    """Render a topic back to NEXI text (canonical form)."""
    def fmt_groups(groups):
        parts = []
        for g in groups:
            text = f'"{g.text}"' if g.quoted else g.text
            parts.append("-" + text if g.negated else text)
        return " ".join(parts)

    def fmt_clause(clause: AboutClause, base: tuple[str, ...]) -> str:
        extra = clause.path.tags[len(base):]
        rel = "." if not extra else "./" + "/".join(extra)
        return f"about({rel}, {fmt_groups(clause.groups)})"

    if topic.form == "simple":
        base = topic.target_path.tags
        clauses = [fmt_clause(c, base) for c in topic.support_clauses]
        clauses += [fmt_clause(c, base) for c in topic.target_clauses]
        return "//" + "/".join(base) + "[" + " and ".join(clauses) + "]"
    support_base = _common_support_base(topic)
    support = " and ".join(fmt_clause(c, support_base) for c in topic.support_clauses)
    target_extra = topic.target_path.tags[len(support_base):]
    target = " and ".join(fmt_clause(c, topic.target_path.tags) for c in topic.target_clauses)
    return ("//" + "/".join(support_base) + "[" + support + "]"
            + "//" + "/".join(target_extra) + "[" + target + "]")


def _common_support_base(topic: CasTopic) -> tuple[str, ...]:
    """Longest shared prefix of target path and all support paths."""
    base = topic.target_path.tags
    for clause in topic.support_clauses:
        tags = clause.path.tags
        n = 0
        while n < min(len(base), len(tags)) and base[n] == tags[n]:
            n += 1
        base = base[:n]
    return base


def phrase_to_terms(phrase: str, config: IngestConfig | None = None) -> list[str]:
    """Stems for a query phrase, via the regular tokenize pipeline."""
    if config is None:
        config = IngestConfig()
    return tokenize(phrase, config)


def _content_tree(clause: AboutClause, strategy: Strategy, config: IngestConfig) -> QueryTree:
    positive: list[QueryTree] = []
    negative: list[QueryTree] = []
    for group in clause.groups:
        stems = phrase_to_terms(group.text, config)
        if not stems:
            continue
        bucket = negative if group.negated else positive
        grouped_phrase = (group.quoted or len(stems) > 1) and strategy.content_mode == "seq"
        if grouped_phrase and len(stems) > 1:
            bucket.append(Seq(tuple(stems)))
        else:
            bucket.extend(Term(stem) for stem in stems)
    if not positive:
        raise NexiParseError(
            f"about clause normalizes to no searchable terms: {clause!r}")
    tree: QueryTree = SamePlus(tuple(positive))
    if negative:
        tree = Without(tree, SamePlus(tuple(negative)))
    return tree


def _wrap(clause: AboutClause, tree: QueryTree, strategy: Strategy, vague: bool) -> QueryTree:
    if not strategy.structural:
        return tree
    if vague:
        return InPlus(clause.path, (tree,), strategy.beta)
    return In(clause.path, (tree,))


def translate(topic: CasTopic, strategy: Strategy,
              config: IngestConfig | None = None) -> QueryTree:
    """Build the operator tree for a topic under one strategy."""
    if config is None:
        config = IngestConfig()
    targets = [
        _wrap(c, _content_tree(c, strategy, config), strategy, strategy.vague_target)
        for c in topic.target_clauses
    ]
    supports = [
        _wrap(c, _content_tree(c, strategy, config), strategy, strategy.vague_support)
        for c in topic.support_clauses
    ]
    target_tree = None
    if targets:
        target_tree = targets[0] if len(targets) == 1 else And(tuple(targets))
    if not supports:
        if target_tree is None:
            raise NexiParseError("topic has no usable about clauses")
        return target_tree
    support_tree = And(tuple(supports))
    if target_tree is None:
        return support_tree
    return Filter(support_tree, target_tree)
