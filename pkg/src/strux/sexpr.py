"""S-expression query syntax.

Example:

  (FILTER (AND (IN+ [/article/bb/] (SAME+ baeza yates))
               (IN+ [/article/sec/] (SAME+ string matching)))
          (IN+ [/article/sec/] (SAME+ approximate algorithm)))

Operator names are case-insensitive; paths are bracketed, slash
separated; `*` inside SEQ matches one arbitrary token.  Bare atoms are
terms and run through the normal tokenize pipeline, so stopwords vanish
and hyphenated atoms expand to their parts.  An IN+ may carry an
optional numeric structure weight right after the path.
"""

from __future__ import annotations

import re

from .algebra import (And, Filter, In, InPlus, Or, QueryError, QueryTree,
                      SamePlus, Seq, Term, Without, WILDCARD, validate)
from .ingest import IngestConfig, tokenize
from .pathsim import QueryPath

_TOKEN_RE = re.compile(r"\(|\)|\[[^\]\[]*\]|[^\s()\[\]]+")

_OPERATORS = {"or", "and", "without", "seq", "in", "in+", "same+", "filter"}

DEFAULT_STRUCTURE_WEIGHT = 0.5


def _lex(text: str) -> list[str]:
    tokens = _TOKEN_RE.findall(text)
    if "".join(tokens).replace(" ", "") != re.sub(r"\s+", "", text):
        raise QueryError("unbalanced brackets in query")
    return tokens


def _read(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise QueryError("unexpected end of query")
    token = tokens[pos]
    if token == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = _read(tokens, pos)
            items.append(item)
        if pos >= len(tokens):
            raise QueryError("missing closing parenthesis")
        return items, pos + 1
    if token == ")":
        raise QueryError("unexpected closing parenthesis")
    return token, pos + 1


def parse_path(text: str) -> QueryPath:
    tags = tuple(part for part in text.strip("[]").split("/") if part)
    if not tags:
        raise QueryError(f"empty path {text!r}")
    return QueryPath(tags)


def _is_path(item) -> bool:
    return isinstance(item, str) and item.startswith("[")


def _is_number(item) -> bool:
    if not isinstance(item, str):
        return False
    try:
        float(item)
        return True
    except ValueError:
        return False


def _atom_stems(atom: str, config: IngestConfig) -> list[str]:
    if atom == WILDCARD:
        return [WILDCARD]
    stems = tokenize(atom, config)
    return stems


def _term_children(items, config: IngestConfig) -> list[QueryTree]:
    """Expand a mixed list of atoms/subforms into query children."""
    children: list[QueryTree] = []
    for item in items:
        if isinstance(item, list):
            children.append(_build(item, config))
        elif _is_path(item):
            raise QueryError(f"unexpected path {item!r}")
        else:
            children.extend(Term(stem) for stem in _atom_stems(item, config)
                            if stem != WILDCARD)
    return children


def _build(form, config: IngestConfig) -> QueryTree:
    if isinstance(form, str):
        stems = _atom_stems(form, config)
        if not stems or stems == [WILDCARD]:
            raise QueryError(f"term {form!r} normalizes to nothing")
        if len(stems) == 1:
            return Term(stems[0])
        return SamePlus(tuple(Term(s) for s in stems))
    if not form:
        raise QueryError("empty expression")
    head = form[0]
    if not isinstance(head, str) or head.lower() not in _OPERATORS:
        raise QueryError(f"unknown operator {head!r}")
    op = head.lower()
    rest = form[1:]
    if op == "seq":
        pattern: list[str] = []
        for item in rest:
            if isinstance(item, list) or _is_path(item):
                raise QueryError("seq accepts only terms and *")
            pattern.extend(_atom_stems(item, config))
        if not pattern:
            raise QueryError("seq pattern is empty")
        return Seq(tuple(pattern))
    if op in ("or", "and", "same+"):
        children = _term_children(rest, config)
        if not children:
            raise QueryError(f"{op} has no children after normalization")
        if op == "or":
            return Or(tuple(children))
        if op == "and":
            return And(tuple(children))
        return SamePlus(tuple(children))
    if op == "without":
        children = _term_children(rest, config)
        if len(children) != 2:
            raise QueryError("without takes exactly two arguments")
        return Without(children[0], children[1])
    if op in ("in", "in+"):
        if not rest or not _is_path(rest[0]):
            raise QueryError(f"{op} requires a [path] first argument")
        path = parse_path(rest[0])
        rest = rest[1:]
        weight = DEFAULT_STRUCTURE_WEIGHT
        if op == "in+" and rest and _is_number(rest[0]):
            weight = float(rest[0])
            rest = rest[1:]
        children = _term_children(rest, config)
        if not children:
            raise QueryError(f"{op} has no children")
        if op == "in":
            return In(path, tuple(children))
        return InPlus(path, tuple(children), weight)
    if op == "filter":
        children = _term_children(rest, config)
        if len(children) != 2:
            raise QueryError("filter takes exactly two arguments")
        return Filter(children[0], children[1])
    raise QueryError(f"unknown operator {head!r}")


def parse_query(text: str, config: IngestConfig) -> QueryTree:
    """Parse an s-expression query string into a QueryTree."""
    tokens = _lex(text)
    if not tokens:
        raise QueryError("empty query")
    form, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise QueryError("trailing input after query expression")
    tree = _build(form, config)
    validate(tree)
    return tree


def print_query(tree: QueryTree) -> str:
    """Render a QueryTree back to s-expression text."""
    if isinstance(tree, Term):
        return tree.stem
    if isinstance(tree, Seq):
        return "(SEQ " + " ".join(tree.pattern) + ")"
    if isinstance(tree, Or):
        return "(OR " + " ".join(print_query(c) for c in tree.children) + ")"
    if isinstance(tree, And):
        return "(AND " + " ".join(print_query(c) for c in tree.children) + ")"
    if isinstance(tree, Without):
        return f"(WITHOUT {print_query(tree.left)} {print_query(tree.right)})"
    if isinstance(tree, In):
        inner = " ".join(print_query(c) for c in tree.children)
        return f"(IN [{tree.path}] {inner})"
    if isinstance(tree, InPlus):
        inner = " ".join(print_query(c) for c in tree.children)
        weight = "" if tree.beta == DEFAULT_STRUCTURE_WEIGHT else f" {tree.beta:g}"
        return f"(IN+ [{tree.path}]{weight} {inner})"
    if isinstance(tree, SamePlus):
        return "(SAME+ " + " ".join(print_query(c) for c in tree.children) + ")"
    if isinstance(tree, Filter):
        return f"(FILTER {print_query(tree.support)} {print_query(tree.target)})"
    raise QueryError(f"cannot print {tree!r}")
