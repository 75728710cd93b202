"""Recursive fuzzy query algebra over scored element sets.

A query is a tree of operators; evaluating a node yields a ResultSet
mapping (doc_id, node_id) to a relevance value in [0, 1].  Operators:

  term        elements directly owning the stem, value 1
  seq         elements owning the stem pattern at consecutive positions
              (`*` matches exactly one arbitrary token)
  or          union, value = max over children
  and         intersection, value = min over children
  without     left values reduced by right values, clamped at 0
  in          keep elements whose context strictly matches the path
              (strict = query tags are a subsequence of the context,
              i.e. zero edit distance under the default costs)
  in+         blend structural path similarity with content:
              v = w * sim + (1 - w) * content
  same+       discrimination-weighted sum over children; a stem found
              in few documents counts for more, and matching every
              child scores exactly 1
  filter      keep targets whose document also holds a support element,
              averaging the target value with the document's best
              support value

Set membership for and/in/in+ is intersection over the children;
zero-valued entries are dropped everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterator, Mapping, Optional, Sequence, Union

from .index import IndexHandle
from .ingest import NodeInterval
from .pathsim import CostMatrix, DEFAULT_COSTS, QueryPath, edit_distance, similarity

WILDCARD = "*"

# context id used for elements synthesized outside the index (e.g. by
# ancestor score propagation); never resolvable in the dictionary
NO_CONTEXT = -1


class QueryError(ValueError):
    """Malformed query tree or unsupported query text."""


@dataclass(frozen=True)
class ScoredElement:
    doc_id: int
    node_id: int
    interval: NodeInterval
    context_id: int
    value: float


class ResultSet:
    """At most one scored entry per (doc_id, node_id)."""

    def __init__(self, elements: Optional[Mapping[tuple[int, int], ScoredElement]] = None):
        self.elements: dict[tuple[int, int], ScoredElement] = dict(elements or {})

    @classmethod
    def of(cls, scored: Sequence[ScoredElement]) -> "ResultSet":
        out = cls()
        for element in scored:
            out.add(element)
        return out

    def add(self, element: ScoredElement) -> None:
        key = (element.doc_id, element.node_id)
        existing = self.elements.get(key)
        if existing is None or element.value > existing.value:
            self.elements[key] = element

    def get(self, key: tuple[int, int]) -> Optional[ScoredElement]:
        return self.elements.get(key)

    def __iter__(self) -> Iterator[ScoredElement]:
        return iter(self.elements.values())

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, key: tuple[int, int]) -> bool:
        return key in self.elements

    def __eq__(self, other) -> bool:
        return isinstance(other, ResultSet) and self.elements == other.elements

    def __repr__(self) -> str:
        return f"ResultSet({len(self.elements)} elements)"

    def values_by_key(self) -> dict[tuple[int, int], float]:
        return {key: el.value for key, el in self.elements.items()}


# --- query tree nodes ---------------------------------------------------

@dataclass(frozen=True)
class Term:
    stem: str


@dataclass(frozen=True)
class Seq:
    pattern: tuple[str, ...]    # stems and WILDCARD slots


@dataclass(frozen=True)
class Or:
    children: tuple["QueryTree", ...]


@dataclass(frozen=True)
class And:
    children: tuple["QueryTree", ...]


@dataclass(frozen=True)
class Without:
    left: "QueryTree"
    right: "QueryTree"


@dataclass(frozen=True)
class In:
    path: QueryPath
    children: tuple["QueryTree", ...]


@dataclass(frozen=True)
class InPlus:
    path: QueryPath
    children: tuple["QueryTree", ...]
    beta: float = 0.5           # weight of structure vs. content


@dataclass(frozen=True)
class SamePlus:
    children: tuple["QueryTree", ...]


@dataclass(frozen=True)
class Filter:
    support: "QueryTree"
    target: "QueryTree"


QueryTree = Union[Term, Seq, Or, And, Without, In, InPlus, SamePlus, Filter]


def validate(tree: QueryTree) -> None:
    """Arity and range checks; raises QueryError before any index access."""
    if isinstance(tree, Term):
        if not tree.stem:
            raise QueryError("empty term")
    elif isinstance(tree, Seq):
        if not tree.pattern:
            raise QueryError("seq needs at least one stem")
        if all(slot == WILDCARD for slot in tree.pattern):
            raise QueryError("seq pattern is all wildcards")
    elif isinstance(tree, (Or, And, SamePlus)):
        name = type(tree).__name__.lower()
        if not tree.children:
            raise QueryError(f"{name} needs at least one child")
        for child in tree.children:
            validate(child)
    elif isinstance(tree, Without):
        validate(tree.left)
        validate(tree.right)
    elif isinstance(tree, (In, InPlus)):
        if not tree.children:
            raise QueryError("in/in+ needs at least one child")
        if isinstance(tree, InPlus) and not 0.0 <= tree.beta <= 1.0:
            raise QueryError("in+ weight must lie in [0, 1]")
        for child in tree.children:
            validate(child)
    elif isinstance(tree, Filter):
        validate(tree.support)
        validate(tree.target)
    else:
        raise QueryError(f"unknown query node {tree!r}")


# --- pure operator combinators ------------------------------------------

def _drop_zeros(result: ResultSet) -> ResultSet:
    return ResultSet({k: el for k, el in result.elements.items() if el.value > 0.0})


def eval_or(children: Sequence[ResultSet]) -> ResultSet:
    out = ResultSet()
    for child in children:
        for element in child:
            out.add(element)
    return _drop_zeros(out)


def eval_and(children: Sequence[ResultSet]) -> ResultSet:
    if not children:
        return ResultSet()
    keys = set(children[0].elements)
    for child in children[1:]:
        keys &= set(child.elements)
    out = ResultSet()
    for key in keys:
        value = min(child.elements[key].value for child in children)
        out.add(replace(children[0].elements[key], value=value))
    return _drop_zeros(out)


def eval_without(left: ResultSet, right: ResultSet) -> ResultSet:
    out = ResultSet()
    for key, element in left.elements.items():
        other = right.get(key)
        value = element.value - (other.value if other else 0.0)
        if value > 0.0:
            out.add(replace(element, value=value))
    return out


def eval_in(strict_match: Callable[[ScoredElement], bool],
            children: Sequence[ResultSet]) -> ResultSet:
    combined = eval_and(children)
    return ResultSet({k: el for k, el in combined.elements.items() if strict_match(el)})


def eval_inplus(sigma: Callable[[ScoredElement], float], beta: float,
                children: Sequence[ResultSet]) -> ResultSet:
    combined = eval_and(children)
    out = ResultSet()
    for element in combined:
        value = beta * sigma(element) + (1.0 - beta) * element.value
        if value > 0.0:
            out.add(replace(element, value=value))
    return out


def term_weight(doc_freq: int, total_docs: int) -> float:
    """Discrimination weight of a stem: rarer stems weigh more (>= 1)."""
    return 1.0 - math.log((1 + doc_freq) / (1 + total_docs))


def eval_sameplus(weights: Sequence[float], children: Sequence[ResultSet]) -> ResultSet:
    """Weighted coverage score; the normalizer sums weights over ALL
    children, so an element missing some children scores below 1."""
    if len(weights) != len(children):
        raise QueryError("one weight per same+ child required")
    norm = 1.0 / sum(weights)
    out = ResultSet()
    union: dict[tuple[int, int], ScoredElement] = {}
    totals: dict[tuple[int, int], float] = {}
    for weight, child in zip(weights, children):
        for key, element in child.elements.items():
            union.setdefault(key, element)
            totals[key] = totals.get(key, 0.0) + weight * element.value
    for key, total in totals.items():
        value = norm * total
        if value > 0.0:
            out.add(replace(union[key], value=value))
    return out


def eval_filter(support: ResultSet, target: ResultSet) -> ResultSet:
    best_support: dict[int, float] = {}
    for element in support:
        current = best_support.get(element.doc_id)
        if current is None or element.value > current:
            best_support[element.doc_id] = element.value
    out = ResultSet()
    for element in target:
        best = best_support.get(element.doc_id)
        if best is None:
            continue                      # targets without support are discarded
        value = (element.value + best) / 2.0
        if value > 0.0:
            out.add(replace(element, value=value))
    return out


# --- index-backed evaluation ----------------------------------------------

class Evaluator:
    """Evaluates query trees bottom-up against a committed index."""

    def __init__(self, handle: IndexHandle, costs: CostMatrix = DEFAULT_COSTS,
                 strict_costs: CostMatrix = DEFAULT_COSTS):
        self.handle = handle
        self.costs = costs
        self.strict_costs = strict_costs
        self._sigma_cache: dict[tuple[str, ...], dict[int, float]] = {}
        self._strict_cache: dict[tuple[str, ...], set[int]] = {}

    def eval(self, tree: QueryTree) -> ResultSet:
        validate(tree)
        return self._eval(tree)

    def _eval(self, tree: QueryTree) -> ResultSet:
        if isinstance(tree, Term):
            return self.eval_term(tree.stem)
        if isinstance(tree, Seq):
            return self.eval_seq(tree.pattern)
        if isinstance(tree, Or):
            return eval_or([self._eval(c) for c in tree.children])
        if isinstance(tree, And):
            return eval_and([self._eval(c) for c in tree.children])
        if isinstance(tree, Without):
            return eval_without(self._eval(tree.left), self._eval(tree.right))
        if isinstance(tree, In):
            matching = self.strict_context_ids(tree.path)
            return eval_in(lambda el: el.context_id in matching,
                           [self._eval(c) for c in tree.children])
        if isinstance(tree, InPlus):
            sigma_map = self.sigma_by_context(tree.path)
            return eval_inplus(lambda el: sigma_map.get(el.context_id, 0.0),
                               tree.beta, [self._eval(c) for c in tree.children])
        if isinstance(tree, SamePlus):
            weights = [self.child_weight(c) for c in tree.children]
            return eval_sameplus(weights, [self._eval(c) for c in tree.children])
        if isinstance(tree, Filter):
            return eval_filter(self._eval(tree.support), self._eval(tree.target))
        raise QueryError(f"unknown query node {tree!r}")

    def eval_term(self, stem: str) -> ResultSet:
        out = ResultSet()
        for posting in self.handle.lookup(stem):
            out.add(ScoredElement(posting.doc_id, posting.node_id,
                                  posting.interval, posting.context_id, 1.0))
        return out

    def eval_seq(self, pattern: tuple[str, ...]) -> ResultSet:
        anchor_offset = next(i for i, slot in enumerate(pattern) if slot != WILDCARD)
        # positions of each required stem per element
        stem_positions: dict[str, dict[tuple[int, int], dict]] = {}
        for slot in set(pattern):
            if slot == WILDCARD:
                continue
            grouped: dict[tuple[int, int], dict] = {}
            for posting in self.handle.lookup(slot):
                key = (posting.doc_id, posting.node_id)
                info = grouped.setdefault(key, {"positions": set(), "posting": posting})
                info["positions"].add(posting.position)
            stem_positions[slot] = grouped
        out = ResultSet()
        anchor_groups = stem_positions[pattern[anchor_offset]]
        for key, info in anchor_groups.items():
            doc_id, node_id = key
            owned = None
            for start_pos in sorted(info["positions"]):
                start = start_pos - anchor_offset
                if start < 0:
                    continue
                ok = True
                for offset, slot in enumerate(pattern):
                    position = start + offset
                    if slot == WILDCARD:
                        if owned is None:
                            owned = self.handle.owned_positions(doc_id, node_id)
                        if position not in owned:
                            ok = False
                            break
                    elif position not in stem_positions[slot].get(key, {"positions": ()})["positions"]:
                        ok = False
                        break
                if ok:
                    posting = info["posting"]
                    out.add(ScoredElement(doc_id, node_id, posting.interval,
                                          posting.context_id, 1.0))
                    break
        return out

    def child_weight(self, child: QueryTree) -> float:
        """Per-child weight for same+: document frequency for plain
        stems, zero frequency (maximal weight) for anything else."""
        stats = self.handle.stats
        if isinstance(child, Term):
            return term_weight(stats.freq(child.stem), stats.total_docs)
        return term_weight(0, stats.total_docs)

    def candidate_contexts(self, path: QueryPath) -> list[tuple[int, tuple[str, ...]]]:
        """Contexts eligible for alignment against a query path: those
        ending in the path's final tag, or all contexts when none do."""
        last = path.tags[-1]
        matching = [(cid, ctx) for cid, ctx in self.handle.dictionary.items()
                    if ctx and ctx[-1] == last]
        if matching:
            return matching
        return list(self.handle.dictionary.items())

    def sigma_by_context(self, path: QueryPath) -> dict[int, float]:
        cached = self._sigma_cache.get(path.tags)
        if cached is None:
            cached = {cid: similarity(path, ctx, self.costs)
                      for cid, ctx in self.candidate_contexts(path)}
            self._sigma_cache[path.tags] = cached
        return cached

    def strict_context_ids(self, path: QueryPath) -> set[int]:
        cached = self._strict_cache.get(path.tags)
        if cached is None:
            cached = {cid for cid, ctx in self.handle.dictionary.items()
                      if edit_distance(path, ctx, self.strict_costs) == 0}
            self._strict_cache[path.tags] = cached
        return cached


def eval_query(handle: IndexHandle, tree: QueryTree,
               costs: CostMatrix = DEFAULT_COSTS) -> ResultSet:
    """Validate and evaluate a query tree against an index."""
    return Evaluator(handle, costs).eval(tree)
