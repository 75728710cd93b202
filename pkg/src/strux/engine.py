"""End-to-end retrieval: evaluate, rank, truncate, focused post-processing.

Results are ranked by score (descending), with (doc_id, node_id) as the
deterministic tie-break, and truncated to the requested cutoff.

With the focused flag, scores are first propagated to every ancestor of
a scored element (each ancestor takes the max of its own value and its
scored descendants' values), then only the topmost scored element of
each nested chain survives, so no two results overlap.

Output element paths use 1-based per-tag sibling ordinals
(`/article[1]/bdy[1]/sec[2]`), which requires re-parsing the source
documents; locators recorded at indexing time must still resolve.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from . import nexi, sexpr
from .algebra import (Evaluator, Filter, In, InPlus, NO_CONTEXT, Or, And,
                      QueryError, QueryTree, ResultSet, SamePlus, ScoredElement,
                      Seq, Term, Without, eval_and)
from .index import IndexHandle
from .ingest import DocumentTree, IngestConfig, parse_document
from .pathsim import CostMatrix, DEFAULT_COSTS, align


class ElementNotFoundError(KeyError):
    """The requested element is absent from the result set."""


@dataclass(frozen=True)
class SearchRequest:
    query: str
    strategy: str = "vv"
    content_mode: str = "sameplus"
    beta: float = 0.5
    cutoff: int = 1500
    focused: bool = False

    def __post_init__(self):
        if self.cutoff < 1:
            raise QueryError("cutoff must be at least 1")


@dataclass(frozen=True)
class RankedHit:
    rank: int
    doc: str
    path: str
    score: float
    doc_id: int
    node_id: int


@dataclass
class RankedList:
    hits: list[RankedHit] = field(default_factory=list)

    def __iter__(self):
        return iter(self.hits)

    def __len__(self):
        return len(self.hits)


class DocCache:
    """Re-parses source documents on demand (structure only, no tag
    mapping: preorder ids are mapping-independent)."""

    def __init__(self, handle: IndexHandle):
        self.handle = handle
        self._trees: dict[int, DocumentTree] = {}
        self._config = IngestConfig(stopwords=frozenset())

    def tree(self, doc_id: int) -> DocumentTree:
        cached = self._trees.get(doc_id)
        if cached is None:
            locator = self.handle.doc_table.get(doc_id)
            if locator is None:
                raise KeyError(f"unknown document id {doc_id}")
            data = Path(locator).read_bytes()
            cached = parse_document(data, self._config, doc_ref=locator)
            self._trees[doc_id] = cached
        return cached

    def ordinal_path(self, doc_id: int, node_id: int) -> str:
        """`/tag[i]/tag[j]/...` with 1-based per-tag sibling ordinals."""
        tree = self.tree(doc_id)
        chain = [node_id] + tree.ancestors_of(node_id)
        parts = []
        for nid in reversed(chain):
            node = tree.nodes[nid]
            parent = tree.parents[nid]
            if parent == -1:
                ordinal = 1
            else:
                siblings = tree.nodes[parent].children
                ordinal = sum(1 for s in siblings
                              if s.tag == node.tag and s.node_id <= nid)
            parts.append(f"{node.tag}[{ordinal}]")
        return "/" + "/".join(parts)

    def resolve(self, locator: str, path: str) -> tuple[int, int]:
        """Find (doc_id, node_id) for a locator and ordinal path string."""
        doc_id = None
        for did, loc in self.handle.doc_table.items():
            if loc == locator:
                doc_id = did
                break
        if doc_id is None:
            raise ElementNotFoundError(f"document not in index: {locator}")
        tree = self.tree(doc_id)
        node = None
        for part in path.strip("/").split("/"):
            m = part.rsplit("[", 1)
            tag = m[0]
            ordinal = int(m[1].rstrip("]")) if len(m) == 2 else 1
            candidates = [tree.root] if node is None else node.children
            matches = [c for c in candidates if c.tag == tag]
            if ordinal > len(matches):
                raise ElementNotFoundError(f"no element {path} in {locator}")
            node = matches[ordinal - 1]
        if node is None:
            raise ElementNotFoundError(f"empty element path {path!r}")
        return doc_id, node.node_id


def propagate_max(results: ResultSet, trees: dict[int, DocumentTree]) -> ResultSet:
    """Give every ancestor of a scored element the max of its own value
    and its scored descendants' values (ancestors absent from the input
    are added)."""
    out = ResultSet({k: el for k, el in results.elements.items()})
    subtree_best: dict[tuple[int, int], float] = {}
    for element in results:
        tree = trees[element.doc_id]
        for ancestor in tree.ancestors_of(element.node_id):
            key = (element.doc_id, ancestor)
            if element.value > subtree_best.get(key, 0.0):
                subtree_best[key] = element.value
    for key, best in subtree_best.items():
        doc_id, node_id = key
        existing = results.get(key)
        value = max(best, existing.value if existing else 0.0)
        if existing is not None:
            out.add(replace(existing, value=value))
        else:
            node = trees[doc_id].nodes[node_id]
            out.add(ScoredElement(doc_id, node_id, node.interval, NO_CONTEXT, value))
    return out


def highest_ancestor(results: ResultSet) -> ResultSet:
    """Keep only scored elements with no scored proper ancestor; the
    survivors of one document never overlap."""
    by_doc: dict[int, list[ScoredElement]] = {}
    for element in results:
        by_doc.setdefault(element.doc_id, []).append(element)
    out = ResultSet()
    for elements in by_doc.values():
        elements.sort(key=lambda el: el.interval.low)
        top_high = -1
        for element in elements:
            if element.interval.low > top_high:
                out.add(element)
                top_high = element.interval.high
    return out


def parse_request_query(handle: IndexHandle, request: SearchRequest,
                        config: IngestConfig) -> QueryTree:
    text = request.query.strip()
    if text.startswith("("):
        return sexpr.parse_query(text, config)
    if text.startswith("//"):
        topic = nexi.parse_nexi(text)
        strategy = nexi.Strategy(request.strategy, request.content_mode, request.beta)
        return nexi.translate(topic, strategy, config)
    raise QueryError(
        "query must be NEXI (starting with //) or an s-expression (starting with ()")


def search(handle: IndexHandle, request: SearchRequest,
           config: IngestConfig | None = None,
           costs: CostMatrix | None = None) -> RankedList:
    """Translate, evaluate, optionally focus, rank and truncate."""
    if config is None:
        config = IngestConfig()
    if costs is None:
        costs = _costs_for(config)
    tree = parse_request_query(handle, request, config)
    evaluator = Evaluator(handle, costs, strict_costs=_costs_for(config))
    results = evaluator.eval(tree)
    cache = DocCache(handle)
    if request.focused:
        doc_trees = {el.doc_id: cache.tree(el.doc_id) for el in results}
        results = highest_ancestor(propagate_max(results, doc_trees))
    ordered = sorted(results, key=lambda el: (-el.value, el.doc_id, el.node_id))
    ordered = ordered[: request.cutoff]
    hits = [
        RankedHit(rank=i, doc=handle.doc_table[el.doc_id],
                  path=cache.ordinal_path(el.doc_id, el.node_id),
                  score=el.value, doc_id=el.doc_id, node_id=el.node_id)
        for i, el in enumerate(ordered, 1)
    ]
    return RankedList(hits)


def _costs_for(config: IngestConfig) -> CostMatrix:
    if config.tag_classes:
        return CostMatrix.with_tag_classes(config.tag_classes)
    return DEFAULT_COSTS


# --- explanations ---------------------------------------------------------

def explain(handle: IndexHandle, request: SearchRequest, element: str,
            config: IngestConfig | None = None,
            costs: CostMatrix | None = None) -> dict:
    """Score breakdown for one result element.

    `element` is `LOCATOR:PATH` using the ordinal path syntax of search
    output.  Raises ElementNotFoundError when the element is not in the
    final result set; a target dropped by filter for lack of support in
    its document is reported as such.
    """
    if config is None:
        config = IngestConfig()
    if costs is None:
        costs = _costs_for(config)
    locator, _, path = element.rpartition(":")
    if not locator:
        raise ElementNotFoundError(
            f"element reference must look like LOCATOR:/tag[1]/..., got {element!r}")
    cache = DocCache(handle)
    key = cache.resolve(locator, path)
    tree = parse_request_query(handle, request, config)
    evaluator = Evaluator(handle, costs, strict_costs=_costs_for(config))
    final = evaluator.eval(tree)
    record = {
        "element": {"doc": locator, "path": path},
        "query": sexpr.print_query(tree),
        "found": key in final,
    }
    if key in final:
        record["value"] = final.get(key).value
        record["breakdown"] = _explain_node(tree, key, evaluator)
    else:
        reason = _absence_reason(tree, key, evaluator)
        record["reason"] = reason
        raise_not_found = reason is None
        if raise_not_found:
            raise ElementNotFoundError(f"{element!r} is not in the result set")
    return record


def _absence_reason(tree: QueryTree, key, evaluator: Evaluator) -> str | None:
    if isinstance(tree, Filter):
        target = evaluator.eval(tree.target)
        if key in target:
            support = evaluator.eval(tree.support)
            doc_ids = {el.doc_id for el in support}
            if key[0] not in doc_ids:
                return "no support in document"
    return None


def _explain_node(tree: QueryTree, key, evaluator: Evaluator) -> dict:
    result = evaluator.eval(tree)
    element = result.get(key)
    record: dict = {"op": _op_name(tree), "value": element.value if element else None}
    if isinstance(tree, Term):
        record["stem"] = tree.stem
    elif isinstance(tree, Seq):
        record["pattern"] = " ".join(tree.pattern)
    elif isinstance(tree, (Or, And)):
        record["children"] = [_explain_node(c, key, evaluator) for c in tree.children]
    elif isinstance(tree, Without):
        record["children"] = [_explain_node(tree.left, key, evaluator),
                              _explain_node(tree.right, key, evaluator)]
    elif isinstance(tree, In):
        record["path"] = str(tree.path)
        record["strict_match"] = bool(
            element and element.context_id in evaluator.strict_context_ids(tree.path))
        record["children"] = [_explain_node(c, key, evaluator) for c in tree.children]
    elif isinstance(tree, InPlus):
        record["path"] = str(tree.path)
        record["beta"] = tree.beta
        combined = eval_and([evaluator.eval(c) for c in tree.children])
        inner = combined.get(key)
        record["content"] = inner.value if inner else None
        sigma = 0.0
        if inner is not None:
            sigma = evaluator.sigma_by_context(tree.path).get(inner.context_id, 0.0)
            witness = None
            if inner.context_id != NO_CONTEXT:
                witness = evaluator.handle.dictionary.path(inner.context_id)
            if witness is not None:
                record["witness_context"] = "/" + "/".join(witness)
                alignment = align(tree.path, witness, evaluator.costs)
                record["alignment"] = [
                    {"op": op, "query": q, "context": c} for op, q, c in alignment.script
                ]
        record["sigma"] = sigma
        record["children"] = [_explain_node(c, key, evaluator) for c in tree.children]
    elif isinstance(tree, SamePlus):
        stats = evaluator.handle.stats
        weights = [evaluator.child_weight(c) for c in tree.children]
        record["normalizer"] = 1.0 / sum(weights)
        children = []
        for child, weight in zip(tree.children, weights):
            entry = _explain_node(child, key, evaluator)
            entry["weight"] = weight
            if isinstance(child, Term):
                entry["doc_freq"] = stats.freq(child.stem)
            children.append(entry)
        record["children"] = children
    elif isinstance(tree, Filter):
        support = evaluator.eval(tree.support)
        doc_best = max((el.value for el in support if el.doc_id == key[0]), default=None)
        record["best_support_in_doc"] = doc_best
        record["children"] = [_explain_node(tree.support, key, evaluator),
                              _explain_node(tree.target, key, evaluator)]
    return record


def _op_name(tree: QueryTree) -> str:
    return {
        Term: "term", Seq: "seq", Or: "or", And: "and", Without: "without",
        In: "in", InPlus: "in+", SamePlus: "same+", Filter: "filter",
    }[type(tree)]


# --- output formatting ----------------------------------------------------

def format_table(ranked: RankedList) -> str:
    if not ranked.hits:
        return "(no results)\n"
    doc_width = max(len(h.doc) for h in ranked.hits)
    lines = [f"{'rank':>4}  {'score':>10}  {'doc':<{doc_width}}  element"]
    for hit in ranked:
        lines.append(
            f"{hit.rank:>4}  {hit.score:>10.6f}  {hit.doc:<{doc_width}}  {hit.path}")
    return "\n".join(lines) + "\n"


def format_tsv(ranked: RankedList) -> str:
    return "".join(
        f"{hit.rank}\t{hit.doc}\t{hit.path}\t{hit.score:.6f}\n" for hit in ranked)


def format_inex(ranked: RankedList, topic_id: str) -> str:
    lines = [f'<topic id="{topic_id}">']
    for hit in ranked:
        lines.append(
            f'  <result rank="{hit.rank}" file="{hit.doc}" '
            f'path="{hit.path}" rsv="{hit.score:.6f}"/>'
        )
    lines.append("</topic>")
    return "\n".join(lines) + "\n"
