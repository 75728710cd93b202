"""Approximate alignment of query paths against indexed context paths.

The distance is a modified Levenshtein cost computed by the classic
string-to-string dynamic program: it is the cheapest way to transform a
context path into the query path using per-node deletion, insertion and
substitution, each with a configurable cost in [0, 1].  The default
scheme makes context-node deletion free, so the distance is 0 exactly
when the query tags form a (not necessarily contiguous) subsequence of
the context tags; every query tag without a counterpart costs 1.  The
cost function is not symmetric and no symmetrization is attempted.

Similarity maps distance d to 1/(1+d), in (0, 1]; near-perfect matches
are amplified relative to distant ones.  Similarities are floats and
should be compared with a 1e-12 tolerance; distances under the default
integer costs are exact ints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .ingest import ContextPath


def _exact_match_cost(query_tag: str, context_tag: str):
    return 0 if query_tag == context_tag else 1


@dataclass(frozen=True)
class CostMatrix:
    """Edit operation costs; substitution is pluggable per tag pair."""

    delete_cost: float = 0       # remove a context node
    insert_cost: float = 1      # add a query node missing from the context
    substitute: Callable[[str, str], float] = _exact_match_cost

    @classmethod
    def with_tag_classes(cls, tag_classes: dict[str, str],
                         delete_cost: float = 0, insert_cost: float = 1,
                         mismatch_cost: float = 1) -> "CostMatrix":
        """Default scheme where tags equal under a class mapping cost 0."""
        def substitute(query_tag: str, context_tag: str):
            same = tag_classes.get(query_tag, query_tag) == tag_classes.get(context_tag, context_tag)
            return 0 if same else mismatch_cost
        return cls(delete_cost=delete_cost, insert_cost=insert_cost, substitute=substitute)

    @classmethod
    def from_config(cls, text: str,
                    tag_classes: dict[str, str] | None = None) -> "CostMatrix":
        """Parse overrides like `delete=0 insert=1 substitute=1`.

        Integral values stay ints so default-style schemes keep exact
        distances; omitted keys keep their defaults.
        """
        values = {"delete": 0, "insert": 1, "substitute": 1}
        for item in text.split():
            if "=" not in item:
                raise ValueError(f"bad cost override {item!r}")
            key, raw = item.split("=", 1)
            if key not in values:
                raise ValueError(f"unknown cost {key!r} (delete/insert/substitute)")
            number = float(raw)
            if not 0.0 <= number <= 1.0:
                raise ValueError(f"cost {key} must lie in [0, 1]")
            values[key] = int(number) if number.is_integer() else number
        return cls.with_tag_classes(tag_classes or {},
                                    delete_cost=values["delete"],
                                    insert_cost=values["insert"],
                                    mismatch_cost=values["substitute"])


DEFAULT_COSTS = CostMatrix()


@dataclass(frozen=True)
class QueryPath:
    """Descendant-axis tag sequence from a query.

    Each step carries an attribute-constraint slot; constraints are
    accepted structurally but always evaluate as absent.
    """

    tags: tuple[str, ...]
    constraints: tuple[object, ...] = ()

    def __post_init__(self):
        if not self.tags:
            raise ValueError("query path must have at least one step")
        if not self.constraints:
            object.__setattr__(self, "constraints", (None,) * len(self.tags))
        elif len(self.constraints) != len(self.tags):
            raise ValueError("one constraint slot per step required")

    def __str__(self) -> str:
        return "/" + "/".join(self.tags) + "/"


@dataclass(frozen=True)
class AlignmentResult:
    distance: float
    similarity: float
    script: tuple[tuple[str, Optional[str], Optional[str]], ...] = ()


def edit_distance(query: QueryPath, context: ContextPath,
                  costs: CostMatrix = DEFAULT_COSTS):
    """Minimal cost of transforming context into the query path."""
    qtags = query.tags
    m, n = len(context), len(qtags)
    if m == 0 or n == 0:
        raise ValueError("paths must be non-empty")
    prev = [j * costs.insert_cost for j in range(n + 1)]
    for i in range(1, m + 1):
        ctag = context[i - 1]
        cur = [prev[0] + costs.delete_cost]
        for j in range(1, n + 1):
            cur.append(min(
                prev[j] + costs.delete_cost,
                cur[j - 1] + costs.insert_cost,
                prev[j - 1] + costs.substitute(qtags[j - 1], ctag),
            ))
        prev = cur
    return prev[n]


def similarity(query: QueryPath, context: ContextPath,
               costs: CostMatrix = DEFAULT_COSTS) -> float:
    return 1.0 / (1.0 + edit_distance(query, context, costs))


def align(query: QueryPath, context: ContextPath,
          costs: CostMatrix = DEFAULT_COSTS) -> AlignmentResult:
    """Like edit_distance but also recovers one optimal edit script.

    Script entries are (op, query_tag, context_tag) with op in
    {keep, substitute, delete, insert}; delete drops a context tag,
    insert adds a query tag the context lacks.
    """
    qtags = query.tags
    m, n = len(context), len(qtags)
    if m == 0 or n == 0:
        raise ValueError("paths must be non-empty")
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for j in range(1, n + 1):
        dp[0][j] = dp[0][j - 1] + costs.insert_cost
    for i in range(1, m + 1):
        dp[i][0] = dp[i - 1][0] + costs.delete_cost
        for j in range(1, n + 1):
            dp[i][j] = min(
                dp[i - 1][j] + costs.delete_cost,
                dp[i][j - 1] + costs.insert_cost,
                dp[i - 1][j - 1] + costs.substitute(qtags[j - 1], context[i - 1]),
            )
    ops = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = costs.substitute(qtags[j - 1], context[i - 1])
            if dp[i][j] == dp[i - 1][j - 1] + sub:
                op = "keep" if sub == 0 else "substitute"
                ops.append((op, qtags[j - 1], context[i - 1]))
                i -= 1
                j -= 1
                continue
        if i > 0 and dp[i][j] == dp[i - 1][j] + costs.delete_cost:
            ops.append(("delete", None, context[i - 1]))
            i -= 1
            continue
        ops.append(("insert", qtags[j - 1], None))
        j -= 1
    distance = dp[m][n]
    return AlignmentResult(
        distance=distance,
        similarity=1.0 / (1.0 + distance),
        script=tuple(reversed(ops)),
    )


def best_similarity(query: QueryPath,
                    candidates: Iterable[tuple[int, ContextPath]],
                    costs: CostMatrix = DEFAULT_COSTS):
    """Max similarity over (context_id, path) candidates.

    Returns (similarity, context_id, path); ties go to the lowest
    context id.  An empty candidate set yields (0.0, None, None),
    meaning no structural evidence.
    """
    best = (0.0, None, None)
    best_distance = None
    for context_id, path in sorted(candidates, key=lambda item: item[0]):
        d = edit_distance(query, path, costs)
        if best_distance is None or d < best_distance:
            best_distance = d
            best = (1.0 / (1.0 + d), context_id, path)
    return best


def is_subsequence(query_tags: tuple[str, ...], context_tags: tuple[str, ...]) -> bool:
    """Order-preserving containment test; with default costs this is
    equivalent to edit_distance == 0."""
    it = iter(context_tags)
    return all(tag in it for tag in query_tags)
