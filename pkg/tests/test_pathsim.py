"""Edit distance and similarity against independent oracles.

The oracle enumerates every edit script directly.  A script is fully
determined by which context positions align to which query positions
(order preserving); unmatched context nodes are deleted, unmatched
query nodes inserted, matched pairs substituted.  Minimizing the summed
cost over all monotone matchings enumerates the whole transformation
set without any dynamic programming.
"""

import random
from itertools import combinations, product

import pytest

from strux.pathsim import (CostMatrix, DEFAULT_COSTS, QueryPath, align,
                           best_similarity, edit_distance, is_subsequence,
                           similarity)


def oracle_distance(query_tags, context_tags, costs=DEFAULT_COSTS):
    m, n = len(context_tags), len(query_tags)
    best = None
    for k in range(min(m, n) + 1):
        for ctx_pick in combinations(range(m), k):
            for qry_pick in combinations(range(n), k):
                cost = costs.delete_cost * (m - k) + costs.insert_cost * (n - k)
                for i, j in zip(ctx_pick, qry_pick):
                    cost += costs.substitute(query_tags[j], context_tags[i])
                if best is None or cost < best:
                    best = cost
    return best


def subsequence_oracle(query_tags, context_tags):
    i = 0
    for tag in context_tags:
        if i < len(query_tags) and query_tags[i] == tag:
            i += 1
    return i == len(query_tags)


# --- worked examples --------------------------------------------------------

BIBLIO_A = ("article", "bm", "bib", "bibl", "bb", "au", "snm")
BIBLIO_B = ("article", "bm", "app", "bib", "bibl", "bb", "au", "snm")
FRONT = ("article", "fm", "au", "snm")


def test_bibliography_contexts_distance_zero():
    query = QueryPath(("article", "bb"))
    assert edit_distance(query, BIBLIO_A) == 0
    assert edit_distance(query, BIBLIO_B) == 0


def test_front_matter_context_distance_one():
    assert edit_distance(QueryPath(("article", "bb")), FRONT) == 1


def test_worked_similarities():
    query = QueryPath(("article", "bb"))
    assert similarity(query, BIBLIO_A) == 1.0
    assert similarity(query, BIBLIO_B) == 1.0
    assert similarity(query, FRONT) == 0.5


def test_identity_distance_zero():
    for tags in [("a",), ("a", "b"), ("article", "bdy", "sec")]:
        assert edit_distance(QueryPath(tags), tags) == 0
        assert similarity(QueryPath(tags), tags) == 1.0


def test_similarity_values():
    # distance d maps to 1/(1+d)
    q = QueryPath(("a", "b", "c", "d"))
    assert edit_distance(q, ("x",)) == 4
    assert similarity(q, ("x",)) == pytest.approx(1 / 5, abs=1e-12)
    assert similarity(QueryPath(("a", "b", "c")), ("z",)) == pytest.approx(0.25, abs=1e-12)


# --- oracle equivalence ------------------------------------------------------

def test_dp_equals_script_enumeration_small_exhaustive():
    tags = "abc"
    paths = [p for ln in (1, 2, 3) for p in product(tags, repeat=ln)]
    for qt in paths:
        for ct in paths:
            assert edit_distance(QueryPath(qt), ct) == oracle_distance(qt, ct)


def test_dp_equals_oracle_random_costs():
    rng = random.Random(7)
    for _ in range(200):
        delete = rng.choice([0, 0.25, 0.5, 1])
        insert = rng.choice([0.25, 0.5, 1])
        mismatch = rng.choice([0.25, 0.5, 1])
        costs = CostMatrix(
            delete_cost=delete, insert_cost=insert,
            substitute=lambda q, c, _m=mismatch: 0 if q == c else _m)
        qt = tuple(rng.choice("abcd") for _ in range(rng.randint(1, 4)))
        ct = tuple(rng.choice("abcd") for _ in range(rng.randint(1, 4)))
        got = edit_distance(QueryPath(qt), ct, costs)
        assert got == pytest.approx(oracle_distance(qt, ct, costs), abs=1e-12)


# --- default-cost properties -------------------------------------------------

def random_pair(rng, max_len=6, tags="abcdef"):
    qt = tuple(rng.choice(tags) for _ in range(rng.randint(1, max_len)))
    ct = tuple(rng.choice(tags) for _ in range(rng.randint(1, max_len)))
    return qt, ct


def test_zero_distance_iff_subsequence():
    rng = random.Random(99)
    for _ in range(2000):
        if rng.random() < 0.5:
            qt, ct = random_pair(rng)
        else:
            # force the subsequence case
            ct = tuple(rng.choice("abc") for _ in range(rng.randint(1, 8)))
            k = rng.randint(1, len(ct))
            qt = tuple(ct[i] for i in sorted(rng.sample(range(len(ct)), k)))
        d = edit_distance(QueryPath(qt), ct)
        assert (d == 0) == subsequence_oracle(qt, ct)
        assert is_subsequence(qt, ct) == subsequence_oracle(qt, ct)


def test_missing_tag_costs_exactly_one_insert():
    rng = random.Random(5)
    for _ in range(300):
        qt, ct = random_pair(rng, max_len=5, tags="abc")
        fresh = "z"                          # appears in no context
        base = edit_distance(QueryPath(qt), ct)
        extended = edit_distance(QueryPath(qt + (fresh,)), ct)
        assert extended == base + 1


def test_order_sensitivity():
    assert edit_distance(QueryPath(("a", "b")), ("b", "a")) >= 1


def test_similarity_range():
    rng = random.Random(17)
    for _ in range(500):
        qt, ct = random_pair(rng)
        s = similarity(QueryPath(qt), ct)
        assert 0.0 < s <= 1.0


def test_asymmetry_is_real():
    # free context deletion makes the measure one-directional
    q = QueryPath(("a",))
    assert edit_distance(q, ("a", "b", "c")) == 0
    assert edit_distance(QueryPath(("a", "b", "c")), ("a",)) == 2


# --- alignment scripts -------------------------------------------------------

def test_align_matches_distance_and_script_cost():
    rng = random.Random(3)
    for _ in range(300):
        qt, ct = random_pair(rng)
        result = align(QueryPath(qt), ct)
        assert result.distance == edit_distance(QueryPath(qt), ct)
        assert result.similarity == pytest.approx(1 / (1 + result.distance), abs=1e-12)
        cost = 0
        qi = ci = 0
        for op, qtag, ctag in result.script:
            if op in ("keep", "substitute"):
                assert qtag == qt[qi] and ctag == ct[ci]
                cost += 0 if op == "keep" else 1
                qi += 1
                ci += 1
            elif op == "delete":
                assert ctag == ct[ci]
                ci += 1
            else:
                assert op == "insert" and qtag == qt[qi]
                cost += 1
                qi += 1
        assert (qi, ci) == (len(qt), len(ct))
        assert cost == result.distance


# --- best over candidate sets ------------------------------------------------

def test_best_similarity_worked_contexts():
    query = QueryPath(("article", "bb"))
    candidates = [(0, BIBLIO_A), (1, BIBLIO_B), (2, FRONT)]
    score, cid, path = best_similarity(query, candidates)
    assert score == 1.0
    assert cid == 0 and path == BIBLIO_A     # tie broken by lowest id


def test_best_similarity_singleton_and_empty():
    query = QueryPath(("a", "b"))
    score, cid, path = best_similarity(query, [(7, ("a", "x"))])
    assert score == 0.5 and cid == 7
    assert best_similarity(query, []) == (0.0, None, None)


def test_best_similarity_equals_loop_max():
    rng = random.Random(23)
    for _ in range(100):
        qt, _ = random_pair(rng)
        candidates = [(i, random_pair(rng)[1]) for i in range(rng.randint(1, 20))]
        score, cid, _path = best_similarity(QueryPath(qt), candidates)
        by_loop = max(similarity(QueryPath(qt), ct) for _, ct in candidates)
        assert score == pytest.approx(by_loop, abs=1e-12)


def test_integer_costs_stay_exact():
    q = QueryPath(("a", "b", "c"))
    d = edit_distance(q, ("x", "y"))
    assert isinstance(d, int)


# --- cost overrides from config ------------------------------------------------

def test_cost_overrides_from_config():
    costs = CostMatrix.from_config("delete=0 insert=1 substitute=1")
    q = QueryPath(("article", "bb"))
    assert edit_distance(q, BIBLIO_A, costs) == 0
    assert edit_distance(q, FRONT, costs) == 1

    lax = CostMatrix.from_config("delete=0 insert=0.5 substitute=1")
    assert edit_distance(QueryPath(("a", "b")), ("a",), lax) == 0.5


def test_cost_overrides_defaults_and_errors():
    costs = CostMatrix.from_config("")
    assert costs.delete_cost == 0 and costs.insert_cost == 1
    assert isinstance(edit_distance(QueryPath(("a",)), ("b",), costs), int)
    with pytest.raises(ValueError):
        CostMatrix.from_config("delete=2")
    with pytest.raises(ValueError):
        CostMatrix.from_config("teleport=1")
    with pytest.raises(ValueError):
        CostMatrix.from_config("insert")


def test_cost_overrides_respect_tag_classes():
    costs = CostMatrix.from_config("delete=0 insert=1 substitute=1",
                                   tag_classes={"p1": "para", "p2": "para"})
    assert edit_distance(QueryPath(("p1",)), ("p2",), costs) == 0
