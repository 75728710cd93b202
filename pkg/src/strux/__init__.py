"""strux: structure-aware full-text search over XML corpora.

Indexes every token together with its XML context path and preorder
interval, scores structural constraints by an edit distance over paths
with free context-node deletion, and combines content and structure
evidence through a recursive fuzzy operator algebra.
"""

from .algebra import (And, Filter, In, InPlus, Or, QueryError, ResultSet,
                      SamePlus, ScoredElement, Seq, Term, Without, eval_query)
from .engine import RankedList, SearchRequest, explain, highest_ancestor, propagate_max, search
from .index import IndexHandle, commit, index_document, open_index
from .ingest import IngestConfig, parse_document, tokenize
from .nexi import CasTopic, Strategy, parse_nexi, phrase_to_terms, translate
from .pathsim import (CostMatrix, DEFAULT_COSTS, QueryPath, align, best_similarity,
                      edit_distance, similarity)
from .sexpr import parse_query, print_query

__version__ = "0.1.0"

__all__ = [
    "And", "CasTopic", "CostMatrix", "DEFAULT_COSTS", "Filter", "In", "InPlus",
    "IndexHandle", "IngestConfig", "Or", "QueryError", "QueryPath", "RankedList",
    "ResultSet", "SamePlus", "ScoredElement", "SearchRequest", "Seq", "Strategy",
    "Term", "Without", "align", "best_similarity", "commit", "edit_distance",
    "eval_query", "explain", "highest_ancestor", "index_document", "open_index",
    "parse_document", "parse_nexi", "parse_query", "phrase_to_terms",
    "print_query", "propagate_max", "search", "similarity", "tokenize",
    "translate",
]
