"""Command line interface: index, search, stats, explain.

Exit codes: 0 success, 1 data error, 2 usage error.  Defaults (beta,
cutoff, strategy, phrase mode) can come from a config file; flags win
over the config file, which wins over built-ins.  The STRUX_INDEX
environment variable supplies the default index directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import engine, index, sexpr
from .engine import SearchRequest
from .index import DuplicateDocumentError
from .ingest import IngestConfig, XmlParseError, parse_document
from .pathsim import CostMatrix

DEFAULTS = {
    "strategy": "vv",
    "phrases": "sameplus",
    "beta": 0.5,
    "cutoff": 1500,
}


def load_cli_config(path: str | None) -> dict:
    """`key = value` file with keys: index_dir, ingest_config, strategy,
    phrases, beta, cutoff."""
    if path is None:
        return {}
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in ("beta",):
            values[key] = float(value)
        elif key in ("cutoff",):
            values[key] = int(value)
        elif key in ("index_dir", "ingest_config", "strategy", "phrases"):
            values[key] = value
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return values


def _setting(args, config: dict, key: str):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return DEFAULTS.get(key)


def _index_dir(args, config: dict) -> str:
    if args.index:
        return args.index
    if "index_dir" in config:
        return config["index_dir"]
    env = os.environ.get("STRUX_INDEX")
    if env:
        return env
    raise ValueError("no index directory: pass --index or set STRUX_INDEX")


def _ingest_config(args, config: dict) -> IngestConfig:
    path = getattr(args, "ingest_config", None) or config.get("ingest_config")
    if path:
        return IngestConfig.load(path)
    return IngestConfig()


def cmd_index(args, config: dict) -> int:
    index_dir = Path(_index_dir(args, config))
    if index_dir.exists():
        if not args.force:
            print(f"error: index already exists: {index_dir} (use --force)",
                  file=sys.stderr)
            return 1
        if not (index_dir / "VERSION").exists() and any(index_dir.iterdir()):
            print(f"error: {index_dir} is not an index directory, refusing --force",
                  file=sys.stderr)
            return 1
        for child in sorted(index_dir.rglob("*"), reverse=True):
            child.unlink() if child.is_file() else child.rmdir()
        index_dir.rmdir()
    ingest_config = _ingest_config(args, config)

    files: list[Path] = []
    for item in args.corpus:
        path = Path(item)
        if path.is_dir():
            files.extend(sorted(path.rglob("*.xml")))
        else:
            files.append(path)
    if not files:
        print("error: no documents", file=sys.stderr)
        return 1

    handle = index.IndexHandle()
    parse_seconds = 0.0
    index_seconds = 0.0
    failures = 0
    for path in files:
        started = time.perf_counter()
        try:
            data = path.read_bytes()
            tree = parse_document(data, ingest_config, doc_ref=str(path))
        except (OSError, XmlParseError) as exc:
            print(f"skipped {path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        parsed = time.perf_counter()
        try:
            handle.index_document(tree)
        except DuplicateDocumentError as exc:
            print(f"skipped {path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        parse_seconds += parsed - started
        index_seconds += time.perf_counter() - parsed
    if handle.doc_count() == 0:
        print("error: no documents", file=sys.stderr)
        return 1
    started = time.perf_counter()
    index.commit(handle, index_dir)
    commit_seconds = time.perf_counter() - started

    print(f"indexed {handle.doc_count()} documents "
          f"({failures} skipped) into {index_dir}")
    print(f"distinct terms: {len(handle.term_lists)}")
    print(f"unique contexts: {len(handle.dictionary)}")
    if args.timing:
        print(f"timing: parse {parse_seconds:.3f}s, "
              f"index {index_seconds:.3f}s, commit {commit_seconds:.3f}s")
    return 0


def _read_query_argument(text: str) -> str:
    """A query may be inline text, a file of query text, or an INEX
    topic file with a <castitle> element."""
    path = Path(text)
    if not text.lstrip().startswith(("//", "(")) and path.is_file():
        content = path.read_text("utf-8").strip()
        if "<castitle>" in content:
            start = content.index("<castitle>") + len("<castitle>")
            end = content.index("</castitle>")
            return content[start:end].strip()
        return content
    return text


def cmd_search(args, config: dict) -> int:
    if args.emit_query and args.explain:
        print("usage error: --emit-query and --explain are mutually exclusive",
              file=sys.stderr)
        return 2
    handle = index.open_index(_index_dir(args, config))
    ingest_config = _ingest_config(args, config)
    costs = None
    if args.costs:
        costs = CostMatrix.from_config(args.costs, ingest_config.tag_classes)
    request = SearchRequest(
        query=_read_query_argument(args.query),
        strategy=_setting(args, config, "strategy"),
        content_mode=_setting(args, config, "phrases"),
        beta=_setting(args, config, "beta"),
        cutoff=_setting(args, config, "cutoff"),
        focused=args.focused,
    )
    if args.emit_query:
        tree = engine.parse_request_query(handle, request, ingest_config)
        print(sexpr.print_query(tree))
        return 0
    if args.explain:
        record = engine.explain(handle, request, args.explain, ingest_config, costs)
        print(json.dumps(record, indent=2, sort_keys=True))
        return 0
    started = time.perf_counter()
    ranked = engine.search(handle, request, ingest_config, costs)
    elapsed = time.perf_counter() - started
    if args.format == "tsv":
        sys.stdout.write(engine.format_tsv(ranked))
    elif args.format == "inex":
        sys.stdout.write(engine.format_inex(ranked, args.topic_id))
    else:
        sys.stdout.write(engine.format_table(ranked))
    if args.timing:
        print(f"search time: {elapsed:.3f}s")
    return 0


def cmd_stats(args, config: dict) -> int:
    handle = index.open_index(_index_dir(args, config))
    lengths = [len(path) for _, path in handle.dictionary.items()]
    print(f"documents: {handle.doc_count()}")
    print(f"distinct terms: {len(handle.term_lists)}")
    print(f"unique contexts: {len(handle.dictionary)}")
    if lengths:
        print(f"max context length: {max(lengths)}")
        print(f"mean context length: {sum(lengths) / len(lengths):.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strux",
        description="Structure-aware search over XML corpora",
    )
    parser.add_argument("--config", help="CLI config file (key = value lines)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build an index from XML files")
    p_index.add_argument("corpus", nargs="+", help="directories or .xml files")
    p_index.add_argument("--index", help="index directory to create")
    p_index.add_argument("--ingest-config", help="ingest config file")
    p_index.add_argument("--force", action="store_true",
                         help="replace an existing index")
    p_index.add_argument("--timing", action="store_true")
    p_index.set_defaults(func=cmd_index)

    def add_search_args(p, explain_required: bool):
        p.add_argument("--index", help="index directory")
        p.add_argument("--ingest-config", help="ingest config file")
        p.add_argument("--strategy", choices=["co", "vv", "vs", "sv", "ss"])
        p.add_argument("--phrases", choices=["sameplus", "seq"])
        p.add_argument("--beta", type=float, help="structure weight for in+")
        p.add_argument("--top", dest="cutoff", type=int, help="result cutoff")
        p.add_argument("--focused", action="store_true",
                       help="non-overlapping (highest ancestor) results")
        p.add_argument("--costs", metavar="OVERRIDES",
                       help="edit costs, e.g. 'delete=0 insert=1 substitute=1'")
        p.add_argument("--timing", action="store_true")
        if explain_required:
            p.add_argument("element", help="LOCATOR:/tag[1]/... to explain")
        else:
            p.add_argument("--emit-query", action="store_true",
                           help="print the translated query and exit")
            p.add_argument("--explain", metavar="ELEMENT",
                           help="explain one element (LOCATOR:/tag[1]/...)")
            p.add_argument("--format", choices=["table", "tsv", "inex"],
                           default="table")
            p.add_argument("--topic-id", default="0",
                           help="topic id for --format inex")
        p.add_argument("query", help="NEXI text, s-expression, or file")

    p_search = sub.add_parser("search", help="run a query")
    add_search_args(p_search, explain_required=False)
    p_search.set_defaults(func=cmd_search)

    p_explain = sub.add_parser("explain", help="explain one result element")
    add_search_args(p_explain, explain_required=True)
    p_explain.set_defaults(func=cmd_explain)

    p_stats = sub.add_parser("stats", help="report corpus statistics")
    p_stats.add_argument("--index", help="index directory")
    p_stats.set_defaults(func=cmd_stats)
    return parser


def cmd_explain(args, config: dict) -> int:
    args.emit_query = False
    args.explain = args.element
    args.format = "table"
    args.topic_id = "0"
    return cmd_search(args, config)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_cli_config(args.config)
        return args.func(args, config)
    except (OSError, ValueError, KeyError) as exc:
        # QueryError, XmlParseError, IndexFormatError and friends are
        # ValueErrors; ElementNotFoundError is a KeyError
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()
