"""Command-line front end: ``exrec <subcommand> ...``.

Exit codes: 0 success, 1 usage/argument error, 2 I/O error, 3 dump parse
error, 4 integrity error (duplicate ids, artifacts built from different
inputs).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

from . import config as cfgmod
from .corpus import CorpusStore, export_posts_xml, export_users_xml, ingest_dump, parse_timestamp
from .errors import DumpParseError, IntegrityError
from .evaluation import evaluate, read_queries, sample_queries
from .graph import build_graph, expertise_rank, load_graph_artifacts, save_graph_artifacts
from .index import TfIdfIndex, build_index, check_store
from .pipeline import explain, recommend

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PARSE, EXIT_INTEGRITY = 0, 1, 2, 3, 4

logger = logging.getLogger("exrec")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_DEFAULTS = cfgmod.RunConfig()


def _opt(p, flag, help, **kw):
    """Option whose absence leaves the config-file/default value in force."""
    dest = flag.lstrip("-").replace("-", "_")
    default = getattr(_DEFAULTS, dest, kw.pop("shown_default", None))
    p.add_argument(flag, dest=dest, default=argparse.SUPPRESS,
                   help=f"{help} (default: {default})", **kw)


def _common(p):
    p.add_argument("--config", default=None, help="key = value config file (default: $EXREC_CONFIG)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help=f"worker threads; results do not depend on it (default: {_DEFAULTS.threads})")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress (default: off)")


def _artifact_args(p, need_graph=True):
    p.add_argument("--store", required=True, help="corpus store directory (required)")
    p.add_argument("--index", required=True, help="index directory (required)")
    if need_graph:
        p.add_argument("--graph", required=True, help="graph directory (required)")


def _fusion_args(p):
    _opt(p, "--alpha", "weight of normalised ExpertiseRank against significance", type=float)
    _opt(p, "--k-posts", "similar answer posts gathered in phase 1", type=int)
    _opt(p, "--k-users", "candidate experts kept after phase 1", type=int)
    _opt(p, "--seed", "seed for train/test splits; must match the index", type=int)
    _opt(p, "--accept-threshold", "score at which an answer counts as accepted", type=int)
    _opt(p, "--use-accepted-flag", "also count the question's accepted answer",
         type=lambda s: cfgmod._coerce("use_accepted_flag", s))
    _opt(p, "--precision", "phase-1 precision measure", choices=["coverage", "cosine"])
    _opt(p, "--significance-scope", "normalise reputation over", choices=["candidates", "global"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="exrec", description="Cascaded expert recommendation for Q&A communities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse Posts.xml/Users.xml into a corpus store")
    p.add_argument("posts_file", help="Stack Exchange Posts.xml")
    p.add_argument("--users", default=None, help="Users.xml (default: none)")
    p.add_argument("--out", required=True, help="output store directory (required)")
    _opt(p, "--date-from", "keep posts created at or after this ISO timestamp")
    _opt(p, "--date-to", "keep posts created at or before this ISO timestamp")
    p.add_argument("--export", default=None, help="directory to write retained posts/users back as dump XML (default: none)")
    _common(p)

    p = sub.add_parser("index", help="build the TF-IDF index and user profiles")
    p.add_argument("--store", required=True, help="corpus store directory (required)")
    p.add_argument("--out", required=True, help="output index directory (required)")
    _opt(p, "--seed", "seed for train/test splits", type=int)
    _opt(p, "--test-fraction", "share of each user's answers held out", type=float)
    _opt(p, "--idf-variant", "idf formula", choices=["smooth", "raw"])
    _opt(p, "--stemmer", "Porter variant", choices=["original", "martin"])
    _common(p)

    p = sub.add_parser("graph", help="build the asker->answerer graph and ExpertiseRank")
    p.add_argument("--store", required=True, help="corpus store directory (required)")
    p.add_argument("--out", required=True, help="output graph directory (required)")
    _opt(p, "--d", "damping factor", type=float)
    _opt(p, "--tol", "convergence threshold on the max per-node change", type=float)
    _opt(p, "--max-iter", "iteration cap", type=int)
    _opt(p, "--weighted", "spread score by edge weight",
         type=lambda s: cfgmod._coerce("weighted", s))
    _common(p)

    p = sub.add_parser("recommend", help="rank experts for one query")
    _artifact_args(p)
    p.add_argument("--query", required=True, help="question text (required)")
    p.add_argument("--top", type=int, default=None, help="rows to print (default: all)")
    p.add_argument("--json", default=None, help="also write the JSON report here (default: none)")
    _opt(p, "--output-format", "stdout format", choices=["table", "json"])
    _fusion_args(p)
    _common(p)

    p = sub.add_parser("explain", help="per-phase scores and ranks for one user")
    _artifact_args(p)
    p.add_argument("--query", required=True, help="question text (required)")
    p.add_argument("--user", type=int, required=True, help="user id (required)")
    _fusion_args(p)
    _common(p)

    p = sub.add_parser("evaluate", help="P@n / MAP evaluation over a query file")
    _artifact_args(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--queries", help="one query per line, optional TAB + gold user ids (required unless --sample)")
    src.add_argument("--sample", type=int, help="sample this many 10-20 term queries from questions (required unless --queries)")
    p.add_argument("--out", default=None, help="JSON report path (default: stdout table only)")
    p.add_argument("--plot-data", default=None,
                   help="write per-rank precision CSV (query_id,rank,precision) (default: none)")
    _opt(p, "--relevance-threshold", "query-term coverage needed to count as relevant without gold",
         type=float)
    _opt(p, "--top-experts", "experts averaged for acceptance / test score columns", type=int)
    _fusion_args(p)
    _common(p)
    return parser


def _run_config(args) -> cfgmod.RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k in cfgmod._FIELDS}
    try:
        return cfgmod.resolve(overrides, args.config)
    except (TypeError, ValueError) as exc:
        raise _UsageError(str(exc)) from None


def _load_artifacts(args, need_graph=True):
    store = CorpusStore.load(args.store)
    index = TfIdfIndex.load(args.index)
    check_store(index, store)
    scores = None
    if need_graph:
        _, scores, manifest = load_graph_artifacts(args.graph)
        if manifest["store_fingerprint"] != store.fingerprint:
            raise IntegrityError(
                f"graph was built from corpus {manifest['store_fingerprint']} "
                f"but the store is {store.fingerprint}")
    return store, index, scores


def _timestamp(value: str | None) -> datetime | None:
    if value is None:
        return None
    try:
        return parse_timestamp(value)
    except ValueError:
        raise _UsageError(f"bad timestamp {value!r}") from None


def cmd_ingest(args) -> int:
    cfg = _run_config(args)
    start, end = _timestamp(cfg.date_from), _timestamp(cfg.date_to)
    window = None
    if start or end:
        window = (start or datetime.min, end or datetime.max)
        if window[0] > window[1]:
            raise _UsageError("--date-from is after --date-to")
    store, summary = ingest_dump(args.posts_file, args.users, None, window)
    params = dict(store.manifest["ingest"], run_config=cfg.as_dict())
    if window is None:
        store.save(args.out, params, summary.skipped, summary.rows)
    else:
        store.save(args.out, params)
    if args.export:
        export_dir = Path(args.export)
        export_dir.mkdir(parents=True, exist_ok=True)
        export_posts_xml(store, export_dir / "Posts.xml")
        if args.users:
            export_users_xml(store, export_dir / "Users.xml")
    print(json.dumps({"summary": summary.as_dict(), "stored": store.summary().as_dict(),
                      "fingerprint": store.fingerprint}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_index(args) -> int:
    cfg = _run_config(args)
    store = CorpusStore.load(args.store)
    index = build_index(store, seed=cfg.seed, test_fraction=cfg.test_fraction,
                        idf_variant=cfg.idf_variant, stem_mode=cfg.stemmer,
                        k_posts=cfg.k_posts, k_users=cfg.k_users)
    index.manifest["run_config"] = cfg.as_dict()
    index.save(args.out)
    print(json.dumps({k: index.manifest[k] for k in ("doc_count", "post_docs", "user_docs",
                                                      "vocabulary_size", "store_fingerprint")}
                     | {"manifest_hash": index.manifest_hash}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_graph(args) -> int:
    cfg = _run_config(args)
    store = CorpusStore.load(args.store)
    graph = build_graph(store)
    scores = expertise_rank(graph, cfg.d, cfg.tol, cfg.max_iter, cfg.weighted)
    scores.params["run_config"] = cfg.as_dict()
    save_graph_artifacts(args.out, graph, scores, store.fingerprint)
    if not scores.converged:
        logger.warning("ExpertiseRank did not converge in %d iterations (residual %.3g)",
                       scores.iterations, scores.residual)
    print(json.dumps({"nodes": len(graph.nodes), "edges": len(graph.edge_weight),
                      "iterations": scores.iterations, "residual": scores.residual,
                      "converged": scores.converged}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_recommend(args) -> int:
    cfg = _run_config(args)
    store, index, scores = _load_artifacts(args)
    ranked = recommend(args.query, index, store, scores, cfg.fusion())
    ranked.config = cfg.as_dict()
    if args.json:
        Path(args.json).write_text(ranked.to_json(), encoding="utf-8")
    if cfg.output_format == "json":
        sys.stdout.write(ranked.to_json())
    else:
        sys.stdout.write(ranked.to_table(args.top))
    return EXIT_OK


def cmd_explain(args) -> int:
    cfg = _run_config(args)
    store, index, scores = _load_artifacts(args)
    ranked = recommend(args.query, index, store, scores, cfg.fusion())
    report = explain(ranked, args.user)
    report["run_config"] = cfg.as_dict()
    report["artifacts"] = ranked.artifacts
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _run_config(args)
    store, index, scores = _load_artifacts(args)
    if args.queries:
        queries = read_queries(args.queries)
    else:
        queries = sample_queries(store, args.sample, cfg.seed)
    report = evaluate(queries, cfg.fusion(), store, index, scores, cfg.relevance_threshold,
                      cfg.top_experts, cfg.threads)
    report.config = cfg.as_dict()
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    if args.plot_data:
        Path(args.plot_data).write_text(report.plot_rows(), encoding="utf-8")
    sys.stdout.write(report.to_table())
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "index": cmd_index,
    "graph": cmd_graph,
    "recommend": cmd_recommend,
    "explain": cmd_explain,
    "evaluate": cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DumpParseError as exc:
        print(f"exrec: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except IntegrityError as exc:
        print(f"exrec: integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except OSError as exc:
        print(f"exrec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (_UsageError, ValueError, KeyError) as exc:
        print(f"exrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
