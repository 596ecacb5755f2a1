"""Precision@n / MAP evaluation of the recommendation cascade."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from scipy import stats

from . import reputation, text
from .corpus import CorpusStore
from .errors import EmptyQueryError
from .graph import ErScores
from .index import TfIdfIndex, query_tokens
from .pipeline import FusionConfig, RankedExpertList, recommend

CUTOFFS = (1, 5, 10, 20)


def precision_at_n(ranked: Sequence[int], relevant: Iterable[int], n: int) -> float:
    """Fraction of the first ``n`` slots holding a relevant user.

    Slots past the end of a short list count as non-relevant.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rel = set(relevant)
    return sum(1 for u in ranked[:n] if u in rel) / n


def average_precision(ranked: Sequence[int], relevant: Iterable[int]) -> float:
    """Mean of precision@j over the ranks j holding relevant users, divided by |R|."""
    rel = set(relevant)
    if not rel:
        raise ValueError("average precision is undefined without relevant users")
    hits = 0
    total = 0.0
    for j, u in enumerate(ranked, start=1):
        if u in rel:
            hits += 1
            total += hits / j
    return total / len(rel)


def mean_average_precision(aps: Sequence[float]) -> float:
    if not aps:
        raise ValueError("no average precision values to average")
    return sum(aps) / len(aps)


@dataclass(frozen=True)
class QuerySpec:
    query_id: str
    text: str
    gold_experts: frozenset[int] | None = None


def parse_queries(lines: Iterable[str]) -> list[QuerySpec]:
    """One query per line, optionally followed by a tab and gold user ids.

    Gold ids may be separated by tabs, commas or spaces.  Blank lines and
    lines starting with ``#`` are ignored.
    """
    out = []
    for line in lines:
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        query, _, gold = line.partition("\t")
        ids = None
        if gold.strip():
            ids = frozenset(int(tok) for tok in re.split(r"[\s,]+", gold.strip()) if tok)
        out.append(QuerySpec(f"Q{len(out) + 1}", query.strip(), ids))
    return out


def read_queries(path: str | os.PathLike) -> list[QuerySpec]:
    with open(path, encoding="utf-8") as fh:
        return parse_queries(fh)


def sample_queries(store: CorpusStore, n: int, seed: int = 42, min_terms: int = 10,
                   max_terms: int = 20) -> list[QuerySpec]:
    """Draw query texts of ``min_terms``-``max_terms`` content words from questions."""
    rng = random.Random(seed)
    pool = []
    for q in store.questions():
        words = text.content_words(text.strip_markup(text.post_text(q.title, q.body_raw)))
        if len(words) >= min_terms:
            pool.append((q.post_id, words))
    rng.shuffle(pool)
    out = []
    for pid, words in pool[:n]:
        length = rng.randint(min_terms, min(max_terms, len(words)))
        out.append(QuerySpec(f"Q{len(out) + 1}", " ".join(words[:length])))
    return out


@dataclass
class QueryResult:
    query_id: str
    text: str
    judged_by: str
    relevant: list[int]
    ranked: list[int]
    precision: dict[str, float]
    average_precision: float
    top_acceptance: float
    mean_test_score: float | None
    spearman_reputation: float | None
    phase_ranks: list[dict] = field(default_factory=list)


@dataclass
class EvalReport:
    results: list[QueryResult]
    skipped: list[dict]
    config: dict
    settings: dict
    artifacts: dict

    @property
    def map(self) -> float | None:
        if not self.results:
            return None
        return mean_average_precision([r.average_precision for r in self.results])

    def mean_precision(self) -> dict[str, float | None]:
        out = {}
        for n in CUTOFFS:
            vals = [r.precision[f"P@{n}"] for r in self.results]
            out[f"P@{n}"] = sum(vals) / len(vals) if vals else None
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "settings": self.settings,
            "artifacts": self.artifacts,
            "map": self.map,
            "mean_precision": self.mean_precision(),
            "queries": [asdict(r) for r in self.results],
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        head = f"{'query':<6} {'P@1':>5} {'P@5':>5} {'P@10':>5} {'P@20':>5} {'AP':>7} " \
               f"{'accept':>7} {'test_sc':>8} {'rho':>6}"
        lines = [head]
        for r in self.results:
            p = r.precision
            mts = "-" if r.mean_test_score is None else f"{r.mean_test_score:.2f}"
            rho = "-" if r.spearman_reputation is None else f"{r.spearman_reputation:.3f}"
            lines.append(
                f"{r.query_id:<6} {p['P@1']:>5.2f} {p['P@5']:>5.2f} {p['P@10']:>5.2f} "
                f"{p['P@20']:>5.2f} {r.average_precision:>7.4f} {r.top_acceptance:>7.3f} "
                f"{mts:>8} {rho:>6}")
        m = self.map
        lines.append(f"MAP {'-' if m is None else f'{m:.4f}'} over {len(self.results)} "
                     f"queries, {len(self.skipped)} skipped")
        return "\n".join(lines) + "\n"

    def plot_rows(self) -> str:
        """CSV ``query_id,rank,precision`` with precision@rank for each ranked position."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["query_id", "rank", "precision"])
        for r in self.results:
            for n in range(1, len(r.ranked) + 1):
                w.writerow([r.query_id, n, repr(precision_at_n(r.ranked, r.relevant, n))])
        return buf.getvalue()


def coverage_relevant(ranked: RankedExpertList, tokens: Sequence[str], index: TfIdfIndex,
                      threshold: float) -> set[int]:
    """Users whose held-out answers cover at least ``threshold`` of the query terms."""
    distinct = set(tokens)
    out = set()
    for e in ranked.entries:
        bag = index.profiles[e.user_id].test_bag
        if len(distinct & bag.keys()) / len(distinct) >= threshold:
            out.add(e.user_id)
    return out


def _mean_test_score(store: CorpusStore, index: TfIdfIndex, users: Sequence[int]) -> float | None:
    scores = [store.posts[pid].score for u in users for pid in index.profiles[u].test_ids]
    return sum(scores) / len(scores) if scores else None


def _spearman(ranked: RankedExpertList, store: CorpusStore) -> float | None:
    if len(ranked.entries) < 2:
        return None
    fused = [e.fused_score for e in ranked.entries]
    rep = [store.get_user(e.user_id).dump_reputation for e in ranked.entries]
    if len(set(fused)) < 2 or len(set(rep)) < 2:
        return None
    rho = stats.spearmanr(fused, rep).statistic
    return None if math.isnan(rho) else float(rho)


def evaluate_query(q: QuerySpec, cfg: FusionConfig, store: CorpusStore, index: TfIdfIndex,
                   scores: ErScores, relevance_threshold: float = 0.5,
                   top_experts: int = 5) -> QueryResult | dict:
    """Evaluate one query; returns a skip record when it cannot be scored."""
    if q.gold_experts is not None and not q.gold_experts:
        return {"query_id": q.query_id, "reason": "empty gold set"}
    try:
        tokens = query_tokens(q.text, index)
    except EmptyQueryError:
        return {"query_id": q.query_id, "reason": "query has no indexable terms"}
    ranked = recommend(q.text, index, store, scores, cfg)
    if q.gold_experts is not None:
        relevant, judged = set(q.gold_experts), "gold"
    else:
        relevant, judged = coverage_relevant(ranked, tokens, index, relevance_threshold), "coverage"
    if not relevant:
        return {"query_id": q.query_id, "reason": "no relevant experts"}
    ids = ranked.user_ids()
    top = ranked.entries[:top_experts]
    acceptance = [e.features["acceptance_ratio"] for e in top]
    return QueryResult(
        query_id=q.query_id,
        text=q.text,
        judged_by=judged,
        relevant=sorted(relevant),
        ranked=ids,
        precision={f"P@{n}": precision_at_n(ids, relevant, n) for n in CUTOFFS},
        average_precision=average_precision(ids, relevant),
        top_acceptance=sum(acceptance) / len(acceptance) if acceptance else 0.0,
        mean_test_score=_mean_test_score(store, index, [e.user_id for e in top]),
        spearman_reputation=_spearman(ranked, store),
        phase_ranks=[{
            "user_id": e.user_id,
            "phase1_rank": e.phase1_rank,
            "final_rank": e.final_rank,
            "fused_score": e.fused_score,
            "er_score": e.er_score,
            "dump_reputation": store.get_user(e.user_id).dump_reputation,
        } for e in ranked.entries],
    )


def evaluate(queries: Sequence[QuerySpec], cfg: FusionConfig, store: CorpusStore,
             index: TfIdfIndex, scores: ErScores, relevance_threshold: float = 0.5,
             top_experts: int = 5, threads: int = 1) -> EvalReport:
    """Run every query through the cascade and collect P@n, AP and MAP."""
    if not queries:
        raise ValueError("evaluation needs at least one query")

    def run(q):
        return evaluate_query(q, cfg, store, index, scores, relevance_threshold, top_experts)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, queries))
    else:
        outcomes = [run(q) for q in queries]

    results = [o for o in outcomes if isinstance(o, QueryResult)]
    skipped = [o for o in outcomes if isinstance(o, dict)]
    return EvalReport(
        results=results,
        skipped=skipped,
        config=cfg.as_dict(),
        settings={"relevance_threshold": relevance_threshold, "top_experts": top_experts,
                  "cutoffs": list(CUTOFFS)},
        artifacts={"store_fingerprint": store.fingerprint,
                   "index_manifest_hash": index.manifest_hash,
                   "er_d": scores.d},
    )
