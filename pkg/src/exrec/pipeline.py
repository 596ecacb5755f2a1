"""The two-phase recommendation cascade.

Phase 1 ranks candidates by content relevance; phase 2 re-ranks that fixed
candidate set by fusing network prestige (ExpertiseRank) with reputation.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Mapping

from . import reputation
from .corpus import CorpusStore
from .errors import IntegrityError, NotFoundError
from .graph import ErScores, candidate_er
from .index import PRECISION_MODES, TfIdfIndex, check_store, match_experts


@dataclass(frozen=True)
class FusionConfig:
    alpha: float = 0.5
    k_posts: int = 50
    k_users: int = 20
    d: float = 0.85
    tol: float = 1e-8
    max_iter: int = 100
    seed: int = 42
    accept_threshold: int = 15
    use_accepted_flag: bool = False
    test_fraction: float = 0.2
    weighted: bool = False
    precision: str = "coverage"
    significance_scope: str = "candidates"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.k_posts < 1 or self.k_users < 1:
            raise ValueError("k_posts and k_users must be positive")
        if not 0.0 < self.d < 1.0:
            raise ValueError(f"damping factor must lie in (0, 1), got {self.d}")
        if self.precision not in PRECISION_MODES:
            raise ValueError(f"precision must be one of {PRECISION_MODES}")
        if self.significance_scope not in ("candidates", "global"):
            raise ValueError("significance_scope must be 'candidates' or 'global'")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, values: Mapping) -> "FusionConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in names})


@dataclass
class RankedEntry:
    user_id: int
    phase1_rank: int
    relevance_score: float
    test_precision: float
    er_score: float
    er_norm: float
    significance: float
    fused_score: float
    final_rank: int = 0
    features: dict = field(default_factory=dict)


@dataclass
class RankedExpertList:
    query: str
    entries: list[RankedEntry]
    config: dict
    artifacts: dict = field(default_factory=dict)

    def user_ids(self) -> list[int]:
        return [e.user_id for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "config": self.config,
            "artifacts": self.artifacts,
            "entries": [asdict(e) for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self, top: int | None = None) -> str:
        header = f"{'rank':>4} {'user':>10} {'phase1':>6} {'relev':>7} {'prec':>6} " \
                 f"{'ER':>10} {'signif':>7} {'fused':>7}"
        lines = [f"query: {self.query}", header]
        for e in self.entries[:top]:
            lines.append(
                f"{e.final_rank:>4} {e.user_id:>10} {e.phase1_rank:>6} {e.relevance_score:>7.4f} "
                f"{e.test_precision:>6.3f} {e.er_score:>10.4f} {e.significance:>7.4f} {e.fused_score:>7.4f}")
        if not self.entries:
            lines.append("(no candidates)")
        return "\n".join(lines) + "\n"


def _minmax(values: list[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.5] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def _global_significance(store: CorpusStore, cfg: FusionConfig) -> dict[int, float]:
    answerers = sorted({a.owner_user_id for a in store.answers() if a.owner_user_id is not None})
    feats = [reputation.compute_features(store, u, cfg.accept_threshold, cfg.use_accepted_flag)
             for u in answerers]
    return {s.user_id: s.significance for s in reputation.significance(feats)}


def recommend(query: str, index: TfIdfIndex, store: CorpusStore, graph_scores: ErScores,
              cfg: FusionConfig | None = None) -> RankedExpertList:
    cfg = cfg or FusionConfig()
    check_store(index, store)
    graph_fp = graph_scores.params.get("store_fingerprint")
    if graph_fp is not None and graph_fp != store.fingerprint:
        raise IntegrityError(
            f"graph scores were built from corpus {graph_fp} but the store is {store.fingerprint}")
    artifacts = {
        "store_fingerprint": store.fingerprint,
        "index_manifest_hash": index.manifest_hash,
        "er_d": graph_scores.d,
        "er_weighted": graph_scores.weighted,
    }
    candidates = match_experts(query, index, store, cfg.k_posts, cfg.k_users, cfg.seed, cfg.precision)
    if not candidates:
        return RankedExpertList(query, [], cfg.as_dict(), artifacts)

    ids = [c.user_id for c in candidates]
    er = candidate_er(graph_scores, ids)
    feats = [reputation.compute_features(store, u, cfg.accept_threshold, cfg.use_accepted_flag)
             for u in ids]
    if cfg.significance_scope == "global":
        table = _global_significance(store, cfg)
        sig = {u: table.get(u, 0.0) for u in ids}
    else:
        sig = {s.user_id: s.significance for s in reputation.significance(feats)}
    er_norm = dict(zip(ids, _minmax([er[u] for u in ids])))

    entries = []
    for c, f in zip(candidates, feats):
        fused = cfg.alpha * er_norm[c.user_id] + (1.0 - cfg.alpha) * sig[c.user_id]
        entries.append(RankedEntry(
            user_id=c.user_id, phase1_rank=c.phase1_rank, relevance_score=c.relevance_score,
            test_precision=c.test_precision, er_score=er[c.user_id], er_norm=er_norm[c.user_id],
            significance=sig[c.user_id], fused_score=fused,
            features={k: v for k, v in asdict(f).items() if k != "user_id"},
        ))
    entries.sort(key=lambda e: (-e.fused_score, -e.relevance_score, e.user_id))
    for rank, e in enumerate(entries, start=1):
        e.final_rank = rank
    return RankedExpertList(query, entries, cfg.as_dict(), artifacts)


def _rank_by(entries: list[RankedEntry], key) -> dict[int, int]:
    order = sorted(entries, key=lambda e: (-key(e), e.user_id))
    return {e.user_id: i for i, e in enumerate(order, start=1)}


def explain(ranked: RankedExpertList, user_id: int) -> dict:
    """Every per-phase score and rank for one listed user."""
    entry = next((e for e in ranked.entries if e.user_id == user_id), None)
    if entry is None:
        raise NotFoundError(f"user {user_id} is not in the ranked list for {ranked.query!r}")
    er_rank = _rank_by(ranked.entries, lambda e: e.er_score)
    sig_rank = _rank_by(ranked.entries, lambda e: e.significance)
    return {
        "user_id": user_id,
        "query": ranked.query,
        "phase1_rank": entry.phase1_rank,
        "final_rank": entry.final_rank,
        "rank_change": entry.phase1_rank - entry.final_rank,
        "er_rank": er_rank[user_id],
        "significance_rank": sig_rank[user_id],
        "relevance_score": entry.relevance_score,
        "test_precision": entry.test_precision,
        "er_score": entry.er_score,
        "er_norm": entry.er_norm,
        "significance": entry.significance,
        "fused_score": entry.fused_score,
        "features": dict(entry.features),
        "candidates": len(ranked.entries),
    }
