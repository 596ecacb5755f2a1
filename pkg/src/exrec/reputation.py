"""Per-user reputation features and the candidate-relative significance score."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import CorpusStore
from .errors import NotFoundError

FEATURES = ("acceptance_ratio", "avg_score", "avg_views", "avg_favorite")


@dataclass(frozen=True)
class ReputationFeatures:
    user_id: int
    answers_count: int = 0
    accepted_answers: int = 0
    acceptance_ratio: float = 0.0
    avg_score: float = 0.0
    avg_views: float = 0.0
    avg_favorite: float = 0.0

    def vector(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in FEATURES)


@dataclass(frozen=True)
class SignificanceScore:
    user_id: int
    significance: float
    normalized: dict[str, float]


def compute_features(store: CorpusStore, user_id: int, accept_threshold: int = 15,
                     use_accepted_flag: bool = False) -> ReputationFeatures:
    """Aggregate a user's answers.

    An answer counts as accepted when its score reaches ``accept_threshold``
    (or, with ``use_accepted_flag``, when the question marks it accepted).
    Views and favourites come from the parent question; orphaned answers
    are left out of those two averages.
    """
    if not store.has_user(user_id):
        raise NotFoundError(f"unknown user {user_id}")
    answers = store.answers_by(user_id)
    if not answers:
        return ReputationFeatures(user_id)
    accepted = 0
    views, favs = [], []
    for a in answers:
        parent = store.parent_of(a)
        flagged = use_accepted_flag and parent is not None and parent.accepted_answer_id == a.post_id
        if a.score >= accept_threshold or flagged:
            accepted += 1
        if parent is not None:
            views.append(parent.view_count)
            favs.append(parent.favorite_count)
    n = len(answers)
    return ReputationFeatures(
        user_id=user_id,
        answers_count=n,
        accepted_answers=accepted,
        acceptance_ratio=accepted / n,
        avg_score=sum(a.score for a in answers) / n,
        avg_views=sum(views) / len(views) if views else 0.0,
        avg_favorite=sum(favs) / len(favs) if favs else 0.0,
    )


def _minmax(values: Sequence[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.5] * len(values)
    span = hi - lo
    return [(v - lo) / span for v in values]


def significance(features: Sequence[ReputationFeatures],
                 weights: Mapping[str, float] | None = None) -> list[SignificanceScore]:
    """Min-max normalise each feature across ``features`` and average them.

    A feature that is constant across the list normalises to 0.5.
    """
    if not features:
        raise ValueError("significance needs at least one candidate")
    weights = dict(weights) if weights else dict.fromkeys(FEATURES, 1.0)
    if set(weights) != set(FEATURES) or any(w < 0 for w in weights.values()):
        raise ValueError(f"weights must give a non-negative value for each of {FEATURES}")
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("feature weights sum to zero")
    columns = {f: _minmax([getattr(x, f) for x in features]) for f in FEATURES}
    out = []
    for i, x in enumerate(features):
        norm = {f: columns[f][i] for f in FEATURES}
        sig = sum(weights[f] * norm[f] for f in FEATURES) / total
        out.append(SignificanceScore(x.user_id, min(1.0, max(0.0, sig)), norm))
    return out


def features_table(features: Sequence[ReputationFeatures],
                   scores: Sequence[SignificanceScore] | None = None) -> str:
    """CSV with columns ``user_id,answers_count,accepted_answers,<features>[,significance]``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["user_id", "answers_count", "accepted_answers", *FEATURES]
    if scores is not None:
        header.append("significance")
    w.writerow(header)
    sig = {s.user_id: s.significance for s in scores or ()}
    for x in features:
        row = [x.user_id, x.answers_count, x.accepted_answers, *(repr(v) for v in x.vector())]
        if scores is not None:
            row.append(repr(sig[x.user_id]))
        w.writerow(row)
    return buf.getvalue()
