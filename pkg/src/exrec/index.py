"""TF-IDF vector space index and the expert matching phase.

The index holds two kinds of documents: one per answer post, and one per
user built from that user's training answers (the held-out answers are kept
aside for precision scoring).  Weights are raw term count times idf, then
L2-normalised, so cosine similarity reduces to a dot product.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from . import text
from .corpus import CorpusStore
from .errors import EmptyQueryError, IntegrityError

INDEX_SCHEMA_VERSION = 1
IDF_VARIANTS = ("smooth", "raw")
PRECISION_MODES = ("coverage", "cosine")

TIE_EPS = 1e-12

POST = "post"
USER = "user"


def idf(df: int | np.ndarray, n: int, variant: str = "smooth"):
    """Inverse document frequency.

    ``smooth`` is ``ln((1 + n) / (1 + df)) + 1``; ``raw`` is ``ln(n / df)``.
    """
    if variant == "smooth":
        return np.log((1.0 + n) / (1.0 + np.asarray(df, dtype=float))) + 1.0
    if variant == "raw":
        return np.log(n / np.asarray(df, dtype=float))
    raise ValueError(f"unknown idf variant {variant!r}")


def cosine(u, v) -> float:
    """Cosine similarity of two non-negative vectors, 0 if either is zero.

    Accepts sparse mappings ``{dim: weight}`` or dense sequences.
    """
    if isinstance(u, Mapping) and isinstance(v, Mapping):
        if len(u) > len(v):
            u, v = v, u
        dot = sum(w * v[k] for k, w in u.items() if k in v)
        nu = math.sqrt(sum(w * w for w in u.values()))
        nv = math.sqrt(sum(w * w for w in v.values()))
    else:
        a = np.asarray(u, dtype=float)
        b = np.asarray(v, dtype=float)
        dot = float(a @ b)
        nu = float(np.linalg.norm(a))
        nv = float(np.linalg.norm(b))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return min(1.0, max(0.0, dot / (nu * nv)))


# -- expert profiles -----------------------------------------------------------

@dataclass
class ExpertProfile:
    """Term evidence for one user.

    ``answer_docs`` maps answer post id to its token list; ``train_ids`` and
    ``test_ids`` partition those ids once :func:`split_profile` has run.
    """

    user_id: int
    question_bag: Counter = field(default_factory=Counter)
    answer_docs: dict[int, list[str]] = field(default_factory=dict)
    train_ids: tuple[int, ...] = ()
    test_ids: tuple[int, ...] = ()

    @property
    def full_bag(self) -> Counter:
        return text.merge_bags([self.question_bag, *map(Counter, self.answer_docs.values())])

    @property
    def train_bag(self) -> Counter:
        return text.merge_bags(Counter(self.answer_docs[i]) for i in self.train_ids)

    @property
    def test_bag(self) -> Counter:
        return text.merge_bags(Counter(self.answer_docs[i]) for i in self.test_ids)


def _test_count(n: int, test_fraction: float) -> int:
    # exact rational ceil so 0.2 * 15 gives 3, not 4
    return math.ceil(Fraction(test_fraction).limit_denominator(10**6) * n)


def split_profile(profile: ExpertProfile, test_fraction: float = 0.2, seed: int = 42) -> ExpertProfile:
    """Randomly hold out ``ceil(test_fraction * n)`` answers as the test set."""
    if not profile.answer_docs:
        raise ValueError(f"user {profile.user_id} has no answer documents to split")
    if not 0.0 <= test_fraction <= 1.0:
        raise ValueError(f"test_fraction must be in [0, 1], got {test_fraction}")
    ids = sorted(profile.answer_docs)
    random.Random(f"{seed}:{profile.user_id}").shuffle(ids)
    n_test = _test_count(len(ids), test_fraction)
    return replace(profile, test_ids=tuple(sorted(ids[:n_test])),
                   train_ids=tuple(sorted(ids[n_test:])))


def build_profiles(store: CorpusStore, stem_mode: str = "original") -> tuple[dict[int, ExpertProfile], dict[int, list[str]]]:
    """Profiles for every post owner, plus the token list of every answer."""
    answer_tokens: dict[int, list[str]] = {}
    profiles: dict[int, ExpertProfile] = {}
    for post in store.posts.values():
        tokens = text.clean_text(text.post_text(post.title, post.body_raw), mode=stem_mode)
        if not post.is_question:
            answer_tokens[post.post_id] = tokens
        if post.owner_user_id is None:
            continue
        prof = profiles.setdefault(post.owner_user_id, ExpertProfile(post.owner_user_id))
        if post.is_question:
            prof.question_bag.update(tokens)
        else:
            prof.answer_docs[post.post_id] = tokens
    return profiles, answer_tokens


# -- the index -----------------------------------------------------------------

def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class TfIdfIndex:
    """Sparse TF-IDF document matrix split into post rows and user rows."""

    def __init__(self, documents: Sequence[tuple[tuple[str, int], Mapping[str, int]]],
                 idf_variant: str = "smooth",
                 profiles: Mapping[int, ExpertProfile] | None = None,
                 manifest: Mapping | None = None):
        if not documents:
            raise ValueError("cannot index an empty document collection")
        if idf_variant not in IDF_VARIANTS:
            raise ValueError(f"unknown idf variant {idf_variant!r}")
        self.idf_variant = idf_variant
        self.profiles = dict(profiles or {})

        df: Counter = Counter()
        for _, counts in documents:
            df.update(t for t, c in counts.items() if c > 0)
        terms = sorted(df)
        self.vocabulary: dict[str, int] = {t: i for i, t in enumerate(terms)}
        self.doc_count = len(documents)
        self.document_frequency = np.array([df[t] for t in terms], dtype=np.int64)
        self.idf = idf(self.document_frequency, self.doc_count, idf_variant) if terms else np.zeros(0)

        self.doc_keys: list[tuple[str, int]] = [key for key, _ in documents]
        self._row_of = {key: i for i, key in enumerate(self.doc_keys)}
        if len(self._row_of) != len(self.doc_keys):
            raise IntegrityError("duplicate document key in index input")
        self.matrix = self._weigh([counts for _, counts in documents])

        kinds = np.array([k for k, _ in self.doc_keys])
        self._kind_rows = {kind: np.flatnonzero(kinds == kind) for kind in (POST, USER)}
        self._kind_ids = {kind: np.array([self.doc_keys[r][1] for r in rows], dtype=np.int64)
                          for kind, rows in self._kind_rows.items()}
        self._kind_matrix = {kind: self.matrix[rows] for kind, rows in self._kind_rows.items()}
        self._documents = [(key, dict(sorted(c.items()))) for key, c in documents]
        self.manifest = dict(manifest or {})
        self.manifest.update(self._describe())

    def _weigh(self, bags: Sequence[Mapping[str, int]]) -> sparse.csr_matrix:
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for counts in bags:
            vec = self._vector(counts)
            indices.extend(vec)
            data.extend(vec.values())
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.array(data, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr)),
            shape=(len(bags), len(self.vocabulary)))

    def _vector(self, counts: Mapping[str, int]) -> dict[int, float]:
        raw = {}
        for term, c in counts.items():
            tid = self.vocabulary.get(term)
            if tid is not None and c > 0:
                raw[tid] = c * float(self.idf[tid])
        norm = math.sqrt(sum(w * w for w in raw.values()))
        if norm == 0.0:
            return {}
        return {tid: raw[tid] / norm for tid in sorted(raw)}

    def vectorize(self, tokens: Iterable[str] | Mapping[str, int]) -> dict[int, float]:
        """Unit-norm sparse vector ``{term_id: weight}``; unknown terms are dropped."""
        counts = tokens if isinstance(tokens, Mapping) else Counter(tokens)
        return self._vector(counts)

    def doc_vector(self, key: tuple[str, int]) -> dict[int, float]:
        row = self.matrix.getrow(self._row_of[key])
        return dict(zip(row.indices.tolist(), row.data.tolist()))

    def has_doc(self, key: tuple[str, int]) -> bool:
        return key in self._row_of

    def scores(self, query_vec: Mapping[int, float], kind: str = POST) -> tuple[np.ndarray, np.ndarray]:
        """``(ids, scores)`` for every document of one kind."""
        q = np.zeros(len(self.vocabulary))
        for tid, w in query_vec.items():
            q[tid] = w
        s = self._kind_matrix[kind] @ q
        return self._kind_ids[kind], np.clip(s, 0.0, 1.0)

    def score_doc(self, query_vec: Mapping[int, float], key: tuple[str, int]) -> float:
        row = self.matrix.getrow(self._row_of[key])
        dot = sum(w * query_vec.get(t, 0.0) for t, w in zip(row.indices.tolist(), row.data.tolist()))
        return min(1.0, max(0.0, dot))

    def search(self, query_vec: Mapping[int, float], k: int, kind: str = POST) -> list[tuple[int, float]]:
        """Top ``k`` positive-scoring documents, ties broken by ascending id.

        Scores equal to 12 decimals count as tied, so the order does not hinge
        on summation-order rounding.
        """
        ids, s = self.scores(query_vec, kind)
        hit = s > TIE_EPS
        ids, s = ids[hit], s[hit]
        order = np.lexsort((ids, -np.round(s, 12)))[:k]
        return [(int(ids[i]), float(s[i])) for i in order]

    def document_terms(self, key: tuple[str, int]) -> dict[str, int]:
        return dict(self._documents[self._row_of[key]][1])

    # -- manifest / persistence ------------------------------------------------
    def _content_hash(self) -> str:
        h = hashlib.sha256()
        for (kind, i), counts in self._documents:
            h.update(_canonical([kind, i, counts]).encode("utf-8"))
            h.update(b"\n")
        for uid in sorted(self.profiles):
            h.update(_canonical(_profile_record(self.profiles[uid])).encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()

    def _describe(self) -> dict:
        return {
            "idf_variant": self.idf_variant,
            "doc_count": self.doc_count,
            "post_docs": int(len(self._kind_rows[POST])),
            "user_docs": int(len(self._kind_rows[USER])),
            "vocabulary_size": len(self.vocabulary),
            "content_sha256": self._content_hash(),
        }

    @property
    def manifest_hash(self) -> str:
        body = {k: v for k, v in self.manifest.items() if k != "manifest_hash"}
        return hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()

    @property
    def store_fingerprint(self) -> str | None:
        return self.manifest.get("store_fingerprint")

    @property
    def seed(self) -> int | None:
        return self.manifest.get("seed")

    @property
    def stem_mode(self) -> str:
        return self.manifest.get("stemmer", "original")

    def save(self, out: str | os.PathLike) -> Path:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "docs.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for (kind, i), counts in self._documents:
                if kind == POST:
                    fh.write(_canonical({"id": i, "kind": kind, "counts": counts}) + "\n")
        with open(out / "profiles.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for uid in sorted(self.profiles):
                fh.write(_canonical(_profile_record(self.profiles[uid])) + "\n")
        manifest = dict(self.manifest, schema_version=INDEX_SCHEMA_VERSION, kind="exrec-index")
        manifest["manifest_hash"] = hashlib.sha256(
            _canonical({k: v for k, v in manifest.items() if k != "manifest_hash"}).encode()).hexdigest()
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
        self.manifest = manifest
        return out

    @classmethod
    def load(cls, path: str | os.PathLike) -> "TfIdfIndex":
        path = Path(path)
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
        if manifest.get("kind") != "exrec-index":
            raise IntegrityError(f"{path} is not an index directory")
        post_docs = []
        with open(path / "docs.jsonl", encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                post_docs.append(((POST, rec["id"]), rec["counts"]))
        profiles = {}
        with open(path / "profiles.jsonl", encoding="utf-8") as fh:
            for line in fh:
                prof = _profile_from_record(json.loads(line))
                profiles[prof.user_id] = prof
        # answer tokens are only needed as bags downstream; rebuild from counts
        base = {k: manifest[k] for k in _BUILD_KEYS if k in manifest}
        index = _assemble(post_docs, profiles, manifest["idf_variant"], base)
        if index.manifest.get("content_sha256") != manifest.get("content_sha256"):
            raise IntegrityError(f"index at {path} fails its content check")
        index.manifest = manifest
        if manifest.get("manifest_hash") != index.manifest_hash:
            raise IntegrityError(
                f"index manifest hash {manifest.get('manifest_hash')} != recomputed {index.manifest_hash}")
        return index


_BUILD_KEYS = ("store_fingerprint", "seed", "test_fraction", "stemmer", "stopwords_sha256",
               "tokenizer", "k_posts", "k_users")


def _profile_record(p: ExpertProfile) -> dict:
    return {
        "user_id": p.user_id,
        "question_bag": dict(sorted(p.question_bag.items())),
        "answers": {str(i): sorted(Counter(toks).items()) for i, toks in sorted(p.answer_docs.items())},
        "train_ids": list(p.train_ids),
        "test_ids": list(p.test_ids),
    }


def _profile_from_record(rec: Mapping) -> ExpertProfile:
    docs = {}
    for i, pairs in rec["answers"].items():
        toks: list[str] = []
        for term, c in pairs:
            toks.extend([term] * c)
        docs[int(i)] = toks
    return ExpertProfile(rec["user_id"], Counter(rec["question_bag"]), docs,
                         tuple(rec["train_ids"]), tuple(rec["test_ids"]))


def _assemble(post_docs, profiles: Mapping[int, ExpertProfile], idf_variant: str,
              manifest: Mapping) -> TfIdfIndex:
    documents = list(post_docs)
    for uid in sorted(profiles):
        prof = profiles[uid]
        if prof.answer_docs:
            documents.append(((USER, uid), prof.train_bag))
    return TfIdfIndex(documents, idf_variant, profiles, manifest)


def build_index(store: CorpusStore, seed: int = 42, test_fraction: float = 0.2,
                idf_variant: str = "smooth", stem_mode: str = "original",
                k_posts: int = 50, k_users: int = 20) -> TfIdfIndex:
    """Index every answer post plus one training-bag document per answering user."""
    if len(store) == 0:
        raise ValueError("cannot index an empty corpus store")
    profiles, answer_tokens = build_profiles(store, stem_mode)
    for uid, prof in profiles.items():
        if prof.answer_docs:
            profiles[uid] = split_profile(prof, test_fraction, seed)
    post_docs = [((POST, pid), Counter(toks)) for pid, toks in answer_tokens.items()]
    if not post_docs:
        raise ValueError("corpus store has no answer posts to index")
    manifest = {
        "store_fingerprint": store.fingerprint,
        "seed": seed,
        "test_fraction": test_fraction,
        "stemmer": f"porter-{stem_mode}" if not stem_mode.startswith("porter-") else stem_mode,
        "stopwords_sha256": text.stopwords_hash(),
        "tokenizer": "alnum-split;min-len=2;drop-digits;smart-stopwords",
        "k_posts": k_posts,
        "k_users": k_users,
    }
    return _assemble(post_docs, profiles, idf_variant, manifest)


# -- expert matching -------------------------------------------------------------

@dataclass(frozen=True)
class RelevanceCandidate:
    user_id: int
    relevance_score: float
    test_precision: float
    phase1_rank: int


def check_store(index: TfIdfIndex, store: CorpusStore) -> None:
    if index.store_fingerprint is not None and index.store_fingerprint != store.fingerprint:
        raise IntegrityError(
            f"index was built from corpus {index.store_fingerprint} but the store is {store.fingerprint}")


def query_tokens(query: str, index: TfIdfIndex) -> list[str]:
    mode = index.stem_mode.removeprefix("porter-")
    tokens = text.clean_text(query, mode=mode)
    if not tokens:
        raise EmptyQueryError(f"query {query!r} has no indexable terms")
    return tokens


def test_precision(query_terms: Sequence[str], profile: ExpertProfile, index: TfIdfIndex,
                   mode: str = "coverage") -> float:
    """Share of the query evidenced by the user's held-out answers."""
    bag = profile.test_bag
    if mode == "coverage":
        distinct = set(query_terms)
        return len(distinct & bag.keys()) / len(distinct)
    if mode == "cosine":
        return cosine(index.vectorize(query_terms), index.vectorize(bag))
    raise ValueError(f"unknown precision mode {mode!r}")


def match_experts(query: str, index: TfIdfIndex, store: CorpusStore, k_posts: int = 50,
                  k_users: int = 20, seed: int | None = None,
                  precision: str = "coverage") -> list[RelevanceCandidate]:
    """Phase-1 expert matching.

    Scores the query against all answer posts, takes the owners of the top
    ``k_posts``, ranks them by similarity to their training bag, keeps the
    top ``k_users`` and orders those by test-set precision.
    """
    check_store(index, store)
    if seed is not None and index.seed is not None and seed != index.seed:
        raise IntegrityError(f"index profiles were split with seed {index.seed}, not {seed}")
    tokens = query_tokens(query, index)
    qvec = index.vectorize(tokens)
    if not qvec:
        return []

    owners: list[int] = []
    seen: set[int] = set()
    for pid, _ in index.search(qvec, k_posts, POST):
        owner = store.posts[pid].owner_user_id
        if owner is not None and owner not in seen:
            seen.add(owner)
            owners.append(owner)

    scored = []
    for uid in owners:
        if uid not in index.profiles:
            continue
        # an empty training set (single-answer users) leaves relevance at 0
        rel = index.score_doc(qvec, (USER, uid)) if index.has_doc((USER, uid)) else 0.0
        scored.append((rel, uid))
    scored.sort(key=lambda t: (-round(t[0], 12), t[1]))
    kept = scored[:k_users]

    rows = [(test_precision(tokens, index.profiles[uid], index, precision), rel, uid)
            for rel, uid in kept]
    rows.sort(key=lambda t: (-round(t[0], 12), -round(t[1], 12), t[2]))
    return [RelevanceCandidate(uid, rel, tp, rank)
            for rank, (tp, rel, uid) in enumerate(rows, start=1)]
