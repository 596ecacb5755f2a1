"""Synthetic Q&A communities with known ("planted") experts.

Used for recovery tests and demos: each topic gets one expert who writes
the bulk of the on-topic answer text, answers many distinct askers and
collects high scores.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from . import porter, text
from .corpus import CommunityUser, CorpusStore, Post, PostType
from .evaluation import QuerySpec

_ONSETS = "bdfgkmnprtvz"
_VOWELS = "aiou"
_CODAS = "bdgkmnprt"

WINDOW_START = datetime(2009, 2, 18)
WINDOW_END = datetime(2009, 6, 7)


def make_vocabulary(n: int, rng: random.Random, taken: set[str] | None = None) -> list[str]:
    """Distinct pseudo-words that survive cleaning unchanged."""
    taken = set() if taken is None else taken
    stop = text.load_stopwords()
    words: list[str] = []
    while len(words) < n:
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(rng.randint(2, 3)))
        w += rng.choice(_CODAS)
        if w in taken or w in stop or porter.stem(w) != w:
            continue
        taken.add(w)
        words.append(w)
    return words


@dataclass
class SyntheticCommunity:
    store: CorpusStore
    experts: dict[int, int]
    topic_terms: dict[int, list[str]]
    generic_terms: list[str]
    seed: int
    notes: dict = field(default_factory=dict)

    def queries(self, seed: int | None = None, min_terms: int = 10, max_terms: int = 20) -> list[QuerySpec]:
        """One query per topic of 10-20 distinct topic terms, gold = planted expert."""
        rng = random.Random(self.seed + 7919 if seed is None else seed)
        out = []
        for t in sorted(self.topic_terms):
            vocab = self.topic_terms[t]
            k = rng.randint(min_terms, min(max_terms, len(vocab)))
            out.append(QuerySpec(f"Q{t + 1}", " ".join(rng.sample(vocab, k)),
                                 frozenset({self.experts[t]})))
        return out


class _Builder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.posts: list[Post] = []
        self.next_id = 1
        self.clock = WINDOW_START

    def _tick(self) -> datetime:
        self.clock += timedelta(minutes=self.rng.randint(1, 90), milliseconds=self.rng.randint(0, 999))
        if self.clock > WINDOW_END:
            self.clock = WINDOW_START + timedelta(milliseconds=self.rng.randint(0, 10**6))
        return self.clock

    def question(self, owner: int, words: list[str], views: int, favs: int, score: int = 0) -> int:
        pid = self.next_id
        self.next_id += 1
        title = " ".join(words[:6])
        body = "<p>" + " ".join(words[6:]) + "</p>\n<pre><code>int x = 1;</code></pre>"
        self.posts.append(Post(pid, PostType.QUESTION, self._tick(), owner, score=score,
                               view_count=views, favorite_count=favs, title=title, body_raw=body))
        return pid

    def answer(self, owner: int | None, parent: int, words: list[str], score: int) -> int:
        pid = self.next_id
        self.next_id += 1
        body = "<p>" + " ".join(words) + "</p>"
        self.posts.append(Post(pid, PostType.ANSWER, self._tick(), owner, parent_id=parent,
                               score=score, body_raw=body))
        return pid


def planted_community(n_topics: int = 5, terms_per_topic: int = 30, questions_per_topic: int = 20,
                      askers: int = 40, noise_users: int = 15, expert_answer_len: int = 40,
                      noise_answer_len: int = 6, seed: int = 0) -> SyntheticCommunity:
    """A community with one planted expert per topic.

    Each expert answers every question of their topic with long on-topic
    answers; noise users occasionally add short answers mixing topic and
    generic words, so experts own well over 80% of the on-topic answer text.
    """
    rng = random.Random(seed)
    taken: set[str] = set()
    topic_terms = {t: make_vocabulary(terms_per_topic, rng, taken) for t in range(n_topics)}
    generic = make_vocabulary(40, rng, taken)

    experts = {t: 1 + t for t in range(n_topics)}
    asker_ids = list(range(100, 100 + askers))
    first_noise = max(500, 100 + askers)
    noise_ids = list(range(first_noise, first_noise + noise_users))
    b = _Builder(rng)
    expert_words = noise_topic_words = 0

    for t in range(n_topics):
        vocab = topic_terms[t]
        for _ in range(questions_per_topic):
            asker = rng.choice(asker_ids)
            qwords = rng.sample(vocab, 8) + rng.sample(generic, 6)
            rng.shuffle(qwords)
            qid = b.question(asker, qwords, views=rng.randint(50, 2000), favs=rng.randint(0, 20))
            words = [rng.choice(vocab) for _ in range(expert_answer_len)]
            b.answer(experts[t], qid, words, score=rng.randint(15, 60))
            expert_words += len(words)
            for _ in range(rng.choice((0, 0, 1))):
                nw = [rng.choice(vocab) for _ in range(noise_answer_len // 2)]
                nw += [rng.choice(generic) for _ in range(noise_answer_len - len(nw))]
                noise_topic_words += len(nw)
                b.answer(rng.choice(noise_ids), qid, nw, score=rng.randint(-2, 8))

    # off-topic chatter so noise users have their own footprint
    for _ in range(n_topics * 4):
        qid = b.question(rng.choice(asker_ids), rng.sample(generic, 12), views=rng.randint(10, 300),
                         favs=rng.randint(0, 3))
        for _ in range(rng.randint(1, 3)):
            b.answer(rng.choice(noise_ids), qid, rng.sample(generic, 10), score=rng.randint(-1, 10))

    users = [CommunityUser(u, f"expert{u}", rng.randint(20000, 40000)) for u in experts.values()]
    users += [CommunityUser(u, f"asker{u}", rng.randint(1, 500)) for u in asker_ids]
    users += [CommunityUser(u, f"user{u}", rng.randint(100, 5000)) for u in noise_ids]
    store = CorpusStore(b.posts, users)
    share = expert_words / max(1, expert_words + noise_topic_words)
    return SyntheticCommunity(store, experts, topic_terms, generic, seed,
                              {"expert_text_share": share})


def disagreement_community(seed: int = 0) -> SyntheticCommunity:
    """Two strong candidates for one topic that disagree across phases.

    User 1 (the "relevance leader") writes the most query-like answers but
    answers only a couple of askers and earns low scores.  User 2 (the
    "prestige leader") writes somewhat less focused answers but answers many
    distinct askers, including user 1, with highly scored answers.  A few
    extra answerers fill out the candidate list.
    """
    rng = random.Random(seed)
    taken: set[str] = set()
    vocab = make_vocabulary(20, rng, taken)
    generic = make_vocabulary(40, rng, taken)
    b = _Builder(rng)
    leader, prestige = 1, 2
    extras = [3, 4, 5]
    askers = list(range(100, 130))

    for i in range(12):
        asker = askers[i % len(askers)]
        qid = b.question(asker, rng.sample(vocab, 6) + rng.sample(generic, 6), views=50, favs=1)
        b.answer(leader, qid, vocab + [rng.choice(vocab) for _ in range(10)], score=rng.randint(0, 3))
    for i in range(30):
        asker = askers[i % len(askers)]
        qid = b.question(asker, rng.sample(vocab, 6) + rng.sample(generic, 6),
                         views=rng.randint(800, 3000), favs=rng.randint(10, 40))
        words = vocab[:14] + rng.sample(generic, 12)
        b.answer(prestige, qid, words, score=rng.randint(20, 80))
    # the relevance leader also asks, and the prestige leader answers
    for _ in range(3):
        qid = b.question(leader, rng.sample(generic, 12), views=100, favs=2)
        b.answer(prestige, qid, rng.sample(vocab, 8) + rng.sample(generic, 8), score=25)
    for u in extras:
        for i in range(5):
            qid = b.question(askers[(u * 7 + i) % len(askers)], rng.sample(vocab, 5) + rng.sample(generic, 7),
                             views=rng.randint(20, 400), favs=rng.randint(0, 5))
            b.answer(u, qid, rng.sample(vocab, 5) + rng.sample(generic, 15), score=rng.randint(0, 10))

    users = [CommunityUser(leader, "relevance-leader", 4790),
             CommunityUser(prestige, "prestige-leader", 34638)]
    users += [CommunityUser(u, f"user{u}", rng.randint(900, 3500)) for u in extras]
    users += [CommunityUser(u, f"asker{u}", rng.randint(1, 300)) for u in askers]
    # the query leans on terms only the relevance leader uses consistently
    query = " ".join(vocab[8:])
    return SyntheticCommunity(CorpusStore(b.posts, users), {0: prestige}, {0: vocab}, generic, seed,
                              {"relevance_leader": leader, "prestige_leader": prestige,
                               "query": query})
