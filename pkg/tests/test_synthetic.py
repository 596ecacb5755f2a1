import random

from exrec import porter, text
from exrec.synthetic import (WINDOW_END, WINDOW_START, disagreement_community, make_vocabulary,
                             planted_community)


def test_vocabulary_survives_cleaning():
    words = make_vocabulary(200, random.Random(1))
    assert len(set(words)) == 200
    assert text.clean_text(" ".join(words)) == words
    assert all(porter.stem(w) == w for w in words)


def test_planted_community_shape():
    c = planted_community(seed=4)
    assert c.notes["expert_text_share"] >= 0.8
    assert sorted(c.experts.values()) == [1, 2, 3, 4, 5]
    dates = [p.creation_date for p in c.store.posts.values()]
    assert WINDOW_START <= min(dates) and max(dates) <= WINDOW_END
    qs = c.queries()
    assert [q.gold_experts for q in qs] == [frozenset({u}) for u in (1, 2, 3, 4, 5)]
    assert planted_community(seed=4).store.fingerprint == c.store.fingerprint


def test_large_community_ids_do_not_collide():
    c = planted_community(n_topics=2, questions_per_topic=3, askers=800, noise_users=5)
    assert len(c.store.users) == 2 + 800 + 5


def test_disagreement_fixture_is_seeded():
    a, b = disagreement_community(3), disagreement_community(3)
    assert a.store.fingerprint == b.store.fingerprint
    assert a.notes["query"] == b.notes["query"]
