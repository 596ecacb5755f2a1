import hashlib
from collections import Counter
from pathlib import Path

import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from exrec import porter, text

REFERENCE = Path(__file__).parent / "data" / "porter_reference.tsv"


def _reference_rows():
    with open(REFERENCE, encoding="utf-8") as fh:
        return [line.rstrip("\n").split("\t") for line in fh if not line.startswith("#")]


# -- cleaning -------------------------------------------------------------

def test_empty_and_code_only():
    assert text.clean_text("") == []
    assert text.clean_text("<pre>int x = 1;</pre>") == []


def test_fixture_post():
    tokens = text.clean_text("<p>The <code>x=1</code> loops quickly</p>")
    assert tokens == ["loop", "quickli"]
    assert text.build_bag(tokens) == {"loop": 1, "quickli": 1}


def test_build_bag():
    assert text.build_bag([]) == {}
    assert text.build_bag(["a", "b", "a"]) == {"a": 2, "b": 1}


def test_nested_code_blocks_and_entities():
    raw = "<p>alpha &amp; beta</p><pre><code>gamma</code> delta</pre><p>epsilon&nbsp;zeta</p>"
    assert text.clean_text(raw, stem=False) == ["alpha", "beta", "epsilon", "zeta"]


def test_tags_do_not_glue_words():
    assert text.clean_text("<p>kernel</p><p>panic</p>", stem=False) == ["kernel", "panic"]


def test_numbers_single_letters_and_underscores_dropped():
    assert text.clean_text("x 42 snake_case y2k", stem=False) == ["snake", "case", "y2k"]


def test_stopword_list_is_shipped():
    stop = text.load_stopwords()
    assert {"the", "about", "yourselves", "which"} <= stop
    assert len(stop) == 570
    assert text.stopwords_hash() == hashlib.sha256(text.stopwords_text().encode()).hexdigest()


def test_title_is_plain_text():
    assert text.clean_text(text.post_text("<b> tags", "<p>body</p>"), stem=False) == ["tags", "body"]


_words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=12)
_markup = st.lists(
    st.one_of(_words, st.sampled_from(["<p>", "</p>", "<b>", "</b>", "&amp;", "&lt;", " ", "\n",
                                       "<code>", "</code>", "<pre>", "</pre>", "the", "42"])),
    max_size=30,
).map("".join)


@given(_markup)
def test_cleaning_is_idempotent_without_stemming(raw):
    once = text.clean_text(raw, stem=False)
    assert Counter(text.clean_text(" ".join(once), stem=False)) == Counter(once)


@pytest.mark.xfail(strict=True, reason="Porter stemming is not idempotent: agreed -> agre -> agr")
def test_stemmed_cleaning_is_not_idempotent():
    once = text.clean_text("agreed")
    assert text.clean_text(" ".join(once)) == once


def _no_closing_code(s):
    low = s.lower()
    return "</code" not in low and "</pre" not in low


@given(st.text(max_size=80).filter(_no_closing_code))
@example("<p>visible</p>")
@example("<pre>x</pre>")
@example("&amp; words &lt;b&gt;")
@settings(max_examples=300)
def test_code_wrapper_hides_everything(s):
    assert text.clean_text("<code>" + s + "</code>") == []


# -- Porter stemmer -------------------------------------------------------

@pytest.mark.parametrize("word,expected", [
    ("tr", 0), ("ee", 0), ("tree", 0), ("y", 0), ("by", 0),
    ("trouble", 1), ("oats", 1), ("trees", 1), ("ivy", 1),
    ("troubles", 2), ("private", 2), ("oaten", 2), ("orrery", 2),
])
def test_measure(word, expected):
    assert porter.measure(word) == expected


STEP_CASES = {
    porter.step1a: [("caresses", "caress"), ("ponies", "poni"), ("ties", "ti"),
                    ("caress", "caress"), ("cats", "cat")],
    porter.step1b: [("feed", "feed"), ("agreed", "agree"), ("plastered", "plaster"),
                    ("bled", "bled"), ("motoring", "motor"), ("sing", "sing"),
                    ("conflated", "conflate"), ("troubled", "trouble"), ("sized", "size"),
                    ("hopping", "hop"), ("tanned", "tan"), ("falling", "fall"),
                    ("hissing", "hiss"), ("fizzed", "fizz"), ("failing", "fail"),
                    ("filing", "file")],
    porter.step1c: [("happy", "happi"), ("sky", "sky")],
    porter.step2: [("relational", "relate"), ("conditional", "condition"),
                   ("rational", "rational"), ("valenci", "valence"), ("hesitanci", "hesitance"),
                   ("digitizer", "digitize"), ("conformabli", "conformable"),
                   ("radicalli", "radical"), ("differentli", "different"), ("vileli", "vile"),
                   ("analogousli", "analogous"), ("vietnamization", "vietnamize"),
                   ("predication", "predicate"), ("operator", "operate"),
                   ("feudalism", "feudal"), ("decisiveness", "decisive"),
                   ("hopefulness", "hopeful"), ("callousness", "callous"),
                   ("formaliti", "formal"), ("sensitiviti", "sensitive"),
                   ("sensibiliti", "sensible")],
    porter.step3: [("triplicate", "triplic"), ("formative", "form"), ("formalize", "formal"),
                   ("electriciti", "electric"), ("electrical", "electric"),
                   ("hopeful", "hope"), ("goodness", "good")],
    porter.step4: [("revival", "reviv"), ("allowance", "allow"), ("inference", "infer"),
                   ("airliner", "airlin"), ("gyroscopic", "gyroscop"),
                   ("adjustable", "adjust"), ("defensible", "defens"), ("irritant", "irrit"),
                   ("replacement", "replac"), ("adjustment", "adjust"),
                   ("dependent", "depend"), ("adoption", "adopt"), ("homologou", "homolog"),
                   ("communism", "commun"), ("activate", "activ"),
                   ("angulariti", "angular"), ("homologous", "homolog"),
                   ("effective", "effect"), ("bowdlerize", "bowdler")],
    porter.step5a: [("probate", "probat"), ("rate", "rate"), ("cease", "ceas")],
    porter.step5b: [("controll", "control"), ("roll", "roll")],
}


@pytest.mark.parametrize("step,word,expected",
                         [(s, w, e) for s, cases in STEP_CASES.items() for w, e in cases],
                         ids=lambda v: getattr(v, "__name__", v))
def test_step_examples(step, word, expected):
    assert step(word) == expected


@pytest.mark.parametrize("word,expected", [
    ("generalizations", "gener"), ("oscillators", "oscil"),
    ("loops", "loop"), ("quickly", "quickli"),
])
def test_whole_word(word, expected):
    assert porter.stem(word) == expected


def test_martin_mode_differences():
    assert porter.step2("possibli") == "possibli"
    assert porter.step2("possibli", "martin") == "possible"
    assert porter.step2("analogi", "martin") == "analog"
    assert porter.stem("as", "martin") == "as"


def test_unknown_mode():
    with pytest.raises(ValueError):
        porter.stem("word", "snowball")


def test_reference_vocabulary_original():
    rows = _reference_rows()
    assert len(rows) > 10_000
    bad = [(w, o, porter.stem(w)) for w, o, _ in rows if porter.stem(w) != o]
    assert bad == []


def test_reference_vocabulary_martin():
    bad = [(w, m, porter.stem(w, "martin")) for w, _, m in _reference_rows()
           if porter.stem(w, "martin") != m]
    assert bad == []


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=15))
@settings(max_examples=500, deadline=None)
def test_matches_nltk_on_random_words(word):
    nltk_porter = pytest.importorskip("nltk.stem.porter")
    ref = nltk_porter.PorterStemmer(nltk_porter.PorterStemmer.ORIGINAL_ALGORITHM)
    assert porter.stem(word) == ref.stem(word)
