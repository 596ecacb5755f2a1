"""Porter suffix-stripping stemmer.

Two variants are supported:

* ``"original"``: the algorithm exactly as published in 1980.
* ``"martin"``: the variant used by Martin Porter's reference C
  implementation (``bli -> ble`` replaces ``abli -> able``, an extra
  ``logi -> log`` rule, and words of length <= 2 are left alone).

Input is expected to be lowercase.
"""
from __future__ import annotations

from functools import lru_cache

_VOWELS = frozenset("aeiou")

MODES = ("original", "martin")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def measure(stem: str) -> int:
    """Number of VC sequences in ``[C](VC){m}[V]``."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _double_consonant(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _is_consonant(word, len(word) - 1)


def _cvc(word: str) -> bool:
    # *o: stem ends cvc and the second c is not w, x or y
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


def _apply(word: str, rules: list[tuple[str, str]], min_m: int) -> str:
    # Only the longest matching suffix is considered; if its condition
    # fails the step leaves the word unchanged.
    for suffix, repl in sorted(rules, key=lambda r: -len(r[0])):
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            return stem + repl if measure(stem) > min_m else word
    return word


def step1a(word: str) -> str:
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies"):
        return word[:-2]
    if word.endswith("ss"):
        return word
    if word.endswith("s"):
        return word[:-1]
    return word


def step1b(word: str) -> str:
    if word.endswith("eed"):
        stem = word[:-3]
        return stem + "ee" if measure(stem) > 0 else word
    for suffix in ("ed", "ing"):
        if word.endswith(suffix):
            stem = word[: -len(suffix)]
            if not _has_vowel(stem):
                return word
            return _step1b_tidy(stem)
    return word


def _step1b_tidy(stem: str) -> str:
    if stem.endswith(("at", "bl", "iz")):
        return stem + "e"
    if _double_consonant(stem) and stem[-1] not in "lsz":
        return stem[:-1]
    if measure(stem) == 1 and _cvc(stem):
        return stem + "e"
    return stem


def step1c(word: str) -> str:
    if word.endswith("y") and _has_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


_STEP2 = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("alli", "al"), ("entli", "ent"), ("eli", "e"),
    ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"), ("ator", "ate"),
    ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"), ("ousness", "ous"),
    ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]
_STEP2_ORIGINAL = _STEP2 + [("abli", "able")]
_STEP2_MARTIN = _STEP2 + [("bli", "ble"), ("logi", "log")]

_STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4 = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]
_STEP4_BY_LENGTH = sorted(_STEP4, key=len, reverse=True)


def step2(word: str, mode: str = "original") -> str:
    return _apply(word, _STEP2_MARTIN if mode == "martin" else _STEP2_ORIGINAL, 0)


def step3(word: str) -> str:
    return _apply(word, _STEP3, 0)


def step4(word: str) -> str:
    for suffix in _STEP4_BY_LENGTH:
        if word.endswith(suffix):
            stem = word[: -len(suffix)]
            if measure(stem) <= 1:
                return word
            if suffix == "ion" and not stem.endswith(("s", "t")):
                return word
            return stem
    return word


def step5a(word: str) -> str:
    if word.endswith("e"):
        stem = word[:-1]
        m = measure(stem)
        if m > 1 or (m == 1 and not _cvc(stem)):
            return stem
    return word


def step5b(word: str) -> str:
    if measure(word) > 1 and _double_consonant(word) and word.endswith("l"):
        return word[:-1]
    return word


@lru_cache(maxsize=65536)
def stem(word: str, mode: str = "original") -> str:
    """Stem one lowercase word."""
    if mode not in MODES:
        raise ValueError(f"unknown stemmer mode {mode!r}; expected one of {MODES}")
    if mode == "martin" and len(word) <= 2:
        return word
    w = step1a(word)
    w = step1b(w)
    w = step1c(w)
    w = step2(w, mode)
    w = step3(w)
    w = step4(w)
    w = step5a(w)
    return step5b(w)
