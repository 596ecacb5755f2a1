"""Post cleaning: code removal, tag stripping, stopwords, stemming."""
from __future__ import annotations

import hashlib
import re
from collections import Counter
from functools import lru_cache
from html import escape
from html.parser import HTMLParser
from importlib import resources
from typing import Iterable

from . import porter

_CODE_TAGS = frozenset({"code", "pre"})
_TOKEN_RE = re.compile(r"[^\W_]+")


class _TextExtractor(HTMLParser):
    """Collects text outside ``<code>``/``<pre>`` elements."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self._code_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _CODE_TAGS:
            self._code_depth += 1

    def handle_startendtag(self, tag, attrs):
        pass

    def handle_endtag(self, tag):
        if tag in _CODE_TAGS and self._code_depth:
            self._code_depth -= 1

    def handle_data(self, data):
        if not self._code_depth:
            self.chunks.append(data)


def strip_markup(body_raw: str) -> str:
    """Drop code/pre contents and all tags, decode entities."""
    parser = _TextExtractor()
    parser.feed(body_raw)
    parser.close()
    return " ".join(parser.chunks)


@lru_cache(maxsize=None)
def load_stopwords() -> frozenset[str]:
    return frozenset(stopwords_text().split())


@lru_cache(maxsize=None)
def stopwords_text() -> str:
    return resources.files("exrec").joinpath("data/smart_stopwords.txt").read_text(encoding="utf-8")


def stopwords_hash() -> str:
    return hashlib.sha256(stopwords_text().encode("utf-8")).hexdigest()


def content_words(text: str) -> list[str]:
    """Lowercased words of plain text that survive stopword/number/length filtering."""
    stop = load_stopwords()
    return [
        w for w in _TOKEN_RE.findall(text.lower())
        if len(w) > 1 and not w.isdigit() and w not in stop
    ]


def clean_text(body_raw: str, stem: bool = True, mode: str = "original") -> list[str]:
    """Turn raw post HTML into a list of stemmed terms.

    >>> clean_text("<p>The <code>x=1</code> loops quickly</p>")
    ['loop', 'quickli']
    """
    words = content_words(strip_markup(body_raw))
    if not stem:
        return words
    return [porter.stem(w, mode) for w in words]


def build_bag(tokens: Iterable[str]) -> Counter:
    return Counter(tokens)


def merge_bags(bags: Iterable[Counter]) -> Counter:
    total: Counter = Counter()
    for b in bags:
        total.update(b)
    return total


def post_text(title: str, body_raw: str) -> str:
    """Markup fed to the cleaner for one post; titles are escaped plain text."""
    if not title:
        return body_raw
    return escape(title) + "\n" + body_raw
