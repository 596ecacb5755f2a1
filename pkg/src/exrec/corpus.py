"""Stack Exchange dump ingestion and the on-disk corpus store.

The store is a directory holding three files::

    manifest.json   schema version, ingest parameters, counts, fingerprint
    posts.jsonl     one JSON object per post, in dump order
    users.jsonl     one JSON object per user, in dump order

Every file is written deterministically so two ingests of the same input
produce byte-identical stores.
"""
from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping
from xml.parsers import expat
from xml.sax.saxutils import escape

from .errors import DumpParseError, IntegrityError, NotFoundError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_ATTR_ESCAPES = {'"': "&quot;", "\n": "&#xA;", "\r": "&#xD;", "\t": "&#x9;"}


class PostType(str, enum.Enum):
    QUESTION = "Question"
    ANSWER = "Answer"


_POST_TYPE_IDS = {"1": PostType.QUESTION, "2": PostType.ANSWER}


@dataclass(frozen=True)
class Post:
    post_id: int
    post_type: PostType
    creation_date: datetime
    owner_user_id: int | None = None
    parent_id: int | None = None
    accepted_answer_id: int | None = None
    score: int = 0
    view_count: int = 0
    favorite_count: int = 0
    title: str = ""
    body_raw: str = ""

    @property
    def is_question(self) -> bool:
        return self.post_type is PostType.QUESTION

    def to_record(self) -> dict:
        return {
            "post_id": self.post_id,
            "post_type": self.post_type.value,
            "creation_date": format_timestamp(self.creation_date),
            "owner_user_id": self.owner_user_id,
            "parent_id": self.parent_id,
            "accepted_answer_id": self.accepted_answer_id,
            "score": self.score,
            "view_count": self.view_count,
            "favorite_count": self.favorite_count,
            "title": self.title,
            "body_raw": self.body_raw,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "Post":
        return cls(
            post_id=rec["post_id"],
            post_type=PostType(rec["post_type"]),
            creation_date=parse_timestamp(rec["creation_date"]),
            owner_user_id=rec.get("owner_user_id"),
            parent_id=rec.get("parent_id"),
            accepted_answer_id=rec.get("accepted_answer_id"),
            score=rec.get("score", 0),
            view_count=rec.get("view_count", 0),
            favorite_count=rec.get("favorite_count", 0),
            title=rec.get("title", ""),
            body_raw=rec.get("body_raw", ""),
        )


@dataclass(frozen=True)
class CommunityUser:
    user_id: int
    display_name: str = ""
    dump_reputation: int = 0

    def to_record(self) -> dict:
        return {
            "user_id": self.user_id,
            "display_name": self.display_name,
            "dump_reputation": self.dump_reputation,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "CommunityUser":
        return cls(rec["user_id"], rec.get("display_name", ""), rec.get("dump_reputation", 0))


@dataclass(frozen=True)
class IngestSummary:
    questions: int = 0
    answers: int = 0
    users: int = 0
    orphans: int = 0
    skipped: int = 0
    rows: int = 0

    def as_dict(self) -> dict:
        return {
            "questions": self.questions,
            "answers": self.answers,
            "users": self.users,
            "orphans": self.orphans,
            "skipped": self.skipped,
            "rows": self.rows,
        }


def parse_timestamp(value: str) -> datetime:
    """Parse a dump timestamp (naive, UTC)."""
    if value.endswith("Z"):
        value = value[:-1]
    return datetime.fromisoformat(value)


def format_timestamp(ts: datetime) -> str:
    return ts.isoformat(timespec="milliseconds")


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


class CorpusStore:
    """Immutable collection of posts and users with a question→answers index."""

    def __init__(self, posts: Iterable[Post], users: Iterable[CommunityUser] = (),
                 manifest: Mapping | None = None):
        post_map: dict[int, Post] = {}
        for p in posts:
            if p.post_id in post_map:
                raise IntegrityError(f"duplicate post id {p.post_id}")
            post_map[p.post_id] = p
        user_map: dict[int, CommunityUser] = {}
        for u in users:
            if u.user_id in user_map:
                raise IntegrityError(f"duplicate user id {u.user_id}")
            user_map[u.user_id] = u

        qindex: dict[int, list[int]] = {pid: [] for pid, p in post_map.items() if p.is_question}
        orphans = []
        by_owner: dict[int, list[int]] = {}
        for p in post_map.values():
            if p.owner_user_id is not None:
                by_owner.setdefault(p.owner_user_id, []).append(p.post_id)
            if p.is_question:
                continue
            if p.parent_id in qindex:
                qindex[p.parent_id].append(p.post_id)
            else:
                orphans.append(p.post_id)

        self._posts = MappingProxyType(post_map)
        self._users = MappingProxyType(user_map)
        self._question_index = MappingProxyType({k: tuple(v) for k, v in qindex.items()})
        self._orphans = frozenset(orphans)
        self._by_owner = MappingProxyType({k: tuple(v) for k, v in by_owner.items()})
        self.manifest = dict(manifest or {})
        self._fingerprint: str | None = None

    # -- access -----------------------------------------------------------
    @property
    def posts(self) -> Mapping[int, Post]:
        return self._posts

    @property
    def users(self) -> Mapping[int, CommunityUser]:
        return self._users

    @property
    def question_index(self) -> Mapping[int, tuple[int, ...]]:
        return self._question_index

    def __len__(self) -> int:
        return len(self._posts)

    def questions(self) -> Iterator[Post]:
        return (p for p in self._posts.values() if p.is_question)

    def answers(self) -> Iterator[Post]:
        return (p for p in self._posts.values() if not p.is_question)

    def is_orphan(self, post: Post | int) -> bool:
        pid = post if isinstance(post, int) else post.post_id
        return pid in self._orphans

    @property
    def orphans(self) -> frozenset[int]:
        return self._orphans

    def parent_of(self, answer: Post) -> Post | None:
        if answer.parent_id is None or answer.post_id in self._orphans:
            return None
        return self._posts[answer.parent_id]

    def posts_by(self, user_id: int) -> list[Post]:
        return [self._posts[pid] for pid in self._by_owner.get(user_id, ())]

    def answers_by(self, user_id: int) -> list[Post]:
        return [p for p in self.posts_by(user_id) if not p.is_question]

    def user_ids(self) -> list[int]:
        """All known users: those in the users file plus every post owner."""
        return sorted(set(self._users) | set(self._by_owner))

    def has_user(self, user_id: int) -> bool:
        return user_id in self._users or user_id in self._by_owner

    def get_user(self, user_id: int) -> CommunityUser:
        if user_id in self._users:
            return self._users[user_id]
        if user_id in self._by_owner:
            return CommunityUser(user_id)
        raise NotFoundError(f"unknown user {user_id}")

    def summary(self, skipped: int = 0, rows: int | None = None) -> IngestSummary:
        nq = len(self._question_index)
        na = len(self._posts) - nq
        return IngestSummary(
            questions=nq, answers=na, users=len(self._users), orphans=len(self._orphans),
            skipped=skipped, rows=nq + na + skipped if rows is None else rows,
        )

    # -- serialization ----------------------------------------------------
    def _post_lines(self) -> list[str]:
        return [_dumps(p.to_record()) + "\n" for p in self._posts.values()]

    def _user_lines(self) -> list[str]:
        return [_dumps(u.to_record()) + "\n" for u in self._users.values()]

    @property
    def fingerprint(self) -> str:
        """Content hash over all post and user records."""
        if self._fingerprint is None:
            h = hashlib.sha256()
            for line in self._post_lines():
                h.update(line.encode("utf-8"))
            h.update(b"\x00")
            for line in self._user_lines():
                h.update(line.encode("utf-8"))
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def save(self, out: str | os.PathLike, params: Mapping | None = None,
             skipped: int = 0, rows: int | None = None) -> Path:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "posts.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(self._post_lines())
        with open(out / "users.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(self._user_lines())
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "kind": "exrec-corpus",
            "ingest": dict(params or self.manifest.get("ingest", {})),
            "counts": self.summary(skipped, rows).as_dict(),
            "fingerprint": self.fingerprint,
        }
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.manifest = manifest
        return out

    @classmethod
    def load(cls, path: str | os.PathLike) -> "CorpusStore":
        path = Path(path)
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
        if manifest.get("kind") != "exrec-corpus":
            raise IntegrityError(f"{path} is not a corpus store")
        if manifest.get("schema_version") != SCHEMA_VERSION:
            raise IntegrityError(
                f"corpus schema version {manifest.get('schema_version')} != {SCHEMA_VERSION}")
        with open(path / "posts.jsonl", encoding="utf-8") as fh:
            posts = [Post.from_record(json.loads(line)) for line in fh if line.strip()]
        with open(path / "users.jsonl", encoding="utf-8") as fh:
            users = [CommunityUser.from_record(json.loads(line)) for line in fh if line.strip()]
        store = cls(posts, users, manifest)
        if manifest.get("fingerprint") and manifest["fingerprint"] != store.fingerprint:
            raise IntegrityError(
                f"corpus at {path} fails its fingerprint check: manifest "
                f"{manifest['fingerprint']}, content {store.fingerprint}")
        return store


# -- dump parsing ------------------------------------------------------------

def iter_dump_rows(path: str | os.PathLike, root: str) -> Iterator[tuple[int, dict]]:
    """Stream ``(byte_offset, attributes)`` for every ``<row>`` under ``<root>``."""
    parser = expat.ParserCreate()
    pending: list[tuple[int, dict]] = []
    depth = 0

    def start(name, attrs):
        nonlocal depth
        depth += 1
        if depth == 1 and name != root:
            raise DumpParseError(f"expected <{root}> root element, found <{name}>",
                                 parser.CurrentByteIndex)
        if depth == 2 and name == "row":
            pending.append((parser.CurrentByteIndex, attrs))

    def end(name):
        nonlocal depth
        depth -= 1

    parser.StartElementHandler = start
    parser.EndElementHandler = end

    def feed(data: bytes, final: bool):
        try:
            parser.Parse(data, final)
        except expat.ExpatError as exc:
            raise DumpParseError(
                f"malformed XML in {os.fspath(path)}: {expat.ErrorString(exc.code)}",
                parser.ErrorByteIndex) from None

    with open(path, "rb") as fh:
        while True:
            chunk = fh.read(1 << 16)
            if not chunk:
                break
            feed(chunk, False)
            yield from pending
            pending.clear()
    feed(b"", True)
    yield from pending


def _int_attr(attrs: dict, name: str, offset: int, default=None):
    raw = attrs.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise DumpParseError(f"attribute {name}={raw!r} is not an integer", offset) from None


def _row_to_post(attrs: dict, offset: int, post_type: PostType) -> Post:
    post_id = _int_attr(attrs, "Id", offset)
    if post_id is None:
        raise DumpParseError("row without Id", offset)
    created = attrs.get("CreationDate")
    if not created:
        raise DumpParseError(f"post {post_id} has no CreationDate", offset)
    try:
        creation_date = parse_timestamp(created)
    except ValueError:
        raise DumpParseError(f"post {post_id} has bad CreationDate {created!r}", offset) from None
    parent_id = _int_attr(attrs, "ParentId", offset)
    is_question = post_type is PostType.QUESTION
    if not is_question and parent_id is None:
        raise DumpParseError(f"answer {post_id} has no ParentId", offset)
    return Post(
        post_id=post_id,
        post_type=post_type,
        creation_date=creation_date,
        owner_user_id=_int_attr(attrs, "OwnerUserId", offset),
        parent_id=None if is_question else parent_id,
        accepted_answer_id=_int_attr(attrs, "AcceptedAnswerId", offset) if is_question else None,
        score=_int_attr(attrs, "Score", offset, 0),
        view_count=_int_attr(attrs, "ViewCount", offset, 0) if is_question else 0,
        favorite_count=_int_attr(attrs, "FavoriteCount", offset, 0) if is_question else 0,
        title=attrs.get("Title", "") if is_question else "",
        body_raw=attrs.get("Body", ""),
    )


def read_posts(path: str | os.PathLike) -> tuple[list[Post], int, int]:
    """Parse a Posts.xml file. Returns ``(posts, skipped, total_rows)``."""
    posts: list[Post] = []
    seen: set[int] = set()
    skipped = rows = 0
    for offset, attrs in iter_dump_rows(path, "posts"):
        rows += 1
        post_type = _POST_TYPE_IDS.get(attrs.get("PostTypeId", ""))
        if post_type is None:
            skipped += 1
            continue
        post = _row_to_post(attrs, offset, post_type)
        if post.post_id in seen:
            raise IntegrityError(f"duplicate post id {post.post_id} (at byte offset {offset})")
        seen.add(post.post_id)
        posts.append(post)
    return posts, skipped, rows


def read_users(path: str | os.PathLike) -> list[CommunityUser]:
    users: list[CommunityUser] = []
    seen: set[int] = set()
    for offset, attrs in iter_dump_rows(path, "users"):
        uid = _int_attr(attrs, "Id", offset)
        if uid is None:
            raise DumpParseError("user row without Id", offset)
        if uid in seen:
            raise IntegrityError(f"duplicate user id {uid} (at byte offset {offset})")
        seen.add(uid)
        users.append(CommunityUser(uid, attrs.get("DisplayName", ""),
                                   _int_attr(attrs, "Reputation", offset, 0)))
    return users


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def ingest_dump(posts_file: str | os.PathLike, users_file: str | os.PathLike | None = None,
                out: str | os.PathLike | None = None,
                window: tuple[datetime, datetime] | None = None) -> tuple[CorpusStore, IngestSummary]:
    """Parse dump files into a :class:`CorpusStore`, persisting it at ``out`` if given.

    The summary counts refer to the full file; ``window`` (if any) is applied
    afterwards via :func:`date_filter` and only affects what is persisted.
    """
    posts_file = Path(posts_file)
    posts, skipped, rows = read_posts(posts_file)
    users = read_users(users_file) if users_file is not None else []
    store = CorpusStore(posts, users)
    summary = store.summary(skipped, rows)
    logger.info("ingested %s: %s", posts_file, summary.as_dict())

    params = {
        "posts_file": posts_file.name,
        "posts_sha256": _sha256_file(posts_file),
        "users_file": Path(users_file).name if users_file is not None else None,
        "users_sha256": _sha256_file(Path(users_file)) if users_file is not None else None,
        "window": None,
    }
    if window is not None:
        store = date_filter(store, *window)
        params["window"] = [format_timestamp(window[0]), format_timestamp(window[1])]
    store.manifest = {"ingest": params}
    if out is not None:
        if window is None:
            store.save(out, params, skipped, rows)
        else:
            store.save(out, params)
    return store, summary


def date_filter(store: CorpusStore, start: datetime, end: datetime) -> CorpusStore:
    """View of the posts created within ``[start, end]`` (inclusive)."""
    if start > end:
        raise ValueError(f"empty date window: {start} > {end}")
    kept = [p for p in store.posts.values() if start <= p.creation_date <= end]
    return CorpusStore(kept, store.users.values(), store.manifest)


# -- export ------------------------------------------------------------------

def _attr(name: str, value) -> str:
    return f' {name}="{escape(str(value), _ATTR_ESCAPES)}"'


def export_posts_xml(store: CorpusStore, path: str | os.PathLike) -> None:
    """Write the retained posts back out in dump ``Posts.xml`` form."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write('<?xml version="1.0" encoding="utf-8"?>\n<posts>\n')
        for p in store.posts.values():
            parts = [_attr("Id", p.post_id),
                     _attr("PostTypeId", 1 if p.is_question else 2)]
            if p.parent_id is not None:
                parts.append(_attr("ParentId", p.parent_id))
            if p.accepted_answer_id is not None:
                parts.append(_attr("AcceptedAnswerId", p.accepted_answer_id))
            parts.append(_attr("CreationDate", format_timestamp(p.creation_date)))
            parts.append(_attr("Score", p.score))
            if p.is_question:
                parts.append(_attr("ViewCount", p.view_count))
            parts.append(_attr("Body", p.body_raw))
            if p.owner_user_id is not None:
                parts.append(_attr("OwnerUserId", p.owner_user_id))
            if p.is_question:
                parts.append(_attr("Title", p.title))
                parts.append(_attr("FavoriteCount", p.favorite_count))
            fh.write("  <row" + "".join(parts) + " />\n")
        fh.write("</posts>\n")


def export_users_xml(store: CorpusStore, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write('<?xml version="1.0" encoding="utf-8"?>\n<users>\n')
        for u in store.users.values():
            fh.write("  <row" + _attr("Id", u.user_id) + _attr("Reputation", u.dump_reputation)
                     + _attr("DisplayName", u.display_name) + " />\n")
        fh.write("</users>\n")
