"""Forum corpus: loading, validation, indices and per-user/per-thread views.

A corpus lives in a directory with three JSONL files (``publications.jsonl``,
``comments.jsonl``, ``users.jsonl``). Timestamps are RFC 3339; all calendar
computations happen in a forum-local timezone.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Literal
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

from .errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_TIMEZONE = "Europe/Sofia"
CORPUS_FILES = ("publications.jsonl", "comments.jsonl", "users.jsonl")


@dataclass(frozen=True)
class Publication:
    id: str
    category: str
    subcategory: str
    tags: tuple[str, ...]
    title: str
    body: str
    published_at: datetime


@dataclass(frozen=True)
class Comment:
    id: str
    publication_id: str
    author_id: str
    parent_comment_id: str | None
    body: str
    posted_at: datetime
    votes_up: int
    votes_down: int


@dataclass(frozen=True)
class User:
    id: str
    display_name: str


@dataclass(frozen=True)
class UserActivityStats:
    user_id: str
    total_comments: int
    days_in_forum: int
    active_days: int
    publications_commented: int
    # days with two or more comments; used as an extra scaling base
    multi_comment_days: int = 0


@dataclass(frozen=True)
class ThreadView:
    publication_id: str
    comments: tuple[Comment, ...]
    ordinals: dict[str, int] = field(repr=False)
    depths: dict[str, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.comments)


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp without UTC offset: {value!r}")
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def resolve_timezone(name: str) -> ZoneInfo:
    try:
        return ZoneInfo(name)
    except (ZoneInfoNotFoundError, ValueError) as exc:
        raise DataError(f"unknown timezone {name!r}") from exc


class Corpus:
    """Immutable, fully indexed in-memory forum corpus.

    Build one with :func:`load_corpus` or :meth:`Corpus.from_records`; the
    constructor validates every reference and precomputes reply depths.
    """

    def __init__(
        self,
        publications: Iterable[Publication],
        comments: Iterable[Comment],
        users: Iterable[User],
        tz: str = DEFAULT_TIMEZONE,
    ):
        self.timezone_name = tz
        self.tz = resolve_timezone(tz)
        self.publications: dict[str, Publication] = {}
        self.comments: dict[str, Comment] = {}
        self.users: dict[str, User] = {}
        for p in publications:
            if p.id in self.publications:
                raise DataError(f"duplicate publication id {p.id!r}")
            self.publications[p.id] = p
        for u in users:
            if u.id in self.users:
                raise DataError(f"duplicate user id {u.id!r}")
            self.users[u.id] = u
        for c in comments:
            if c.id in self.comments:
                raise DataError(f"duplicate comment id {c.id!r}")
            self.comments[c.id] = c
        self._validate()
        self._build_indices()

    @classmethod
    def from_records(cls, publications, comments, users, tz=DEFAULT_TIMEZONE):
        """Build from plain dicts shaped like the JSONL records."""
        return cls(
            [_publication_from_record(r) for r in publications],
            [_comment_from_record(r) for r in comments],
            [_user_from_record(r) for r in users],
            tz=tz,
        )

    def _validate(self):
        for c in self.comments.values():
            pub = self.publications.get(c.publication_id)
            if pub is None:
                raise DataError(
                    f"dangling reference: comment {c.id!r} -> publication {c.publication_id!r}"
                )
            if c.author_id not in self.users:
                raise DataError(f"dangling reference: comment {c.id!r} -> user {c.author_id!r}")
            if c.posted_at < pub.published_at:
                raise DataError(
                    f"comment {c.id!r} posted before its publication {pub.id!r} was published"
                )
            if c.parent_comment_id is not None:
                parent = self.comments.get(c.parent_comment_id)
                if parent is None:
                    raise DataError(
                        f"dangling reference: comment {c.id!r} -> parent comment "
                        f"{c.parent_comment_id!r}"
                    )
                if parent.publication_id != c.publication_id:
                    raise DataError(
                        f"dangling reference: comment {c.id!r} (publication "
                        f"{c.publication_id!r}) replies to comment {parent.id!r} on "
                        f"publication {parent.publication_id!r}"
                    )

    def _build_indices(self):
        self.children: dict[str, list[str]] = defaultdict(list)
        self.by_author: dict[str, list[str]] = defaultdict(list)
        self.by_publication: dict[str, list[str]] = defaultdict(list)
        for c in self.comments.values():
            self.by_author[c.author_id].append(c.id)
            self.by_publication[c.publication_id].append(c.id)
            if c.parent_comment_id is not None:
                self.children[c.parent_comment_id].append(c.id)
        self.depths: dict[str, int] = {}
        for cid in self.comments:
            self._resolve_depth(cid)
        self.end_date: datetime | None = max(
            (c.posted_at for c in self.comments.values()), default=None
        )
        self._threads: dict[str, ThreadView] = {}

    def _resolve_depth(self, cid: str) -> int:
        # walk up until a known depth or a root; a revisit means a cycle
        chain = []
        seen = set()
        cur = cid
        while cur not in self.depths:
            if cur in seen:
                raise DataError(f"reply cycle through comment {cur!r}")
            seen.add(cur)
            chain.append(cur)
            parent = self.comments[cur].parent_comment_id
            if parent is None:
                self.depths[cur] = 0
                chain.pop()
                break
            cur = parent
        base = self.depths[cur]
        for offset, node in enumerate(reversed(chain), start=1):
            self.depths[node] = base + offset
        return self.depths[cid]

    @property
    def n_replies(self) -> int:
        return sum(1 for c in self.comments.values() if c.parent_comment_id is not None)

    def summary(self) -> dict:
        return {
            "publications": len(self.publications),
            "comments": len(self.comments),
            "replies": self.n_replies,
            "users": len(self.users),
            "timezone": self.timezone_name,
            "end": format_timestamp(self.end_date) if self.end_date else None,
        }

    def local_date(self, ts: datetime) -> date:
        return ts.astimezone(self.tz).date()

    def local_time(self, ts: datetime) -> datetime:
        return ts.astimezone(self.tz)

    def user_comments(self, user_id: str) -> list[Comment]:
        if user_id not in self.users:
            raise KeyError(f"unknown user id {user_id!r}")
        return [self.comments[cid] for cid in self.by_author.get(user_id, ())]

    def thread(self, publication_id: str) -> ThreadView:
        view = self._threads.get(publication_id)
        if view is None:
            view = thread_view(self, publication_id)
            self._threads[publication_id] = view
        return view


def _require(record: dict, key: str, kind: type):
    if key not in record:
        raise ValueError(f"missing field {key!r}")
    value = record[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"field {key!r} must be an integer")
    elif not isinstance(value, kind):
        raise ValueError(f"field {key!r} must be {kind.__name__}")
    return value


def _publication_from_record(r: dict) -> Publication:
    tags = r.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ValueError("field 'tags' must be a list of strings")
    return Publication(
        id=_require(r, "id", str),
        category=_require(r, "category", str),
        subcategory=_require(r, "subcategory", str),
        tags=tuple(tags),
        title=_require(r, "title", str),
        body=_require(r, "body", str),
        published_at=parse_timestamp(_require(r, "published_at", str)),
    )


def _comment_from_record(r: dict) -> Comment:
    parent = r.get("parent_comment_id")
    if parent is not None and not isinstance(parent, str):
        raise ValueError("field 'parent_comment_id' must be a string or null")
    up = _require(r, "votes_up", int)
    down = _require(r, "votes_down", int)
    if up < 0 or down < 0:
        raise ValueError("vote counts must be non-negative")
    return Comment(
        id=_require(r, "id", str),
        publication_id=_require(r, "publication_id", str),
        author_id=_require(r, "author_id", str),
        parent_comment_id=parent or None,
        body=_require(r, "body", str),
        posted_at=parse_timestamp(_require(r, "posted_at", str)),
        votes_up=up,
        votes_down=down,
    )


def _user_from_record(r: dict) -> User:
    return User(id=_require(r, "id", str), display_name=_require(r, "display_name", str))


def _read_jsonl(path: Path, parse):
    out = []
    try:
        fh = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        lineno = 0
        try:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    if not isinstance(record, dict):
                        raise ValueError("record is not a JSON object")
                    out.append(parse(record))
                except ValueError as exc:
                    raise DataError(f"{path.name}:{lineno}: malformed record: {exc}") from exc
        except UnicodeDecodeError as exc:
            raise DataError(f"{path.name}:{lineno + 1}: invalid UTF-8") from exc
    return out


def load_corpus(path: str | Path, timezone: str = DEFAULT_TIMEZONE) -> Corpus:
    """Load and validate a corpus directory.

    Raises :class:`DataError` for malformed lines (with the line number),
    dangling references, reply cycles and unparseable timestamps.
    """
    root = Path(path)
    tz = resolve_timezone(timezone)  # fail fast before reading anything
    del tz
    publications = _read_jsonl(root / "publications.jsonl", _publication_from_record)
    comments = _read_jsonl(root / "comments.jsonl", _comment_from_record)
    users = _read_jsonl(root / "users.jsonl", _user_from_record)
    corpus = Corpus(publications, comments, users, tz=timezone)
    logger.info(
        "loaded corpus: %d publications, %d comments, %d users",
        len(corpus.publications), len(corpus.comments), len(corpus.users),
    )
    return corpus


def publication_record(p: Publication) -> dict:
    d = asdict(p)
    d["tags"] = list(p.tags)
    d["published_at"] = format_timestamp(p.published_at)
    return d


def comment_record(c: Comment) -> dict:
    d = asdict(c)
    d["posted_at"] = format_timestamp(c.posted_at)
    return d


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out in the JSONL format, in id-stable order."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    rows = {
        "publications.jsonl": (publication_record(p) for p in corpus.publications.values()),
        "comments.jsonl": (comment_record(c) for c in corpus.comments.values()),
        "users.jsonl": (asdict(u) for u in corpus.users.values()),
    }
    for name, records in rows.items():
        with (root / name).open("w", encoding="utf-8", newline="\n") as fh:
            for r in records:
                fh.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def activity_stats(corpus: Corpus, user_id: str) -> UserActivityStats:
    if user_id not in corpus.users:
        raise KeyError(f"unknown user id {user_id!r}")
    comments = corpus.user_comments(user_id)
    if not comments:
        return UserActivityStats(user_id, 0, 0, 0, 0, 0)
    per_day: dict[date, int] = defaultdict(int)
    for c in comments:
        per_day[corpus.local_date(c.posted_at)] += 1
    first = min(per_day)
    end = corpus.local_date(corpus.end_date)
    return UserActivityStats(
        user_id=user_id,
        total_comments=len(comments),
        days_in_forum=(end - first).days + 1,
        active_days=len(per_day),
        publications_commented=len({c.publication_id for c in comments}),
        multi_comment_days=sum(1 for n in per_day.values() if n > 1),
    )


def thread_view(corpus: Corpus, publication_id: str) -> ThreadView:
    if publication_id not in corpus.publications:
        raise KeyError(f"unknown publication id {publication_id!r}")
    comments = sorted(
        (corpus.comments[cid] for cid in corpus.by_publication.get(publication_id, ())),
        key=lambda c: (c.posted_at, c.id),
    )
    return ThreadView(
        publication_id=publication_id,
        comments=tuple(comments),
        ordinals={c.id: i for i, c in enumerate(comments, start=1)},
        depths={c.id: corpus.depths[c.id] for c in comments},
    )


def vote_ranking(thread: ThreadView, direction: Literal["loved", "hated"]) -> list[Comment]:
    """Thread comments ordered best-first for the given vote direction."""
    if direction == "loved":
        key = lambda c: (-c.votes_up, c.posted_at, c.id)  # noqa: E731
    elif direction == "hated":
        key = lambda c: (-c.votes_down, c.posted_at, c.id)  # noqa: E731
    else:
        raise ValueError(f"direction must be 'loved' or 'hated', got {direction!r}")
    return sorted(thread.comments, key=key)


def top_k_by_votes(
    thread: ThreadView, k: int, direction: Literal["loved", "hated"]
) -> set[str]:
    if k < 1:
        raise ValueError("k must be >= 1")
    return {c.id for c in vote_ranking(thread, direction)[:k]}
