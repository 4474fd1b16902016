"""Distant-supervision labels from troll accusations between users."""

from __future__ import annotations

import csv
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import Corpus
from .errors import DataError, InsufficientDataError

DEFAULT_KEYWORDS = ("трол", "тролове", "troll", "trolls")

# "Name", “Name”, „Name“, «Name»
_QUOTED = re.compile(r'"([^"\n]{1,80})"|“([^”\n]{1,80})”|„([^“”\n]{1,80})[“”]|«([^»\n]{1,80})»')


class Label(str, Enum):
    MENTIONED_TROLL = "mentioned_troll"
    PAID_TROLL = "paid_troll"
    NON_TROLL = "non_troll"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class AccusationLexicon:
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS

    def __post_init__(self):
        if not self.keywords:
            raise ValueError("lexicon must contain at least one keyword")
        for k in self.keywords:
            if not k or k != k.lower():
                raise ValueError(f"lexicon keywords must be non-empty lowercase, got {k!r}")

    def matches(self, text: str) -> bool:
        folded = text.casefold()
        return any(k in folded for k in self.keywords)

    @classmethod
    def load(cls, path: str | Path) -> "AccusationLexicon":
        words = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                words.append(line.casefold())
        if not words:
            raise DataError(f"{path}: lexicon file has no keywords")
        return cls(tuple(words))


@dataclass(frozen=True)
class LabelConfig:
    min_mentions: int = 5
    min_comments: int = 150
    paid_troll_ids: tuple[str, ...] = ()
    seed: int = 42

    def __post_init__(self):
        if self.min_mentions < 1:
            raise ValueError("min_mentions must be >= 1")
        if self.min_comments < 1:
            raise ValueError("min_comments must be >= 1")


@dataclass(frozen=True)
class LabeledUser:
    user_id: str
    label: Label
    mention_count: int
    total_comments: int


@dataclass
class LabeledDataset:
    entries: dict[str, LabeledUser] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, user_id: str) -> LabeledUser:
        return self.entries[user_id]

    def with_label(self, label: Label) -> list[LabeledUser]:
        return [e for e in self.entries.values() if e.label == label]

    def ids(self, label: Label) -> list[str]:
        return [e.user_id for e in self.with_label(label)]

    def counts(self) -> dict[str, int]:
        return {lab.value: len(self.with_label(lab)) for lab in Label}

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "label", "mention_count", "total_comments"])
            for uid in sorted(self.entries):
                e = self.entries[uid]
                w.writerow([e.user_id, e.label.value, e.mention_count, e.total_comments])

    @classmethod
    def from_csv(cls, path: str | Path) -> "LabeledDataset":
        entries = {}
        with Path(path).open(encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                entries[row["user_id"]] = LabeledUser(
                    row["user_id"], Label(row["label"]),
                    int(row["mention_count"]), int(row["total_comments"]),
                )
        return cls(entries)


@dataclass(frozen=True)
class Accusation:
    accuser_id: str
    accused_id: str
    comment_id: str


def _display_name_index(corpus: Corpus) -> dict[str, str]:
    # names shared by several users cannot be resolved to one target
    owners: dict[str, list[str]] = defaultdict(list)
    for u in corpus.users.values():
        if u.display_name:
            owners[u.display_name].append(u.id)
    return {name: ids[0] for name, ids in owners.items() if len(ids) == 1}


def quoted_names(text: str) -> list[str]:
    return [next(g for g in m.groups() if g is not None).strip() for m in _QUOTED.finditer(text)]


def detect_accusations(
    corpus: Corpus, lexicon: AccusationLexicon | None = None
) -> list[Accusation]:
    """Find troll accusations: lexicon hit plus a resolvable target.

    The target is the author of the parent comment, or any user whose
    display name appears in quotation marks in the text. Self-accusations
    are dropped. Output is sorted, so it does not depend on input order.
    """
    lexicon = lexicon or AccusationLexicon()
    names = _display_name_index(corpus)
    found = set()
    for c in corpus.comments.values():
        if not lexicon.matches(c.body):
            continue
        targets = set()
        if c.parent_comment_id is not None:
            targets.add(corpus.comments[c.parent_comment_id].author_id)
        for name in quoted_names(c.body):
            if name in names:
                targets.add(names[name])
        targets.discard(c.author_id)
        for t in targets:
            found.add(Accusation(c.author_id, t, c.id))
    return sorted(found, key=lambda a: (a.accused_id, a.accuser_id, a.comment_id))


def mention_counts(accusations: Iterable[Accusation]) -> dict[str, int]:
    accusers: dict[str, set[str]] = defaultdict(set)
    for a in accusations:
        accusers[a.accused_id].add(a.accuser_id)
    return {uid: len(s) for uid, s in sorted(accusers.items())}


def assign_labels(
    corpus: Corpus, counts: Mapping[str, int], config: LabelConfig
) -> LabeledDataset:
    unknown = sorted(set(config.paid_troll_ids) - set(corpus.users))
    if unknown:
        raise DataError(f"paid troll ids not in corpus: {', '.join(unknown)}")
    paid = set(config.paid_troll_ids)
    entries = {}
    for uid in sorted(corpus.users):
        n = len(corpus.by_author.get(uid, ()))
        m = counts.get(uid, 0)
        if n < config.min_comments:
            label = Label.EXCLUDED
        elif uid in paid:
            label = Label.PAID_TROLL
        elif m >= config.min_mentions:
            label = Label.MENTIONED_TROLL
        elif m == 0:
            label = Label.NON_TROLL
        else:
            label = Label.EXCLUDED
        entries[uid] = LabeledUser(uid, label, m, n)
    return LabeledDataset(entries)


def label_corpus(
    corpus: Corpus, config: LabelConfig, lexicon: AccusationLexicon | None = None
) -> LabeledDataset:
    return assign_labels(corpus, mention_counts(detect_accusations(corpus, lexicon)), config)


def _by_activity(users: Iterable[LabeledUser]) -> list[LabeledUser]:
    return sorted(users, key=lambda e: (-e.total_comments, e.user_id))


@dataclass(frozen=True)
class TrainingPair:
    """Balanced training users plus what was left out of training."""

    trolls: tuple[str, ...]
    non_trolls: tuple[str, ...]
    unused_non_trolls: tuple[str, ...]
    paid_trolls: tuple[str, ...]

    @property
    def user_ids(self) -> list[str]:
        return [*self.trolls, *self.non_trolls]

    @property
    def labels(self) -> list[int]:
        return [1] * len(self.trolls) + [-1] * len(self.non_trolls)


def build_training_pair(dataset: LabeledDataset, config: LabelConfig | None = None) -> TrainingPair:
    """All mentioned trolls plus as many of the most active non-trolls."""
    trolls = sorted(dataset.ids(Label.MENTIONED_TROLL))
    if not trolls:
        raise InsufficientDataError("no mentioned trolls in dataset")
    non_trolls = _by_activity(dataset.with_label(Label.NON_TROLL))
    if len(non_trolls) < len(trolls):
        raise InsufficientDataError(
            f"need {len(trolls)} non-trolls to balance training, have {len(non_trolls)}"
        )
    chosen = [e.user_id for e in non_trolls[: len(trolls)]]
    rest = [e.user_id for e in non_trolls[len(trolls):]]
    return TrainingPair(
        trolls=tuple(trolls),
        non_trolls=tuple(chosen),
        unused_non_trolls=tuple(rest),
        paid_trolls=tuple(sorted(dataset.ids(Label.PAID_TROLL))),
    )
