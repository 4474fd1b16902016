"""Synthetic forum corpora with planted troll archetypes.

Default archetype parameters follow the group differences measured on the
real forum: mentioned trolls post on 52% of their days in the forum,
non-trolls on 36% and paid trolls on 15%; trolls post about twice as many
comments per active day; paid trolls attract the most down-votes, reply
least and post mostly on working days and during working hours. These are
modelling choices and are written to ``synthetic_spec.json`` next to the
corpus.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from .corpus import DEFAULT_TIMEZONE, format_timestamp
from .errors import DataError

ARCHETYPES = ("paid_troll", "mentioned_troll", "borderline_troll", "non_troll", "background")

_ACCUSATIONS_REPLY = (
    "Вие, тролове, сте толкова смешни :)",
    "Пак пишеш по поръчка, трол такъв.",
    "Platen trol! Stop it, troll.",
    "Поредният платен трол, виждам същия подпис под други коментари.",
)
_SYLLABLES = (
    "ба", "ве", "ги", "до", "ре", "ми", "ка", "ло", "на", "пе", "си", "ту", "фа", "ха",
    "це", "чо", "ша", "за", "жи", "ко", "ли", "мо", "ни", "по", "ру", "со", "да", "ви",
)
_NAMES = (
    "Rozalina", "Ivan", "Maria", "Georgi", "Elena", "Petar", "Desislava", "Nikolay",
    "Svetla", "Dimitar", "Yana", "Stoyan", "Vesela", "Todor", "Kalina", "Boris",
)


@dataclass(frozen=True)
class ArchetypeSpec:
    """Behavioural parameters of one user archetype.

    ``tiers`` lists (n_users, min_comments, max_comments) groups so one
    archetype can mix very active and barely active users.
    """

    tiers: tuple[tuple[int, int, int], ...]
    comments_per_active_day: float
    active_days_rate: float
    comments_per_publication: float
    neg_vote_rate: float
    pos_vote_rate: float
    reply_rate: float
    workday_prob: float
    work_hours_prob: float
    accusers: tuple[int, int] = (0, 0)
    topicality: float = 0.4

    @property
    def count(self) -> int:
        return sum(t[0] for t in self.tiers)

    def validate(self, name: str):
        for attr in ("active_days_rate", "neg_vote_rate", "pos_vote_rate", "reply_rate",
                     "workday_prob", "work_hours_prob", "topicality"):
            v = getattr(self, attr)
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{name}.{attr} must be a probability, got {v}")
        if self.active_days_rate <= 0:
            raise DataError(f"{name}.active_days_rate must be positive")
        if self.comments_per_active_day < 1 or self.comments_per_publication < 1:
            raise DataError(f"{name}: per-day and per-publication rates must be >= 1")
        for n, lo, hi in self.tiers:
            if n < 0 or lo < 1 or hi < lo:
                raise DataError(f"{name}: bad tier {(n, lo, hi)}")
        lo, hi = self.accusers
        if lo < 0 or hi < lo:
            raise DataError(f"{name}: bad accuser range {self.accusers}")


def _default_archetypes() -> dict[str, ArchetypeSpec]:
    return {
        "paid_troll": ArchetypeSpec(
            tiers=((4, 150, 220), (2, 40, 99), (9, 5, 39)),
            comments_per_active_day=4.0, active_days_rate=0.15, comments_per_publication=2.0,
            neg_vote_rate=0.75, pos_vote_rate=0.30, reply_rate=0.20,
            workday_prob=0.95, work_hours_prob=0.90, accusers=(0, 1), topicality=0.25,
        ),
        "mentioned_troll": ArchetypeSpec(
            tiers=((20, 150, 320),),
            comments_per_active_day=4.0, active_days_rate=0.52, comments_per_publication=2.0,
            neg_vote_rate=0.65, pos_vote_rate=0.55, reply_rate=0.60,
            workday_prob=5 / 7, work_hours_prob=0.35, accusers=(5, 9), topicality=0.25,
        ),
        "borderline_troll": ArchetypeSpec(
            tiers=((8, 150, 260),),
            comments_per_active_day=3.5, active_days_rate=0.48, comments_per_publication=1.8,
            neg_vote_rate=0.55, pos_vote_rate=0.55, reply_rate=0.55,
            workday_prob=5 / 7, work_hours_prob=0.35, accusers=(1, 4), topicality=0.3,
        ),
        "non_troll": ArchetypeSpec(
            tiers=((40, 150, 320),),
            comments_per_active_day=2.0, active_days_rate=0.36, comments_per_publication=1.0,
            neg_vote_rate=0.15, pos_vote_rate=0.50, reply_rate=0.35,
            workday_prob=5 / 7, work_hours_prob=0.30, accusers=(0, 0), topicality=0.55,
        ),
        "background": ArchetypeSpec(
            tiers=((60, 3, 40),),
            comments_per_active_day=1.5, active_days_rate=0.30, comments_per_publication=1.0,
            neg_vote_rate=0.20, pos_vote_rate=0.45, reply_rate=0.40,
            workday_prob=5 / 7, work_hours_prob=0.30, accusers=(0, 0), topicality=0.5,
        ),
    }


@dataclass(frozen=True)
class SyntheticSpec:
    archetypes: dict[str, ArchetypeSpec] = field(default_factory=_default_archetypes)
    start: date = date(2013, 1, 1)
    days: int = 820
    publications_per_day: int = 3
    quoted_accusation_rate: float = 0.3
    timezone: str = DEFAULT_TIMEZONE
    seed: int = 42

    def validate(self):
        unknown = set(self.archetypes) - set(ARCHETYPES)
        if unknown:
            raise DataError(f"unknown archetypes: {sorted(unknown)}")
        for name, a in self.archetypes.items():
            a.validate(name)
        if self.days < 1 or not 1 <= self.publications_per_day <= 50:
            raise DataError("days must be >= 1 and publications_per_day in 1..50")
        bg = self.archetypes.get("background")
        available = bg.count if bg else 0
        need = max((a.accusers[1] for a in self.archetypes.values()), default=0)
        if need > available:
            raise DataError(
                f"infeasible spec: {need} distinct accusers demanded but only "
                f"{available} background users"
            )

    def with_seed(self, seed: int) -> "SyntheticSpec":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = self.start.isoformat()
        return d


@dataclass
class SyntheticCorpus:
    publications: list[dict]
    comments: list[dict]
    users: list[dict]
    archetypes: dict[str, str]  # user id -> archetype

    @property
    def paid_troll_ids(self) -> list[str]:
        return sorted(u for u, a in self.archetypes.items() if a == "paid_troll")

    def ids(self, archetype: str) -> list[str]:
        return sorted(u for u, a in self.archetypes.items() if a == archetype)


def _word_pool(rng: np.random.Generator, n: int) -> list[str]:
    words = set()
    while len(words) < n:
        k = int(rng.integers(2, 5))
        w = "".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=k))
        if "трол" not in w:
            words.add(w)
    return sorted(words)


def _hour_weights(work: bool) -> np.ndarray:
    w = np.zeros(24)
    if work:
        w[9:18] = 1.0
    else:
        w[0:6] = 0.3
        w[6:9] = 1.0
        w[18:24] = 2.0
    return w / w.sum()


class _Builder:
    def __init__(self, spec: SyntheticSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.tz = ZoneInfo(spec.timezone)
        self.words = _word_pool(self.rng, 1500)
        self.comments: list[dict] = []
        self.pub_words: list[list[str]] = []
        self.publications: list[dict] = []
        self._work_hours = _hour_weights(True)
        self._off_hours = _hour_weights(False)

    def _utc(self, day: int, seconds: float) -> datetime:
        d = self.spec.start + timedelta(days=day)
        local = datetime(d.year, d.month, d.day, tzinfo=self.tz) + timedelta(seconds=seconds)
        return local.astimezone(timezone.utc)

    def make_publications(self):
        rng = self.rng
        cats = {"Bulgaria": ["politics", "economy"], "Europe": ["eu", "politics"],
                "World": ["conflicts", "economy"]}
        cat_names = sorted(cats)
        pid = 0
        self.pubs_by_day = []
        for day in range(self.spec.days):
            today = []
            for i in range(self.spec.publications_per_day):
                words = [self.words[int(j)] for j in rng.integers(0, len(self.words), size=40)]
                cat = cat_names[int(rng.integers(0, 3))]
                sub = cats[cat][int(rng.integers(0, 2))]
                pid += 1
                self.publications.append({
                    "id": f"p{pid:06d}", "category": cat, "subcategory": sub,
                    "tags": words[:3], "title": " ".join(words[3:9]).capitalize(),
                    "body": " ".join(words[9:]),
                    "published_at": format_timestamp(self._utc(day, 60 * i)),
                })
                self.pub_words.append(words)
                today.append(len(self.publications) - 1)
            self.pubs_by_day.append(today)

    def comment_text(self, pub_index: int, topicality: float) -> str:
        rng = self.rng
        n = int(rng.integers(8, 26))
        src = self.pub_words[pub_index]
        out = []
        for _ in range(n):
            if rng.random() < topicality:
                out.append(src[int(rng.integers(0, len(src)))])
            else:
                out.append(self.words[int(rng.integers(0, len(self.words)))])
        return " ".join(out).capitalize() + "."

    def votes(self, a: ArchetypeSpec) -> tuple[int, int]:
        rng = self.rng
        down = 1 + int(rng.poisson(3.0)) if rng.random() < a.neg_vote_rate else 0
        up = 1 + int(rng.poisson(2.0)) if rng.random() < a.pos_vote_rate else 0
        return up, down

    def user_activity(self, uid: str, a: ArchetypeSpec, total: int):
        rng = self.rng
        span = self.spec.days
        active = max(1, min(total, math.ceil(total / a.comments_per_active_day)))
        in_forum = min(span, max(active, round(active / a.active_days_rate)))
        active = min(active, in_forum)
        first = span - in_forum
        candidates = np.arange(first + 1, span)
        chosen = [first]
        if active > 1:
            weekday = np.array([
                (self.spec.start + timedelta(days=int(d))).weekday() < 5 for d in candidates
            ])
            w = np.where(weekday, a.workday_prob / 5, (1 - a.workday_prob) / 2) + 1e-9
            picked = rng.choice(candidates, size=active - 1, replace=False, p=w / w.sum())
            chosen += sorted(int(d) for d in picked)
        per_day = np.ones(active, dtype=int)
        per_day += rng.multinomial(total - active, np.full(active, 1.0 / active))
        for day, n in zip(chosen, per_day):
            n_pubs = max(1, math.ceil(n / a.comments_per_publication))
            todays = self.pubs_by_day[day]
            pubs = [todays[int(i)] for i in rng.integers(0, len(todays), size=n_pubs)]
            for k in range(n):
                pub = pubs[k % n_pubs]
                hours = self._work_hours if rng.random() < a.work_hours_prob else self._off_hours
                hour = int(rng.choice(24, p=hours))
                sec = hour * 3600 + float(rng.uniform(0, 3600))
                # never before the day's publications
                sec = max(sec, 60.0 * self.spec.publications_per_day + 1)
                up, down = self.votes(a)
                self.comments.append({
                    "publication": pub, "author_id": uid, "time": self._utc(day, int(sec)),
                    "body": self.comment_text(pub, a.topicality), "votes_up": up,
                    "votes_down": down, "reply_wanted": bool(rng.random() < a.reply_rate),
                    "parent": None,
                })


def generate(spec: SyntheticSpec | None = None) -> SyntheticCorpus:
    """Build a corpus in memory; deterministic for a given spec and seed."""
    spec = spec or SyntheticSpec()
    spec.validate()
    b = _Builder(spec)
    rng = b.rng
    b.make_publications()

    plan = []
    for name in ARCHETYPES:
        a = spec.archetypes.get(name)
        if a is None:
            continue
        for n, lo, hi in a.tiers:
            plan += [(name, int(rng.integers(lo, hi + 1))) for _ in range(n)]
    order = rng.permutation(len(plan))
    users, archetype_of = [], {}
    for idx, p in enumerate(order, start=1):
        name, _ = plan[p]
        uid = f"u{idx:05d}"
        users.append({"id": uid, "display_name": f"{_NAMES[idx % len(_NAMES)]}{idx}"})
        archetype_of[uid] = name
    totals = {f"u{idx:05d}": plan[p][1] for idx, p in enumerate(order, start=1)}
    for uid in sorted(archetype_of):
        b.user_activity(uid, spec.archetypes[archetype_of[uid]], totals[uid])

    # replies: attach to an earlier comment by someone else in the same thread
    by_pub: dict[int, list[dict]] = {}
    for c in b.comments:
        by_pub.setdefault(c["publication"], []).append(c)
    for thread in by_pub.values():
        thread.sort(key=lambda c: (c["time"], c["author_id"]))
        for i, c in enumerate(thread):
            if not c["reply_wanted"]:
                continue
            others = [p for p in thread[:i] if p["author_id"] != c["author_id"]
                      and p["time"] < c["time"]]
            if others:
                c["parent"] = others[int(rng.integers(0, len(others)))]

    # accusations from distinct background users
    background = sorted(u for u, a in archetype_of.items() if a == "background")
    authored: dict[str, list[dict]] = {}
    for c in b.comments:
        authored.setdefault(c["author_id"], []).append(c)
    names = {u["id"]: u["display_name"] for u in users}
    accusations = []
    for uid in sorted(archetype_of):
        lo, hi = spec.archetypes[archetype_of[uid]].accusers
        n_acc = int(rng.integers(lo, hi + 1)) if hi > 0 else 0
        if n_acc == 0 or not authored.get(uid):
            continue
        accusers = rng.choice(len(background), size=n_acc, replace=False)
        for k in accusers:
            own = authored[uid]
            target = own[int(rng.integers(0, len(own)))]
            when = target["time"] + timedelta(minutes=int(rng.integers(1, 180)))
            phrase = _ACCUSATIONS_REPLY[int(rng.integers(0, len(_ACCUSATIONS_REPLY)))]
            quoted = rng.random() < spec.quoted_accusation_rate
            accusations.append({
                "publication": target["publication"], "author_id": background[int(k)],
                "time": when,
                "body": f'До коментар от "{names[uid]}": {phrase}' if quoted else phrase,
                "votes_up": int(rng.poisson(1.0)), "votes_down": int(rng.poisson(1.0)),
                "reply_wanted": False, "parent": None if quoted else target,
            })
    b.comments += accusations

    b.comments.sort(key=lambda c: (c["time"], c["author_id"], c["body"]))
    ids = {id(c): f"c{i:07d}" for i, c in enumerate(b.comments, start=1)}
    comments = []
    for c in b.comments:
        comments.append({
            "id": ids[id(c)],
            "publication_id": b.publications[c["publication"]]["id"],
            "author_id": c["author_id"],
            "parent_comment_id": ids[id(c["parent"])] if c["parent"] is not None else None,
            "body": c["body"],
            "posted_at": format_timestamp(c["time"]),
            "votes_up": c["votes_up"],
            "votes_down": c["votes_down"],
        })
    return SyntheticCorpus(b.publications, comments, users, archetype_of)


def _write_jsonl(path: Path, records):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def write_synthetic(corpus: SyntheticCorpus, path: str | Path, spec: SyntheticSpec | None = None):
    """Write the three corpus files, ``ground_truth.csv`` and ``paid_trolls.txt``."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    _write_jsonl(root / "publications.jsonl", corpus.publications)
    _write_jsonl(root / "comments.jsonl", corpus.comments)
    _write_jsonl(root / "users.jsonl", corpus.users)
    with (root / "ground_truth.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "archetype"])
        for uid in sorted(corpus.archetypes):
            w.writerow([uid, corpus.archetypes[uid]])
    (root / "paid_trolls.txt").write_text(
        "".join(f"{u}\n" for u in corpus.paid_troll_ids), encoding="utf-8"
    )
    if spec is not None:
        meta = {"note": "synthetic corpus; archetype parameters are modelling choices",
                "spec": spec.to_dict()}
        (root / "synthetic_spec.json").write_text(
            json.dumps(meta, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def generate_synthetic(spec: SyntheticSpec | None, path: str | Path) -> SyntheticCorpus:
    spec = spec or SyntheticSpec()
    corpus = generate(spec)
    write_synthetic(corpus, path, spec)
    return corpus


def read_ground_truth(path: str | Path) -> dict[str, str]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return {r["user_id"]: r["archetype"] for r in csv.DictReader(fh)}


def write_shaped(path: str | Path, publications: int, comments: int, replies: int, users: int,
                 seed: int = 0) -> None:
    """Stream a structurally valid corpus with exactly the given counts.

    Only the record counts are planted; text and behaviour are minimal.
    Used to check that loading preserves corpus size at real-forum scale.
    """
    if replies > comments or (comments > 0 and (publications < 1 or users < 1)):
        raise DataError("infeasible shape")
    if replies > 0 and comments - replies < 1:
        raise DataError("replies need at least one top-level comment")
    rng = np.random.default_rng(seed)
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    base = datetime(2013, 1, 1, tzinfo=timezone.utc)
    pub_ts = format_timestamp(base)
    with (root / "publications.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for i in range(publications):
            fh.write(json.dumps({
                "id": f"p{i}", "category": "c", "subcategory": "s", "tags": [],
                "title": "t", "body": "b", "published_at": pub_ts,
            }) + "\n")
    with (root / "users.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for i in range(users):
            fh.write(json.dumps({"id": f"u{i}", "display_name": f"user {i}"}) + "\n")
    top = comments - replies
    # top-level comments round-robin over publications; replies point at the
    # top-level comment with the same index modulo `top`
    authors = rng.integers(0, max(users, 1), size=comments)
    with (root / "comments.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for i in range(comments):
            if i < top:
                pub, parent = i % publications, None
            else:
                t = (i - top) % top
                pub, parent = t % publications, f"c{t}"
            fh.write(json.dumps({
                "id": f"c{i}", "publication_id": f"p{pub}", "author_id": f"u{authors[i]}",
                "parent_comment_id": parent, "body": "x",
                "posted_at": format_timestamp(base + timedelta(seconds=60 + i)),
                "votes_up": 0, "votes_down": 0,
            }) + "\n")
