"""Per-user behavioural features, scaled by activity and grouped for ablation.

Every raw statistic belongs to one :class:`FeatureGroup`. Count-like
statistics are emitted once per scaling denominator (comments, days in the
forum, active days, days with several comments, publications) and once
unscaled under ``non_scaled``. Statistics that are already averages or
extremes (similarity mean/max/min) are emitted as-is in their own group.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from datetime import time
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import Comment, Corpus, activity_stats, vote_ranking
from .errors import DataError
from .textsim import (
    SparseVector, Vocabulary, cosine, fit_vocabulary, publication_text, tokenize, vectorize,
)


class FeatureGroup(str, Enum):
    VOTE_UPDOWN_ALL = "vote_updown_all"
    VOTE_UPDOWN_TOTAL = "vote_updown_total"
    VOTE_UPDOWN_REPLY_STATUS = "vote_updown_reply_status"
    VOTE_UPDOWN_IS_REPLY = "vote_updown_is_reply"
    COMMENT_ORDER = "comment_order"
    IS_REPLY = "is_reply"
    IS_REPLY_TO_HAS_REPLY = "is_reply_to_has_reply"
    TRIGGERED_REPLIES_TOTAL = "triggered_replies_total"
    TRIGGERED_REPLIES_RANGE = "triggered_replies_range"
    SIMILARITY = "similarity"
    SIMILARITY_TOP = "similarity_top"
    TOP_LOVED_HATED = "top_loved_hated"
    TOTAL_COMMENTS = "total_comments"
    TIME = "time"
    TIME_HOURS = "time_hours"
    TIME_DAY_OF_WEEK = "time_day_of_week"
    NON_SCALED = "non_scaled"

    @property
    def label(self) -> str:
        return GROUP_LABELS[self]


GROUP_LABELS = {
    FeatureGroup.VOTE_UPDOWN_ALL: "vote up/down all",
    FeatureGroup.VOTE_UPDOWN_TOTAL: "vote updown total",
    FeatureGroup.VOTE_UPDOWN_REPLY_STATUS: "vote up/down reply status",
    FeatureGroup.VOTE_UPDOWN_IS_REPLY: "vote updown is reply",
    FeatureGroup.COMMENT_ORDER: "comment order",
    FeatureGroup.IS_REPLY: "is reply",
    FeatureGroup.IS_REPLY_TO_HAS_REPLY: "is reply to has reply",
    FeatureGroup.TRIGGERED_REPLIES_TOTAL: "triggered replies total",
    FeatureGroup.TRIGGERED_REPLIES_RANGE: "triggered replies range",
    FeatureGroup.SIMILARITY: "similarity",
    FeatureGroup.SIMILARITY_TOP: "similarity top",
    FeatureGroup.TOP_LOVED_HATED: "top loved hated",
    FeatureGroup.TOTAL_COMMENTS: "total comments",
    FeatureGroup.TIME: "time",
    FeatureGroup.TIME_HOURS: "time hours",
    FeatureGroup.TIME_DAY_OF_WEEK: "time day of week",
    FeatureGroup.NON_SCALED: "Non Scaled",
}

SCALED_GROUPS = tuple(g for g in FeatureGroup if g is not FeatureGroup.NON_SCALED)

# denominator name -> UserActivityStats attribute
DENOMINATORS = {
    "per_comment": "total_comments",
    "per_forum_day": "days_in_forum",
    "per_active_day": "active_days",
    "per_multi_comment_day": "multi_comment_days",
    "per_publication": "publications_commented",
}

WEEKDAYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")
REPLY_STATUS = ("top", "reply")


def _fmt(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class FeatureConfig:
    order_ks: tuple[int, ...] = (1, 3, 5, 10)
    top_ks: tuple[int, ...] = (1, 3, 5, 10)
    ratio_thresholds: tuple[float, ...] = (0.25, 0.50, 1.0, 2.0)
    similarity_cuts: tuple[float, ...] = (0.1, 0.3, 0.5)
    work_hours: tuple[time, time] = (time(9, 0), time(18, 0))
    # inclusive (lo, hi) triggered-reply buckets; hi None = open-ended
    triggered_ranges: tuple[tuple[int, int | None], ...] = ((0, 0), (1, 2), (3, 5), (6, None))

    def __post_init__(self):
        for name in ("order_ks", "top_ks", "ratio_thresholds", "similarity_cuts"):
            seq = getattr(self, name)
            if not seq or any(b <= a for a, b in zip(seq, seq[1:])):
                raise ValueError(f"{name} must be non-empty and strictly increasing")
        if min(self.order_ks) < 1 or min(self.top_ks) < 1:
            raise ValueError("k values must be >= 1")
        start, end = self.work_hours
        if not start < end:
            raise ValueError("work_hours start must precede end")

    def to_dict(self) -> dict:
        return {
            "order_ks": list(self.order_ks),
            "top_ks": list(self.top_ks),
            "ratio_thresholds": list(self.ratio_thresholds),
            "similarity_cuts": list(self.similarity_cuts),
            "work_hours": [t.strftime("%H:%M") for t in self.work_hours],
            "triggered_ranges": [list(r) for r in self.triggered_ranges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        kw = {}
        for name in ("order_ks", "top_ks", "ratio_thresholds", "similarity_cuts"):
            if name in d:
                kw[name] = tuple(d[name])
        if "work_hours" in d:
            kw["work_hours"] = tuple(time.fromisoformat(t) for t in d["work_hours"])
        if "triggered_ranges" in d:
            kw["triggered_ranges"] = tuple((lo, hi) for lo, hi in d["triggered_ranges"])
        return cls(**kw)

    def bucket_name(self, lo: int, hi: int | None) -> str:
        if hi is None:
            return f"triggered_{lo}_plus"
        return f"triggered_{lo}" if lo == hi else f"triggered_{lo}_{hi}"


@dataclass(frozen=True)
class Statistic:
    group: FeatureGroup
    name: str
    # counts scale and double with activity; intensive values do neither
    extensive: bool = True
    # denominator attributes this statistic is never divided by: itself, and
    # total_comments for activity counts whose per-comment ratio is just the
    # reciprocal of another feature
    skip_denominators: tuple[str, ...] = ()


def statistic_inventory(config: FeatureConfig) -> list[Statistic]:
    G = FeatureGroup
    stats = [
        Statistic(G.VOTE_UPDOWN_TOTAL, "votes_up_sum"),
        Statistic(G.VOTE_UPDOWN_TOTAL, "votes_down_sum"),
        Statistic(G.VOTE_UPDOWN_ALL, "pos_voted"),
        Statistic(G.VOTE_UPDOWN_ALL, "neg_voted"),
    ]
    stats += [Statistic(G.VOTE_UPDOWN_ALL, f"ratio_lt_{_fmt(r)}") for r in config.ratio_thresholds]
    for status in REPLY_STATUS:
        stats += [
            Statistic(G.VOTE_UPDOWN_REPLY_STATUS, f"pos_voted_{status}"),
            Statistic(G.VOTE_UPDOWN_REPLY_STATUS, f"neg_voted_{status}"),
        ]
        stats += [
            Statistic(G.VOTE_UPDOWN_REPLY_STATUS, f"ratio_lt_{_fmt(r)}_{status}")
            for r in config.ratio_thresholds
        ]
    for status in REPLY_STATUS:
        stats += [
            Statistic(G.VOTE_UPDOWN_IS_REPLY, f"votes_up_sum_{status}"),
            Statistic(G.VOTE_UPDOWN_IS_REPLY, f"votes_down_sum_{status}"),
        ]
    stats += [Statistic(G.COMMENT_ORDER, f"first_{k}") for k in config.order_ks]
    stats += [
        Statistic(G.IS_REPLY, "top_level"),
        Statistic(G.IS_REPLY, "replies"),
        Statistic(G.IS_REPLY, "replies_to_replies"),
        Statistic(G.IS_REPLY_TO_HAS_REPLY, "replies_with_replies"),
        Statistic(G.IS_REPLY_TO_HAS_REPLY, "top_level_with_replies"),
        Statistic(G.TRIGGERED_REPLIES_TOTAL, "triggered"),
    ]
    stats += [
        Statistic(G.TRIGGERED_REPLIES_RANGE, config.bucket_name(lo, hi))
        for lo, hi in config.triggered_ranges
    ]
    for group in (G.SIMILARITY, G.SIMILARITY_TOP):
        stats += [Statistic(group, s, extensive=False) for s in ("sim_mean", "sim_max", "sim_min")]
        stats += [Statistic(group, f"sim_lt_{_fmt(c)}") for c in config.similarity_cuts]
        stats += [Statistic(group, f"sim_ge_{_fmt(c)}") for c in config.similarity_cuts]
    for direction in ("loved", "hated"):
        stats += [Statistic(G.TOP_LOVED_HATED, f"{direction}_top_{k}") for k in config.top_ks]
    stats += [
        Statistic(G.TOTAL_COMMENTS, "comments", skip_denominators=("total_comments",)),
        Statistic(G.TOTAL_COMMENTS, "active_days",
                  skip_denominators=("active_days", "total_comments")),
        Statistic(G.TOTAL_COMMENTS, "publications",
                  skip_denominators=("publications_commented", "total_comments")),
        Statistic(G.TIME, "work_hours"),
        Statistic(G.TIME, "non_work_hours"),
    ]
    stats += [Statistic(G.TIME_HOURS, f"hour_{h:02d}") for h in range(24)]
    stats += [Statistic(G.TIME_DAY_OF_WEEK, f"dow_{d}") for d in WEEKDAYS]
    stats += [
        Statistic(G.TIME_DAY_OF_WEEK, "weekday"),
        Statistic(G.TIME_DAY_OF_WEEK, "weekend"),
    ]
    return stats


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    group: FeatureGroup
    scaled: bool
    denominator: str
    statistic: str
    source_group: FeatureGroup


@dataclass(frozen=True)
class FeatureManifest:
    features: tuple[FeatureSpec, ...]

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def indices(self, groups: Sequence[FeatureGroup]) -> np.ndarray:
        wanted = set(groups)
        return np.array([i for i, f in enumerate(self.features) if f.group in wanted], dtype=int)

    def subset(self, idx: Sequence[int]) -> "FeatureManifest":
        return FeatureManifest(tuple(self.features[i] for i in idx))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "group", "scaled", "denominator", "statistic", "source_group"])
        for f in self.features:
            w.writerow([
                f.name, f.group.value, int(f.scaled), f.denominator, f.statistic,
                f.source_group.value,
            ])
        return buf.getvalue()

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_csv_text().encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8", newline="")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureManifest":
        with Path(path).open(encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(tuple(
            FeatureSpec(
                r["name"], FeatureGroup(r["group"]), r["scaled"] == "1", r["denominator"],
                r["statistic"], FeatureGroup(r["source_group"]),
            )
            for r in rows
        ))


def build_manifest(config: FeatureConfig) -> FeatureManifest:
    """Scaled features first (group by group), then the unscaled block."""
    scaled, unscaled = [], []
    for st in statistic_inventory(config):
        if not st.extensive:
            scaled.append(FeatureSpec(f"{st.group.value}:{st.name}", st.group, True, "none",
                                      st.name, st.group))
            continue
        for dname, attr in DENOMINATORS.items():
            if attr in st.skip_denominators:
                continue
            scaled.append(FeatureSpec(f"{st.group.value}:{st.name}/{dname}", st.group, True,
                                      dname, st.name, st.group))
        unscaled.append(FeatureSpec(f"non_scaled:{st.group.value}.{st.name}",
                                    FeatureGroup.NON_SCALED, False, "", st.name, st.group))
    order = {g: i for i, g in enumerate(FeatureGroup)}
    scaled.sort(key=lambda f: order[f.group])  # stable within a group
    return FeatureManifest(tuple(scaled + unscaled))


@dataclass
class CommentContext:
    """Thread-level facts about one comment needed by the feature extractors."""

    ordinal: int
    depth: int
    loved_rank: int
    hated_rank: int
    replies_by_others: int


def comment_contexts(corpus: Corpus, publication_ids=None) -> dict[str, CommentContext]:
    out = {}
    pubs = corpus.publications if publication_ids is None else publication_ids
    for pid in pubs:
        view = corpus.thread(pid)
        loved = {c.id: r for r, c in enumerate(vote_ranking(view, "loved"), start=1)}
        hated = {c.id: r for r, c in enumerate(vote_ranking(view, "hated"), start=1)}
        for c in view.comments:
            kids = corpus.children.get(c.id, ())
            out[c.id] = CommentContext(
                ordinal=view.ordinals[c.id],
                depth=view.depths[c.id],
                loved_rank=loved[c.id],
                hated_rank=hated[c.id],
                replies_by_others=sum(
                    1 for k in kids if corpus.comments[k].author_id != c.author_id
                ),
            )
    return out


class _Similarities:
    """Comment-to-publication cosine, with publication vectors cached."""

    def __init__(self, corpus: Corpus, vocabulary: Vocabulary):
        self.corpus = corpus
        self.vocabulary = vocabulary
        self._pub: dict[str, SparseVector] = {}

    def __call__(self, c: Comment) -> float:
        pv = self._pub.get(c.publication_id)
        if pv is None:
            pub = self.corpus.publications[c.publication_id]
            pv = vectorize(tokenize(publication_text(pub)), self.vocabulary)
            self._pub[c.publication_id] = pv
        return cosine(vectorize(tokenize(c.body), self.vocabulary), pv)


def corpus_vocabulary(corpus: Corpus) -> Vocabulary:
    """Vocabulary over every publication and comment in the corpus."""
    docs = [tokenize(publication_text(p)) for p in corpus.publications.values()]
    docs += [tokenize(c.body) for c in corpus.comments.values()]
    return fit_vocabulary(docs)


def _ratio_below(c: Comment, r: float) -> bool:
    return c.votes_down >= 1 and c.votes_up / c.votes_down < r


def vote_features(corpus: Corpus, user_id: str, config: FeatureConfig | None = None) -> dict:
    config = config or FeatureConfig()
    comments = corpus.user_comments(user_id)
    out = {
        "votes_up_sum": sum(c.votes_up for c in comments),
        "votes_down_sum": sum(c.votes_down for c in comments),
        "pos_voted": sum(1 for c in comments if c.votes_up >= 1),
        "neg_voted": sum(1 for c in comments if c.votes_down >= 1),
    }
    for r in config.ratio_thresholds:
        out[f"ratio_lt_{_fmt(r)}"] = sum(1 for c in comments if _ratio_below(c, r))
    for status in REPLY_STATUS:
        part = [c for c in comments if (c.parent_comment_id is not None) == (status == "reply")]
        out[f"pos_voted_{status}"] = sum(1 for c in part if c.votes_up >= 1)
        out[f"neg_voted_{status}"] = sum(1 for c in part if c.votes_down >= 1)
        for r in config.ratio_thresholds:
            out[f"ratio_lt_{_fmt(r)}_{status}"] = sum(1 for c in part if _ratio_below(c, r))
    return out


def _similarity_summary(sims: list[float], cuts) -> dict:
    out = {
        "sim_mean": float(np.mean(sims)) if sims else 0.0,
        "sim_max": max(sims) if sims else 0.0,
        "sim_min": min(sims) if sims else 0.0,
    }
    for cut in cuts:
        out[f"sim_lt_{_fmt(cut)}"] = sum(1 for s in sims if s < cut)
    for cut in cuts:
        out[f"sim_ge_{_fmt(cut)}"] = sum(1 for s in sims if s >= cut)
    return out


def similarity_features(
    corpus: Corpus,
    vocabulary: Vocabulary,
    user_id: str,
    config: FeatureConfig | None = None,
    contexts: dict[str, CommentContext] | None = None,
    similarity=None,
) -> dict[str, dict]:
    """Similarity summaries keyed by group: all comments and top-ranked ones.

    "Top" comments are those in their thread's top-``max(top_ks)`` loved or
    hated comments.
    """
    config = config or FeatureConfig()
    comments = corpus.user_comments(user_id)
    if contexts is None:
        contexts = comment_contexts(corpus, {c.publication_id for c in comments})
    sim = similarity or _Similarities(corpus, vocabulary)
    kmax = max(config.top_ks)
    sims, top = [], []
    for c in comments:
        s = sim(c)
        sims.append(s)
        ctx = contexts[c.id]
        if ctx.loved_rank <= kmax or ctx.hated_rank <= kmax:
            top.append(s)
    return {
        FeatureGroup.SIMILARITY: _similarity_summary(sims, config.similarity_cuts),
        FeatureGroup.SIMILARITY_TOP: _similarity_summary(top, config.similarity_cuts),
    }


def order_features(corpus, user_id, config=None, contexts=None) -> dict:
    config = config or FeatureConfig()
    comments = corpus.user_comments(user_id)
    if contexts is None:
        contexts = comment_contexts(corpus, {c.publication_id for c in comments})
    return {
        f"first_{k}": sum(1 for c in comments if contexts[c.id].ordinal <= k)
        for k in config.order_ks
    }


def top_loved_hated_features(corpus, user_id, config=None, contexts=None) -> dict:
    config = config or FeatureConfig()
    comments = corpus.user_comments(user_id)
    if contexts is None:
        contexts = comment_contexts(corpus, {c.publication_id for c in comments})
    out = {}
    for direction, attr in (("loved", "loved_rank"), ("hated", "hated_rank")):
        for k in config.top_ks:
            out[f"{direction}_top_{k}"] = sum(
                1 for c in comments if getattr(contexts[c.id], attr) <= k
            )
    return out


def reply_features(corpus, user_id, config=None, contexts=None) -> dict:
    config = config or FeatureConfig()
    comments = corpus.user_comments(user_id)
    if contexts is None:
        contexts = comment_contexts(corpus, {c.publication_id for c in comments})
    out = {
        "top_level": 0, "replies": 0, "replies_to_replies": 0,
        "replies_with_replies": 0, "top_level_with_replies": 0, "triggered": 0,
        "votes_up_sum_top": 0, "votes_down_sum_top": 0,
        "votes_up_sum_reply": 0, "votes_down_sum_reply": 0,
    }
    for lo, hi in config.triggered_ranges:
        out[config.bucket_name(lo, hi)] = 0
    for c in comments:
        ctx = contexts[c.id]
        status = "reply" if ctx.depth >= 1 else "top"
        out["replies" if ctx.depth >= 1 else "top_level"] += 1
        if ctx.depth >= 2:
            out["replies_to_replies"] += 1
        if ctx.replies_by_others:
            out["replies_with_replies" if ctx.depth >= 1 else "top_level_with_replies"] += 1
        out["triggered"] += ctx.replies_by_others
        for lo, hi in config.triggered_ranges:
            if lo <= ctx.replies_by_others and (hi is None or ctx.replies_by_others <= hi):
                out[config.bucket_name(lo, hi)] += 1
        out[f"votes_up_sum_{status}"] += c.votes_up
        out[f"votes_down_sum_{status}"] += c.votes_down
    return out


def time_features(corpus: Corpus, user_id: str, config: FeatureConfig | None = None) -> dict:
    config = config or FeatureConfig()
    start, end = config.work_hours
    out = {f"hour_{h:02d}": 0 for h in range(24)}
    out.update({"work_hours": 0, "non_work_hours": 0})
    out.update({f"dow_{d}": 0 for d in WEEKDAYS})
    out.update({"weekday": 0, "weekend": 0})
    for c in corpus.user_comments(user_id):
        local = corpus.local_time(c.posted_at)
        out[f"hour_{local.hour:02d}"] += 1
        tod = local.time()
        out["work_hours" if start <= tod < end else "non_work_hours"] += 1
        wd = local.weekday()
        out[f"dow_{WEEKDAYS[wd]}"] += 1
        out["weekday" if wd < 5 else "weekend"] += 1
    return out


def raw_statistics(
    corpus: Corpus,
    vocabulary: Vocabulary,
    user_id: str,
    config: FeatureConfig | None = None,
    contexts: dict[str, CommentContext] | None = None,
    similarity=None,
) -> dict[tuple[FeatureGroup, str], float]:
    """Every raw statistic of the inventory for one user, keyed by (group, name)."""
    config = config or FeatureConfig()
    if contexts is None:
        pubs = {c.publication_id for c in corpus.user_comments(user_id)}
        contexts = comment_contexts(corpus, pubs)
    stats = activity_stats(corpus, user_id)
    flat = {}
    flat.update(vote_features(corpus, user_id, config))
    flat.update(order_features(corpus, user_id, config, contexts))
    flat.update(top_loved_hated_features(corpus, user_id, config, contexts))
    flat.update(reply_features(corpus, user_id, config, contexts))
    flat.update(time_features(corpus, user_id, config))
    flat.update(
        comments=stats.total_comments,
        active_days=stats.active_days,
        publications=stats.publications_commented,
    )
    sims = similarity_features(corpus, vocabulary, user_id, config, contexts, similarity)
    out = {}
    for st in statistic_inventory(config):
        if st.group in sims:
            out[(st.group, st.name)] = sims[st.group][st.name]
        else:
            out[(st.group, st.name)] = flat[st.name]
    return out


def scaling_denominators(corpus: Corpus, user_id: str) -> dict[str, int]:
    stats = activity_stats(corpus, user_id)
    den = {name: getattr(stats, attr) for name, attr in DENOMINATORS.items()}
    if stats.total_comments == 0:
        raise DataError(f"user {user_id!r} has no comments; features are undefined")
    den["per_multi_comment_day"] = max(1, den["per_multi_comment_day"])
    for name, value in den.items():
        if value <= 0:
            raise DataError(f"user {user_id!r}: zero scaling denominator {name}")
    return den


def assemble(
    corpus: Corpus,
    vocabulary: Vocabulary,
    user_id: str,
    config: FeatureConfig | None = None,
    manifest: FeatureManifest | None = None,
    contexts: dict[str, CommentContext] | None = None,
    similarity=None,
) -> np.ndarray:
    """One user's feature vector aligned to ``manifest``."""
    config = config or FeatureConfig()
    manifest = manifest or build_manifest(config)
    raw = raw_statistics(corpus, vocabulary, user_id, config, contexts, similarity)
    den = scaling_denominators(corpus, user_id)
    row = np.empty(len(manifest))
    for i, f in enumerate(manifest):
        value = raw[(f.source_group, f.statistic)]
        if f.scaled and f.denominator != "none":
            value = value / den[f.denominator]
        row[i] = value
    if not np.all(np.isfinite(row)):
        raise DataError(f"non-finite feature value for user {user_id!r}")
    return row


@dataclass
class FeatureMatrix:
    user_ids: list[str]
    values: np.ndarray
    manifest: FeatureManifest = field(repr=False)

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", *self.manifest.names])
            for uid, row in zip(self.user_ids, self.values):
                w.writerow([uid, *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path: str | Path, manifest: FeatureManifest) -> "FeatureMatrix":
        with Path(path).open(encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[1:] != manifest.names:
                raise DataError(f"{path}: header does not match the feature manifest")
            ids, rows = [], []
            for r in reader:
                ids.append(r[0])
                rows.append([float(v) for v in r[1:]])
        return cls(ids, np.array(rows, dtype=float).reshape(len(ids), len(manifest)), manifest)


class UserFeatureExtractor(BaseEstimator, TransformerMixin):
    """Transform user ids into behavioural feature rows.

    ``fit`` fits the TF-IDF vocabulary on the whole corpus unless one is
    given, and builds the manifest. ``transform`` accepts any iterable of
    user ids present in the corpus.

    Parameters
    ----------
    corpus : Corpus
    config : FeatureConfig, optional
    vocabulary : Vocabulary, optional
        Reuse an existing vocabulary instead of fitting one.
    """

    def __init__(self, corpus=None, config=None, vocabulary=None):
        self.corpus = corpus
        self.config = config
        self.vocabulary = vocabulary

    def fit(self, user_ids=None, y=None):
        if self.corpus is None:
            raise ValueError("UserFeatureExtractor needs a corpus")
        self.config_ = self.config or FeatureConfig()
        self.vocabulary_ = self.vocabulary or corpus_vocabulary(self.corpus)
        self.manifest_ = build_manifest(self.config_)
        self._contexts = None
        self._similarity = _Similarities(self.corpus, self.vocabulary_)
        return self

    def transform(self, user_ids) -> np.ndarray:
        check_is_fitted(self, "manifest_")
        if self._contexts is None:
            self._contexts = comment_contexts(self.corpus)
        ids = list(user_ids)
        out = np.zeros((len(ids), len(self.manifest_)))
        for i, uid in enumerate(ids):
            out[i] = assemble(
                self.corpus, self.vocabulary_, uid, self.config_, self.manifest_,
                self._contexts, self._similarity,
            )
        return out

    def matrix(self, user_ids) -> FeatureMatrix:
        ids = list(user_ids)
        return FeatureMatrix(ids, self.transform(ids), self.manifest_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "manifest_")
        return np.asarray(self.manifest_.names, dtype=object)
