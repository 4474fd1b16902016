"""Small corpus builders shared by the test modules."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from trollscope.corpus import Corpus, format_timestamp
from trollscope.features import (
    FeatureConfig, FeatureGroup, assemble, build_manifest, comment_contexts, corpus_vocabulary,
    raw_statistics,
)
from trollscope.textsim import publication_text

from oracles import dense_cosine, dense_tfidf, gram, naive_raw_counts, simple_tokens

T0 = datetime(2014, 3, 3, 6, 0, tzinfo=timezone.utc)  # a Monday, 08:00 in Sofia
WORDS = ["власт", "избори", "eu", "parliament", "вот", "бюджет", "газ", "банка", "съд", "ток"]


def ts(minutes: float = 0, days: float = 0) -> str:
    return format_timestamp(T0 + timedelta(days=days, minutes=minutes))


def pub(pid, when=None, title="", body="", tags=()):
    return {"id": pid, "category": "Bulgaria", "subcategory": "politics", "tags": list(tags),
            "title": title, "body": body,
            "published_at": when or format_timestamp(T0 - timedelta(hours=1))}


def com(cid, pid, author, when, parent=None, body="", up=0, down=0):
    return {"id": cid, "publication_id": pid, "author_id": author, "parent_comment_id": parent,
            "body": body, "posted_at": when, "votes_up": up, "votes_down": down}


def user(uid, name=None):
    return {"id": uid, "display_name": name or f"name-{uid}"}


def make_corpus(publications, comments, users, tz="Europe/Sofia") -> Corpus:
    return Corpus.from_records(publications, comments, users, tz=tz)


def random_corpus(seed: int, max_comments: int = 50, tz="Europe/Sofia") -> Corpus:
    """A random but valid corpus with at most ``max_comments`` comments."""
    rng = np.random.default_rng(seed)
    n_pubs = int(rng.integers(1, 6))
    n_users = int(rng.integers(2, 7))
    n_comments = int(rng.integers(1, max_comments + 1))
    pubs = []
    for i in range(n_pubs):
        words = [WORDS[int(j)] for j in rng.integers(0, len(WORDS), size=int(rng.integers(0, 8)))]
        pubs.append(pub(f"p{i}", title=" ".join(words[:2]), body=" ".join(words[2:]),
                        tags=words[:1]))
    users = [user(f"u{i}") for i in range(n_users)]
    comments = []
    for i in range(n_comments):
        p = f"p{int(rng.integers(0, n_pubs))}"
        when = ts(minutes=float(rng.integers(0, 60 * 24 * 9)) )
        earlier = [c for c in comments if c["publication_id"] == p and c["posted_at"] <= when]
        parent = None
        if earlier and rng.random() < 0.5:
            parent = earlier[int(rng.integers(0, len(earlier)))]["id"]
        words = [WORDS[int(j)] for j in rng.integers(0, len(WORDS), size=int(rng.integers(0, 6)))]
        # occasionally duplicate a timestamp to exercise tie-breaking
        if comments and rng.random() < 0.1:
            when = max(when, comments[-1]["posted_at"])
        comments.append(com(
            f"c{i:03d}", p, f"u{int(rng.integers(0, n_users))}", when, parent,
            " ".join(words), int(rng.integers(0, 5)) * int(rng.random() < 0.6),
            int(rng.integers(0, 6)) * int(rng.random() < 0.6),
        ))
    return make_corpus(pubs, comments, users, tz=tz)


def random_svm_problem(rng):
    """A small random binary problem with both classes present."""
    n = int(rng.integers(4, 31))
    d = int(rng.integers(2, 11))
    X = rng.uniform(-1, 1, (n, d))
    y = np.where(rng.random(n) < 0.5, -1, 1)
    y[0], y[1] = 1, -1
    C = float(2.0 ** rng.integers(-3, 8))
    gamma = float(2.0 ** rng.integers(-4, 3))
    return X, y, C, gamma


def kkt_violations(alpha, bias, X, y, C, gamma):
    """Per-point violation of the KKT conditions given f(x) = sum a_i y_i K + b."""
    yf = y * ((alpha * y) @ gram(X, gamma) + bias)
    lower = alpha <= 0
    upper = alpha >= C
    free = ~lower & ~upper
    out = np.zeros(len(y))
    out[lower] = np.maximum(0.0, 1.0 - yf[lower])
    out[upper] = np.maximum(0.0, yf[upper] - 1.0)
    out[free] = np.abs(yf[free] - 1.0)
    return out


# --- feature checks shared by the unit and acceptance suites ----------------------------

SIM_GROUPS = (FeatureGroup.SIMILARITY, FeatureGroup.SIMILARITY_TOP)


def check_brute_force(corpus):
    vocab = corpus_vocabulary(corpus)
    contexts = comment_contexts(corpus)
    docs = {f"pub:{p.id}": simple_tokens(publication_text(p)) for p in corpus.publications.values()}
    docs.update({c.id: simple_tokens(c.body) for c in corpus.comments.values()})
    keys = list(docs)
    _, dense = dense_tfidf([docs[k] for k in keys])
    vec = dict(zip(keys, dense))
    for uid in corpus.users:
        if not corpus.user_comments(uid):
            continue
        raw = raw_statistics(corpus, vocab, uid, contexts=contexts)
        naive = naive_raw_counts(corpus, uid, corpus.tz)
        for (group, name), value in raw.items():
            if group in SIM_GROUPS:
                continue
            assert value == naive[name], (uid, group, name)
        mine = [c for c in corpus.comments.values() if c.author_id == uid]
        sims = [dense_cosine(vec[c.id], vec[f"pub:{c.publication_id}"]) for c in mine]
        assert abs(raw[(FeatureGroup.SIMILARITY, "sim_mean")] - float(np.mean(sims))) <= 1e-9
        for cut in (0.1, 0.3, 0.5):
            # counts near a cut could flip on rounding; the random texts never land on one
            assert raw[(FeatureGroup.SIMILARITY, f"sim_ge_{cut:g}")] == sum(s >= cut for s in sims)
        n = len(mine)
        assert sum(raw[(FeatureGroup.TIME_HOURS, f"hour_{h:02d}")] for h in range(24)) == n
        assert raw[(FeatureGroup.TIME_DAY_OF_WEEK, "weekday")] + \
            raw[(FeatureGroup.TIME_DAY_OF_WEEK, "weekend")] == n
        assert raw[(FeatureGroup.IS_REPLY, "top_level")] + raw[(FeatureGroup.IS_REPLY, "replies")] == n
        assert raw[(FeatureGroup.TIME, "work_hours")] + raw[(FeatureGroup.TIME, "non_work_hours")] == n


def duplicate_history(corpus: Corpus, user_id: str) -> Corpus:
    """Clone every thread the user commented in, with fresh ids and the same timestamps.

    Cloning whole threads keeps the thread context (ordinals, vote ranks,
    replies by others) of each duplicated comment identical to the original.
    """
    pubs = [vars_pub(p) for p in corpus.publications.values()]
    comments = [vars_com(c) for c in corpus.comments.values()]
    for pid in sorted({c.publication_id for c in corpus.user_comments(user_id)}):
        p = corpus.publications[pid]
        pubs.append(vars_pub(p, "dup-"))
        for c in corpus.by_publication[pid]:
            comments.append(vars_com(corpus.comments[c], "dup-"))
    users = [user(u.id, u.display_name) for u in corpus.users.values()]
    return make_corpus(pubs, comments, users, tz=corpus.tz.key)


def vars_pub(p, prefix=""):
    return pub(prefix + p.id, format_timestamp(p.published_at), p.title, p.body, p.tags)


def vars_com(c, prefix=""):
    parent = prefix + c.parent_comment_id if c.parent_comment_id else None
    return com(prefix + c.id, prefix + c.publication_id, c.author_id, format_timestamp(c.posted_at),
               parent, c.body, c.votes_up, c.votes_down)


def check_duplication(corpus, uid):
    cfg = FeatureConfig()
    manifest = build_manifest(cfg)
    vocab = corpus_vocabulary(corpus)
    before = assemble(corpus, vocab, uid, cfg, manifest)
    doubled = duplicate_history(corpus, uid)
    after = assemble(doubled, vocab, uid, cfg, manifest)
    index = {f.name: i for i, f in enumerate(manifest)}
    per_comment = [f for f in manifest if f.denominator == "per_comment"]
    assert per_comment
    for f in per_comment:
        i = index[f.name]
        assert after[i] == before[i], f.name
        j = index[f"non_scaled:{f.source_group.value}.{f.statistic}"]
        assert after[j] == 2 * before[j], f.name

