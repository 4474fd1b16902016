from dataclasses import replace

import numpy as np
import pytest

from trollscope.corpus import Corpus, load_corpus
from trollscope.errors import DataError
from trollscope.features import time_features
from trollscope.labeling import Label, LabelConfig, label_corpus
from trollscope.synth import (
    ArchetypeSpec, SyntheticSpec, generate, generate_synthetic, read_ground_truth,
)


def _small_spec(**changes):
    spec = SyntheticSpec(days=300, seed=3)
    return replace(spec, **changes)


def test_byte_identical_output(tmp_path):
    generate_synthetic(_small_spec(), tmp_path / "a")
    generate_synthetic(_small_spec(), tmp_path / "b")
    for name in ("publications.jsonl", "comments.jsonl", "users.jsonl", "ground_truth.csv",
                 "paid_trolls.txt", "synthetic_spec.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_different_seeds_differ():
    assert generate(_small_spec()).comments != generate(_small_spec(seed=4)).comments


def test_written_corpus_loads(tmp_path):
    s = generate_synthetic(_small_spec(), tmp_path)
    corpus = load_corpus(tmp_path)
    assert len(corpus.comments) == len(s.comments)
    truth = read_ground_truth(tmp_path / "ground_truth.csv")
    assert truth == s.archetypes
    paid = (tmp_path / "paid_trolls.txt").read_text().split()
    assert paid == s.paid_troll_ids


def test_planted_mentioned_recovered_exactly():
    base = SyntheticSpec(seed=11)
    archetypes = dict(base.archetypes)
    archetypes["mentioned_troll"] = replace(
        archetypes["mentioned_troll"], tiers=((10, 150, 320),), accusers=(5, 5)
    )
    spec = replace(base, archetypes=archetypes)
    s = generate(spec)
    corpus = Corpus.from_records(s.publications, s.comments, s.users)
    ds = label_corpus(corpus, LabelConfig(min_mentions=5, paid_troll_ids=tuple(s.paid_troll_ids)))
    assert sorted(ds.ids(Label.MENTIONED_TROLL)) == s.ids("mentioned_troll")
    assert len(s.ids("mentioned_troll")) == 10


def test_paid_trolls_rarely_accused():
    s = generate(SyntheticSpec(seed=5))
    corpus = Corpus.from_records(s.publications, s.comments, s.users)
    ds = label_corpus(corpus, LabelConfig(min_mentions=5, min_comments=1))
    for uid in s.paid_troll_ids:
        assert ds[uid].mention_count <= 1


def test_infeasible_spec():
    base = SyntheticSpec()
    archetypes = dict(base.archetypes)
    archetypes["mentioned_troll"] = replace(archetypes["mentioned_troll"], accusers=(5, 500))
    with pytest.raises(DataError, match="infeasible"):
        generate(replace(base, archetypes=archetypes))


@pytest.mark.parametrize("bad", [
    {"work_hours_prob": 1.5}, {"tiers": ((3, 10, 5),)}, {"accusers": (4, 2)},
])
def test_invalid_archetype(bad):
    base = SyntheticSpec()
    archetypes = dict(base.archetypes)
    archetypes["non_troll"] = replace(archetypes["non_troll"], **bad)
    with pytest.raises(DataError):
        generate(replace(base, archetypes=archetypes))


def test_unknown_archetype_rejected():
    a = SyntheticSpec().archetypes["non_troll"]
    with pytest.raises(DataError):
        generate(SyntheticSpec(archetypes={"lurker": a}))


def test_work_hours_separation():
    base = SyntheticSpec(seed=9)
    archetypes = dict(base.archetypes)
    archetypes["paid_troll"] = replace(archetypes["paid_troll"], work_hours_prob=0.9)
    for name in ("mentioned_troll", "borderline_troll", "non_troll", "background"):
        archetypes[name] = replace(archetypes[name], work_hours_prob=0.3)
    s = generate(replace(base, archetypes=archetypes))
    corpus = Corpus.from_records(s.publications, s.comments, s.users)

    def rate(uid):
        f = time_features(corpus, uid)
        return f["work_hours"] / (f["work_hours"] + f["non_work_hours"])

    active_paid = [u for u in s.paid_troll_ids if len(corpus.by_author.get(u, ())) >= 40]
    paid = [rate(u) for u in active_paid]
    others = [rate(u) for u in s.ids("non_troll")]
    # each group sits near its planted probability and the groups do not overlap
    assert abs(np.mean(paid) - 0.9) < 0.1 and abs(np.mean(others) - 0.3) < 0.1
    assert min(paid) > max(others)


def test_archetype_spec_counts():
    spec = SyntheticSpec()
    assert spec.archetypes["paid_troll"].count == 15
    assert ArchetypeSpec(((2, 1, 3), (3, 1, 3)), 1, 0.5, 1, 0, 0, 0, 0, 0).count == 5
