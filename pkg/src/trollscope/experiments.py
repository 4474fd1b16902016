"""Train-on-mentioned / test-on-paid protocol, ablations, sweeps and profiles."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, activity_stats
from .errors import DataError, InsufficientDataError
from .features import (
    SCALED_GROUPS, FeatureConfig, FeatureGroup, FeatureManifest, UserFeatureExtractor,
    reply_features, time_features, vote_features,
)
from .labeling import (
    AccusationLexicon, Label, LabelConfig, LabeledDataset, TrainingPair, assign_labels,
    build_training_pair, detect_accusations, mention_counts,
)
from .metrics import Metrics, compute_metrics
from .svm import RbfSVC, TrainConfig, cross_validate

logger = logging.getLogger(__name__)

DEFAULT_TEST_MIN_COMMENTS = 100


class AblationMode(str, Enum):
    ALL_SCALED = "all_scaled"
    MINUS_GROUP = "all_scaled_minus_group"
    ONLY_GROUP = "only_group"
    PLUS_NONSCALED = "all_scaled_plus_nonscaled"
    ALL_NONSCALED = "all_nonscaled"


@dataclass(frozen=True)
class AblationSpec:
    mode: AblationMode = AblationMode.ALL_SCALED
    group: FeatureGroup | None = None

    def __post_init__(self):
        needs = self.mode in (AblationMode.MINUS_GROUP, AblationMode.ONLY_GROUP)
        if needs != (self.group is not None):
            raise ValueError(f"mode {self.mode.value} {'needs' if needs else 'takes no'} group")
        if self.group is FeatureGroup.NON_SCALED:
            raise ValueError("ablation groups are scaled groups")

    @property
    def label(self) -> str:
        if self.mode is AblationMode.ALL_SCALED:
            return "All Scaled (AS)"
        if self.mode is AblationMode.MINUS_GROUP:
            return f"AS - {self.group.label} (S)"
        if self.mode is AblationMode.ONLY_GROUP:
            return f"only {self.group.label} (S)"
        if self.mode is AblationMode.PLUS_NONSCALED:
            return "AS + Non Scaled (NS)"
        return "All Unscaled"

    def groups(self) -> list[FeatureGroup]:
        if self.mode is AblationMode.ALL_SCALED:
            return list(SCALED_GROUPS)
        if self.mode is AblationMode.MINUS_GROUP:
            return [g for g in SCALED_GROUPS if g is not self.group]
        if self.mode is AblationMode.ONLY_GROUP:
            return [self.group]
        if self.mode is AblationMode.PLUS_NONSCALED:
            return list(FeatureGroup)
        return [FeatureGroup.NON_SCALED]

    def columns(self, manifest: FeatureManifest) -> np.ndarray:
        idx = manifest.indices(self.groups())
        if len(idx) == 0:
            raise DataError(f"ablation {self.label!r} selects no features")
        return idx


def ablation_specs(groups: Sequence[FeatureGroup] = SCALED_GROUPS) -> list[AblationSpec]:
    return (
        [AblationSpec()]
        + [AblationSpec(AblationMode.MINUS_GROUP, g) for g in groups]
        + [AblationSpec(AblationMode.ONLY_GROUP, g) for g in groups]
        + [AblationSpec(AblationMode.PLUS_NONSCALED), AblationSpec(AblationMode.ALL_NONSCALED)]
    )


@dataclass(frozen=True)
class TestSet:
    paid_trolls: tuple[str, ...]
    non_trolls: tuple[str, ...]

    def __len__(self):
        return len(self.paid_trolls) + len(self.non_trolls)

    @property
    def user_ids(self):
        return [*self.paid_trolls, *self.non_trolls]

    @property
    def labels(self):
        return [1] * len(self.paid_trolls) + [-1] * len(self.non_trolls)


class Experiment:
    """Shared state for one corpus: labels, training pair and cached features.

    Feature rows are computed once per user and reused by every ablation
    row and sweep point.
    """

    def __init__(
        self,
        corpus: Corpus,
        label_config: LabelConfig,
        feature_config: FeatureConfig | None = None,
        train_config: TrainConfig | None = None,
        lexicon: AccusationLexicon | None = None,
        n_jobs: int = 1,
    ):
        self.corpus = corpus
        self.label_config = label_config
        self.feature_config = feature_config or FeatureConfig()
        self.train_config = train_config or TrainConfig(seed=label_config.seed)
        self.lexicon = lexicon or AccusationLexicon()
        self.n_jobs = n_jobs
        self.counts = mention_counts(detect_accusations(corpus, self.lexicon))
        self.extractor = UserFeatureExtractor(corpus, self.feature_config).fit()
        self.manifest = self.extractor.manifest_
        self._rows: dict[str, np.ndarray] = {}

    def dataset(self, min_mentions: int | None = None) -> LabeledDataset:
        cfg = self.label_config
        if min_mentions is not None:
            cfg = replace(cfg, min_mentions=min_mentions)
        return assign_labels(self.corpus, self.counts, cfg)

    def training_pair(self, min_mentions: int | None = None) -> TrainingPair:
        return build_training_pair(self.dataset(min_mentions), self.label_config)

    def features(self, user_ids: Sequence[str]) -> np.ndarray:
        missing = [u for u in user_ids if u not in self._rows]
        if missing:
            for uid, row in zip(missing, self.extractor.transform(missing)):
                self._rows[uid] = row
        return np.array([self._rows[u] for u in user_ids]).reshape(len(user_ids), -1)

    def test_set(self, pair: TrainingPair, min_comments: int = DEFAULT_TEST_MIN_COMMENTS) -> TestSet:
        """Paid trolls with enough comments plus as many never-accused users.

        Non-trolls are the most active users with zero accusations who are
        neither paid nor used in training.
        """
        by = self.corpus.by_author
        paid = sorted(
            (u for u in self.label_config.paid_troll_ids if len(by.get(u, ())) >= min_comments),
            key=lambda u: (-len(by.get(u, ())), u),
        )
        taken = set(pair.user_ids) | set(self.label_config.paid_troll_ids)
        pool = sorted(
            (u for u in self.corpus.users
             if u not in taken and self.counts.get(u, 0) == 0 and by.get(u)),
            key=lambda u: (-len(by[u]), u),
        )
        if len(pool) < len(paid):
            raise InsufficientDataError(
                f"need {len(paid)} test non-trolls, only {len(pool)} never-accused users left"
            )
        return TestSet(tuple(paid), tuple(pool[: len(paid)]))

    def fit(self, pair: TrainingPair, ablation: AblationSpec = AblationSpec()):
        cols = ablation.columns(self.manifest)
        X = self.features(pair.user_ids)[:, cols]
        clf = RbfSVC(
            C=self.train_config.C, gamma=self.train_config.gamma, tol=self.train_config.tol,
            max_iter=self.train_config.max_iter, random_state=self.train_config.seed,
        )
        clf.fit(X, pair.labels, fingerprint=self.manifest.subset(cols).fingerprint())
        return clf, cols

    def evaluate(self, clf, cols, test: TestSet) -> Metrics:
        pred = clf.predict(self.features(test.user_ids)[:, cols])
        return compute_metrics(pred.tolist(), test.labels, positive_label=1)

    def paid_troll_eval(self, ablation: AblationSpec = AblationSpec(),
                        test_min_comments: int = DEFAULT_TEST_MIN_COMMENTS,
                        min_mentions: int | None = None) -> Metrics:
        pair = self.training_pair(min_mentions)
        test = self.test_set(pair, test_min_comments)
        if len(test) == 0:
            raise InsufficientDataError(
                f"no paid trolls with at least {test_min_comments} comments"
            )
        clf, cols = self.fit(pair, ablation)
        return self.evaluate(clf, cols, test)

    def ablation_suite(self, specs: Sequence[AblationSpec] | None = None,
                       test_min_comments: int = DEFAULT_TEST_MIN_COMMENTS) -> "ExperimentReport":
        specs = list(specs) if specs is not None else ablation_specs()
        pair = self.training_pair()
        test = self.test_set(pair, test_min_comments)
        if len(test) == 0:
            raise InsufficientDataError(
                f"no paid trolls with at least {test_min_comments} comments"
            )
        self.features(pair.user_ids + test.user_ids)

        def run(spec):
            clf, cols = self.fit(pair, spec)
            return spec, len(cols), self.evaluate(clf, cols, test)

        results = [run(s) for s in specs]
        rows = []
        order = {m: i for i, m in enumerate(AblationMode)}
        for spec, n_feat, m in sorted(
            results, key=lambda r: (order[r[0].mode], -r[2].f_score, -r[2].accuracy, r[0].label)
        ):
            rows.append({
                "features": spec.label, "mode": spec.mode.value,
                "group": spec.group.value if spec.group else "", "n_features": n_feat,
                "n_train": len(pair.user_ids), "n_test": len(test), **metric_columns(m),
            })
        return ExperimentReport(
            "ablation",
            ["features", "mode", "group", "n_features", "n_train", "n_test", *METRIC_COLUMNS],
            rows,
        )

    def sweep_min_comments(self, thresholds: Sequence[int]) -> "ExperimentReport":
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        pair = self.training_pair()
        clf, cols = self.fit(pair)
        rows = []
        for t in thresholds:
            test = self.test_set(pair, t)
            m = self.evaluate(clf, cols, test) if len(test) else None
            rows.append({"min_comments": t, "n_paid": len(test.paid_trolls),
                         "n_test": len(test), **metric_columns(m)})
        return ExperimentReport("sweep_min_comments",
                                ["min_comments", "n_paid", "n_test", *METRIC_COLUMNS], rows)

    def sweep_min_mentions(self, mention_values: Sequence[int], eval_mode: str = "paid_test",
                           folds: int = 5,
                           test_min_comments: int = DEFAULT_TEST_MIN_COMMENTS) -> "ExperimentReport":
        if not mention_values:
            raise ValueError("mention_values must be non-empty")
        if eval_mode not in ("paid_test", "cross_validation"):
            raise ValueError(f"unknown eval mode {eval_mode!r}")
        rows = []
        for m in mention_values:
            pair = self.training_pair(m)
            if eval_mode == "paid_test":
                test = self.test_set(pair, test_min_comments)
                if len(test):
                    clf, cols = self.fit(pair)
                    res = self.evaluate(clf, cols, test)
                    acc, f = res.accuracy, res.f_score
                else:
                    acc = f = None
            else:
                cols = AblationSpec().columns(self.manifest)
                X = self.features(pair.user_ids)[:, cols]
                res = cross_validate(X, pair.labels, self.train_config, folds,
                                     self.train_config.seed)
                acc, f = res.accuracy, res.f_score
            rows.append({"min_mentions": m, "mentioned_trolls": len(pair.trolls),
                         "non_trolls": len(pair.non_trolls), "accuracy": acc, "f_score": f})
        return ExperimentReport(
            f"sweep_min_mentions_{eval_mode}",
            ["min_mentions", "mentioned_trolls", "non_trolls", "accuracy", "f_score"], rows,
        )


METRIC_COLUMNS = ["accuracy", "precision", "recall", "f_score", "tp", "fp", "fn", "tn"]


def metric_columns(m: Metrics | None) -> dict:
    if m is None:
        return {k: None for k in METRIC_COLUMNS}
    return {k: getattr(m, k) for k in METRIC_COLUMNS}


@dataclass
class ExperimentReport:
    name: str
    columns: list[str]
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    @staticmethod
    def _csv_value(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    @staticmethod
    def _text_value(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.2f}"
        return str(v)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([self._csv_value(r[c]) for c in self.columns])
        return buf.getvalue()

    def to_text(self) -> str:
        """Aligned table, numbers rounded to two decimals."""
        cells = [self.columns] + [[self._text_value(r[c]) for c in self.columns] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.columns))]
        lines = []
        for n, row in enumerate(cells):
            parts = [
                row[i].ljust(widths[i]) if i == 0 else row[i].rjust(widths[i])
                for i in range(len(row))
            ]
            lines.append("  ".join(parts).rstrip())
            if n == 0:
                lines.append("-" * len(lines[0]))
        return "\n".join(lines) + "\n"

    def save(self, out_dir: str | Path, stem: str | None = None) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or self.name
        csv_path, txt_path = out / f"{stem}.csv", out / f"{stem}.txt"
        csv_path.write_text(self.to_csv_text(), encoding="utf-8", newline="")
        txt_path.write_text(self.to_text(), encoding="utf-8", newline="")
        return csv_path, txt_path


def run_paid_troll_eval(corpus, label_config, feature_config=None, train_config=None,
                        ablation: AblationSpec = AblationSpec(),
                        test_min_comments: int = DEFAULT_TEST_MIN_COMMENTS,
                        lexicon=None) -> Metrics:
    exp = Experiment(corpus, label_config, feature_config, train_config, lexicon)
    return exp.paid_troll_eval(ablation, test_min_comments)


def run_ablation_suite(corpus, label_config, feature_config=None, train_config=None,
                       lexicon=None, test_min_comments=DEFAULT_TEST_MIN_COMMENTS):
    exp = Experiment(corpus, label_config, feature_config, train_config, lexicon)
    return exp.ablation_suite(test_min_comments=test_min_comments)


def sweep_min_comments(corpus, label_config, thresholds, feature_config=None,
                       train_config=None, lexicon=None):
    exp = Experiment(corpus, label_config, feature_config, train_config, lexicon)
    return exp.sweep_min_comments(thresholds)


def sweep_min_mentions(corpus, label_config, mention_values, eval_mode="paid_test",
                       feature_config=None, train_config=None, lexicon=None, folds=5):
    exp = Experiment(corpus, label_config, feature_config, train_config, lexicon)
    return exp.sweep_min_mentions(mention_values, eval_mode, folds)


PROFILE_STATISTICS = (
    "active_days_rate",
    "comments_per_active_day",
    "comments_per_publication",
    "neg_voted_rate",
    "pos_voted_rate",
    "high_neg_voted_rate",
    "med_neg_voted_rate",
    "replies_rate",
    "workday_rate",
    "work_hours_rate",
    "non_work_hours_rate",
)
PROFILE_GROUPS = (Label.PAID_TROLL, Label.MENTIONED_TROLL, Label.NON_TROLL)


def profile_statistics(corpus: Corpus, user_id: str,
                       config: FeatureConfig | None = None) -> dict[str, float]:
    """The eleven per-user rates compared across user groups.

    High/medium negative votes use the first and third vote-ratio
    thresholds: up/down < 0.25 is "high", 0.25 <= up/down < 1.0 "medium".
    """
    config = config or FeatureConfig()
    st = activity_stats(corpus, user_id)
    if st.total_comments == 0:
        raise DataError(f"user {user_id!r} has no comments")
    votes = vote_features(corpus, user_id, config)
    replies = reply_features(corpus, user_id, config)
    times = time_features(corpus, user_id, config)
    n = st.total_comments
    thr = config.ratio_thresholds
    hi_key = f"ratio_lt_{thr[0]:g}"
    med_key = f"ratio_lt_{thr[min(2, len(thr) - 1)]:g}"
    return {
        "active_days_rate": st.active_days / st.days_in_forum,
        "comments_per_active_day": n / st.active_days,
        "comments_per_publication": n / st.publications_commented,
        "neg_voted_rate": votes["neg_voted"] / n,
        "pos_voted_rate": votes["pos_voted"] / n,
        "high_neg_voted_rate": votes[hi_key] / n,
        "med_neg_voted_rate": (votes[med_key] - votes[hi_key]) / n,
        "replies_rate": replies["replies"] / n,
        "workday_rate": times["weekday"] / n,
        "work_hours_rate": times["work_hours"] / n,
        "non_work_hours_rate": times["non_work_hours"] / n,
    }


@dataclass
class GroupProfile:
    raw: dict[str, dict[str, float]]  # group -> statistic -> average
    normalized: dict[str, dict[str, float]]
    members: dict[str, list[str]]

    def report(self) -> ExperimentReport:
        groups = [g.value for g in PROFILE_GROUPS]
        cols = ["statistic"] + [f"{g}_norm" for g in groups] + [f"{g}_raw" for g in groups]
        rows = []
        for s in PROFILE_STATISTICS:
            row = {"statistic": s}
            for g in groups:
                row[f"{g}_norm"] = self.normalized[g][s]
                row[f"{g}_raw"] = self.raw[g][s]
            rows.append(row)
        return ExperimentReport("profile", cols, rows,
                                meta={"members": {g: len(v) for g, v in self.members.items()}})


def normalize_by_max(values: dict[str, float]) -> dict[str, float]:
    """value / max across groups; all-zero statistics stay 0."""
    top = max(values.values())
    if top == 0:
        return {k: 0.0 for k in values}
    return {k: v / top for k, v in values.items()}


def aggregate_profiles(corpus: Corpus, dataset: LabeledDataset, top_n: int = 10,
                       config: FeatureConfig | None = None) -> GroupProfile:
    members = {}
    for group in PROFILE_GROUPS:
        users = sorted(dataset.with_label(group), key=lambda e: (-e.total_comments, e.user_id))
        if not users:
            raise InsufficientDataError(f"no users labelled {group.value}")
        members[group.value] = [e.user_id for e in users[:top_n]]
    raw = {}
    for g, ids in members.items():
        per_user = [profile_statistics(corpus, u, config) for u in ids]
        raw[g] = {s: sum(p[s] for p in per_user) / len(per_user) for s in PROFILE_STATISTICS}
    normalized = {g: {} for g in raw}
    for s in PROFILE_STATISTICS:
        scaled = normalize_by_max({g: raw[g][s] for g in raw})
        for g, v in scaled.items():
            normalized[g][s] = v
    return GroupProfile(raw, normalized, members)
