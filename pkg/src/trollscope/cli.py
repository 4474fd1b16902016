"""Command-line entry point: ``trollscope <command> [options]``.

Settings resolve as built-in defaults < config file (``--config`` or the
``TROLLSCOPE_CONFIG`` environment variable, JSON) < command-line flags.
Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import warnings
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import CORPUS_FILES, DEFAULT_TIMEZONE, load_corpus
from .errors import DataError
from .experiments import (
    DEFAULT_TEST_MIN_COMMENTS, METRIC_COLUMNS, AblationSpec, Experiment, ExperimentReport,
    aggregate_profiles, metric_columns,
)
from .features import FeatureConfig
from .labeling import (
    AccusationLexicon, Label, LabelConfig, assign_labels, detect_accusations, mention_counts,
)
from .metrics import compute_metrics
from .svm import SvmModel, TrainConfig, grid_search
from .synth import SyntheticSpec, generate_synthetic

logger = logging.getLogger("trollscope")

COMMANDS = ("ingest", "label", "featurize", "train", "evaluate", "ablate", "sweep", "profile",
            "synth")

DEFAULTS = {
    "corpus": None,
    "timezone": DEFAULT_TIMEZONE,
    "lexicon": None,
    "min_mentions": 5,
    "min_comments": 150,
    "test_min_comments": DEFAULT_TEST_MIN_COMMENTS,
    "paid_trolls": None,
    "c": 32.0,
    "gamma": 0.0078125,
    "tol": 1e-3,
    "folds": 5,
    "seed": 42,
    "jobs": 1,
    "out": "out",
    "model": None,
    "grid": False,
    "kind": "comments",
    "thresholds": None,
    "mode": "paid_test",
    "top_n": 10,
    "features": {},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser):
    # defaults are None so that only flags actually given override the config
    a = p.add_argument
    a("--config", help="JSON config file (default: $TROLLSCOPE_CONFIG)")
    a("--corpus", metavar="DIR", help="corpus directory with the three JSONL files")
    a("--timezone", metavar="ZONE", help=f"forum-local timezone (default {DEFAULT_TIMEZONE})")
    a("--lexicon", metavar="FILE", help="accusation keywords, one per line")
    a("--min-mentions", type=int, metavar="N", help="distinct accusers for a troll (default 5)")
    a("--min-comments", type=int, metavar="N", help="activity floor for labels (default 150)")
    a("--test-min-comments", type=int, metavar="N",
      help="activity floor for test paid trolls (default 100)")
    a("--paid-trolls", metavar="FILE", help="known paid troll ids, one per line")
    a("--c", type=float, metavar="REAL", help="SVM C (default 32)")
    a("--gamma", type=float, metavar="REAL", help="RBF gamma (default 0.0078125)")
    a("--folds", type=int, metavar="N", help="cross-validation folds (default 5)")
    a("--seed", type=int, metavar="N", help="random seed (default 42)")
    a("--jobs", type=int, metavar="N", help="worker cap (default 1)")
    a("--out", metavar="DIR", help="output directory (default ./out)")
    a("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trollscope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"trollscope {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    helps = {
        "ingest": "validate and summarize a corpus",
        "label": "detect accusations and write labels.csv",
        "featurize": "write the feature matrix and manifest",
        "train": "train the SVM on mentioned trolls vs non-trolls",
        "evaluate": "evaluate a model on paid trolls vs non-trolls",
        "ablate": "feature-group ablation report",
        "sweep": "min-comments or min-mentions sweep",
        "profile": "aggregated paid / mentioned / non-troll profiles",
        "synth": "generate a synthetic corpus with planted archetypes",
    }
    subs = {}
    for name in COMMANDS:
        subs[name] = sub.add_parser(name, help=helps[name], description=helps[name])
        _common(subs[name])
    subs["train"].add_argument("--grid", action="store_true", default=None,
                               help="pick C and gamma by cross-validated grid search")
    subs["evaluate"].add_argument("--model", metavar="FILE", help="model file from `train`")
    subs["sweep"].add_argument("--kind", choices=["comments", "mentions"])
    subs["sweep"].add_argument("--thresholds", metavar="LIST",
                               help="comma-separated values (defaults: 0,10,...,150 or 3,4,5,6)")
    subs["sweep"].add_argument("--mode", choices=["paid_test", "cross_validation"],
                               help="evaluation for --kind mentions")
    subs["profile"].add_argument("--top-n", type=int, metavar="N",
                                 help="most active users per group (default 10)")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    path = args.config or os.environ.get("TROLLSCOPE_CONFIG")
    if path:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config file {path}: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
    cfg["config_file"] = path
    return cfg


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _inputs(cfg: dict) -> dict:
    files = {}
    if cfg["corpus"]:
        for name in CORPUS_FILES:
            p = Path(cfg["corpus"]) / name
            if p.exists():
                files[str(p)] = _digest(p)
    for key in ("lexicon", "paid_trolls", "model", "config_file"):
        if cfg.get(key) and Path(cfg[key]).exists():
            files[str(cfg[key])] = _digest(Path(cfg[key]))
    return files


def write_run_manifest(command: str, cfg: dict, out: Path, started: datetime) -> Path:
    manifest = {
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "inputs": _inputs(cfg),
        "seed": cfg["seed"],
        "tool_version": __version__,
        "timestamps": {
            "started": started.isoformat(timespec="seconds"),
            "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    }
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{command}.run.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _need_corpus(cfg):
    if not cfg["corpus"]:
        raise UsageError("--corpus is required for this command")
    return load_corpus(cfg["corpus"], cfg["timezone"])


def _lexicon(cfg):
    return AccusationLexicon.load(cfg["lexicon"]) if cfg["lexicon"] else AccusationLexicon()


def _paid_ids(cfg) -> tuple[str, ...]:
    if not cfg["paid_trolls"]:
        return ()
    try:
        text = Path(cfg["paid_trolls"]).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read paid troll list: {exc}") from exc
    ids = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    return tuple(sorted({i for i in ids if i}))


def _configs(cfg):
    label = LabelConfig(cfg["min_mentions"], cfg["min_comments"], _paid_ids(cfg), cfg["seed"])
    try:
        feats = FeatureConfig.from_dict(cfg["features"] or {})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad feature config: {exc}") from exc
    train = TrainConfig(C=cfg["c"], gamma=cfg["gamma"], tol=cfg["tol"], seed=cfg["seed"])
    return label, feats, train


def _experiment(cfg, corpus):
    label, feats, train = _configs(cfg)
    return Experiment(corpus, label, feats, train, _lexicon(cfg), n_jobs=cfg["jobs"])


def _thresholds(cfg, default):
    raw = cfg["thresholds"]
    if raw is None:
        return default
    if isinstance(raw, list):
        return [int(v) for v in raw]
    try:
        return [int(v) for v in str(raw).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --thresholds {raw!r}") from exc


def cmd_ingest(cfg, out):
    corpus = _need_corpus(cfg)
    summary = corpus.summary()
    (out / "ingest_summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    for k, v in summary.items():
        print(f"{k}: {v}")


def cmd_label(cfg, out):
    corpus = _need_corpus(cfg)
    label_cfg, _, _ = _configs(cfg)
    accusations = detect_accusations(corpus, _lexicon(cfg))
    dataset = assign_labels(corpus, mention_counts(accusations), label_cfg)
    dataset.to_csv(out / "labels.csv")
    with (out / "accusations.csv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("accuser_id,accused_id,comment_id\n")
        for a in accusations:
            fh.write(f"{a.accuser_id},{a.accused_id},{a.comment_id}\n")
    for k, v in dataset.counts().items():
        print(f"{k}: {v}")


def cmd_featurize(cfg, out):
    corpus = _need_corpus(cfg)
    exp = _experiment(cfg, corpus)
    dataset = exp.dataset()
    users = [uid for uid, e in sorted(dataset.entries.items()) if e.label is not Label.EXCLUDED]
    extra = [u for u in exp.label_config.paid_troll_ids
             if len(corpus.by_author.get(u, ())) >= cfg["test_min_comments"] and u not in users]
    users = sorted(set(users) | set(extra))
    matrix = exp.extractor.matrix(users)
    matrix.to_csv(out / "features.csv")
    exp.manifest.save(out / "features_manifest.csv")
    exp.extractor.vocabulary_.save(out / "vocabulary.tsv")
    print(f"{len(users)} users x {len(exp.manifest)} features")


def cmd_train(cfg, out):
    corpus = _need_corpus(cfg)
    exp = _experiment(cfg, corpus)
    pair = exp.training_pair()
    if cfg["grid"]:
        cols = AblationSpec().columns(exp.manifest)
        res = grid_search(exp.features(pair.user_ids)[:, cols], pair.labels, folds=cfg["folds"],
                          seed=cfg["seed"], n_jobs=cfg["jobs"])
        exp.train_config = replace(exp.train_config, C=res.C, gamma=res.gamma)
        print(f"grid search: C={res.C:g} gamma={res.gamma:g}")
    clf, _ = exp.fit(pair)
    model = clf.model_
    model.meta.update({"train_users": len(pair.user_ids), "ablation": "all_scaled",
                       "train_config": exp.train_config.to_dict()})
    model.save(out / "model.json")
    print(f"model: C={model.C:g} gamma={model.gamma:g} support vectors={len(model.dual_coef)}")


def cmd_evaluate(cfg, out):
    if not cfg["model"]:
        raise UsageError("--model is required for evaluate")
    model = SvmModel.load(cfg["model"])
    corpus = _need_corpus(cfg)
    exp = _experiment(cfg, corpus)
    cols = AblationSpec().columns(exp.manifest)
    if model.fingerprint != exp.manifest.subset(cols).fingerprint():
        raise DataError("model was trained with a different feature manifest")
    pair = exp.training_pair()
    test = exp.test_set(pair, cfg["test_min_comments"])
    if not len(test):
        raise DataError("no paid trolls meet the test activity floor")
    pred = np.where(model.decision_function(exp.features(test.user_ids)[:, cols]) >= 0, 1, -1)
    m = compute_metrics(pred.tolist(), test.labels)
    report = ExperimentReport("evaluation", ["n_test", *METRIC_COLUMNS],
                              [{"n_test": len(test), **metric_columns(m)}])
    report.save(out, "evaluation")
    print(report.to_text(), end="")


def cmd_ablate(cfg, out):
    exp = _experiment(cfg, _need_corpus(cfg))
    report = exp.ablation_suite(test_min_comments=cfg["test_min_comments"])
    report.save(out, "ablation")
    print(report.to_text(), end="")


def cmd_sweep(cfg, out):
    exp = _experiment(cfg, _need_corpus(cfg))
    if cfg["kind"] == "comments":
        report = exp.sweep_min_comments(_thresholds(cfg, list(range(0, 151, 10))))
        stem = "sweep_min_comments"
    else:
        report = exp.sweep_min_mentions(_thresholds(cfg, [3, 4, 5, 6]), cfg["mode"],
                                        cfg["folds"], cfg["test_min_comments"])
        stem = f"sweep_min_mentions_{cfg['mode']}"
    report.save(out, stem)
    print(report.to_text(), end="")


def cmd_profile(cfg, out):
    corpus = _need_corpus(cfg)
    exp = _experiment(cfg, corpus)
    profile = aggregate_profiles(corpus, exp.dataset(), cfg["top_n"], exp.feature_config)
    report = profile.report()
    report.save(out, "profile")
    print(report.to_text(), end="")


def cmd_synth(cfg, out):
    spec = SyntheticSpec(seed=cfg["seed"], timezone=cfg["timezone"])
    corpus = generate_synthetic(spec, out)
    print(f"wrote {len(corpus.comments)} comments by {len(corpus.users)} users to {out}")


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("trollscope: error: a command is required")
        cfg = resolve_config(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = datetime.now(timezone.utc)
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            HANDLERS[args.command](cfg, out)
        write_run_manifest(args.command, cfg, out, started)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"trollscope: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, KeyError) as exc:
        print(f"trollscope: data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
