"""TF-IDF vectors and cosine similarity between comments and publications."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import DataError

VOCABULARY_FORMAT = "trollscope-vocabulary v1"

# letters and digits; underscore and punctuation split words
_WORD = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.casefold())


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    df: tuple[int, ...]
    n_documents: int

    def __len__(self):
        return len(self.index)

    def idf(self, term: str) -> float:
        return _idf(self.df[self.index[term]], self.n_documents)

    def save(self, path: str | Path) -> None:
        terms = sorted(self.index, key=self.index.__getitem__)
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {VOCABULARY_FORMAT}\n")
            fh.write(f"N\t{self.n_documents}\n")
            for t in terms:
                fh.write(f"{t}\t{self.df[self.index[t]]}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != f"# {VOCABULARY_FORMAT}":
            raise DataError(f"{path}: not a {VOCABULARY_FORMAT} file")
        key, _, n = lines[1].partition("\t")
        if key != "N":
            raise DataError(f"{path}: missing document count header")
        index, df = {}, []
        for lineno, line in enumerate(lines[2:], start=3):
            term, _, count = line.partition("\t")
            if not term or not count.isdigit():
                raise DataError(f"{path}:{lineno}: malformed vocabulary line")
            index[term] = len(df)
            df.append(int(count))
        return cls(index=index, df=tuple(df), n_documents=int(n))


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, weight) pairs."""

    indices: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.indices)

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.dot(self.weights, self.weights)))

    def scaled(self, factor: float) -> "SparseVector":
        return SparseVector(self.indices, self.weights * factor)

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.indices] = self.weights
        return out


EMPTY = SparseVector(np.zeros(0, dtype=np.int64), np.zeros(0))


def _idf(df: int, n: int) -> float:
    return math.log((1 + n) / (1 + df)) + 1.0


def fit_vocabulary(documents: Sequence[Sequence[str]]) -> Vocabulary:
    if len(documents) == 0:
        raise ValueError("cannot fit a vocabulary on zero documents")
    df: Counter[str] = Counter()
    for doc in documents:
        df.update(set(doc))
    terms = sorted(df)
    return Vocabulary(
        index={t: i for i, t in enumerate(terms)},
        df=tuple(df[t] for t in terms),
        n_documents=len(documents),
    )


def vectorize(tokens: Iterable[str], vocabulary: Vocabulary) -> SparseVector:
    tf = Counter(t for t in tokens if t in vocabulary.index)
    if not tf:
        return EMPTY
    pairs = sorted((vocabulary.index[t], n) for t, n in tf.items())
    idx = np.fromiter((i for i, _ in pairs), dtype=np.int64, count=len(pairs))
    w = np.fromiter(
        (n * _idf(vocabulary.df[i], vocabulary.n_documents) for i, n in pairs),
        dtype=float,
        count=len(pairs),
    )
    return SparseVector(idx, w)


def cosine(a: SparseVector, b: SparseVector) -> float:
    sa = float(np.dot(a.weights, a.weights))
    sb = float(np.dot(b.weights, b.weights))
    if sa == 0.0 or sb == 0.0:
        return 0.0
    _, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
    dot = float(np.dot(a.weights[ia], b.weights[ib]))
    # sqrt(sa * sb) rather than |a||b| so cosine(v, v) is exactly 1
    return min(1.0, max(0.0, dot / math.sqrt(sa * sb)))


def publication_text(publication) -> str:
    return " ".join([publication.title, publication.body, *publication.tags])


class TfidfCosine(BaseEstimator, TransformerMixin):
    """Fit a TF-IDF vocabulary on raw texts and turn texts into sparse vectors.

    ``transform`` returns a list of :class:`SparseVector`; use
    :meth:`similarity` for a pairwise cosine between two texts.
    """

    def fit(self, texts, y=None):
        self.vocabulary_ = fit_vocabulary([tokenize(t) for t in texts])
        return self

    def transform(self, texts):
        check_is_fitted(self, "vocabulary_")
        return [vectorize(tokenize(t), self.vocabulary_) for t in texts]

    def similarity(self, a: str, b: str) -> float:
        va, vb = self.transform([a, b])
        return cosine(va, vb)
