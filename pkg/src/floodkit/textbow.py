"""Bag-of-words text pipeline: tokenization with punctuation removal,
deterministic vocabulary construction, and count / tf-idf vectorization.

Classification of the resulting vectors is handled by learn.train_svm;
there is no separate text classifier.
"""

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError
from .texture import FeatureVector

SCHEMES = ("count", "tfidf")


def tokenize(text: str) -> list:
    """Lowercase, split on whitespace, drop every character in a Unicode
    punctuation category, discard empty results."""
    tokens = []
    for raw in text.lower().split():
        cleaned = "".join(c for c in raw if not unicodedata.category(c).startswith("P"))
        if cleaned:
            tokens.append(cleaned)
    return tokens


@dataclass(frozen=True)
class Vocabulary:
    """Ordered unique terms with their document frequencies."""

    terms: tuple
    doc_freq: tuple
    n_docs: int

    def __post_init__(self):
        if len(self.terms) != len(set(self.terms)):
            raise ValueError("vocabulary terms must be unique")
        if len(self.doc_freq) != len(self.terms):
            raise ValueError("doc_freq must align with terms")
        if any(df < 1 or df > self.n_docs for df in self.doc_freq):
            raise ValueError("doc_freq entries must lie in [1, n_docs]")

    def to_document(self) -> dict:
        return {
            "terms": list(self.terms),
            "doc_freq": list(self.doc_freq),
            "n_docs": self.n_docs,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Vocabulary":
        try:
            return cls(tuple(doc["terms"]), tuple(int(x) for x in doc["doc_freq"]), int(doc["n_docs"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed vocabulary document: {exc}") from None


def build_vocab(corpus, max_terms: int, min_doc_freq: int = 1) -> Vocabulary:
    """Terms with document frequency >= min_doc_freq, ranked by df
    descending then lexicographic, truncated to max_terms."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if max_terms < 1:
        raise ValueError(f"max_terms must be >= 1, got {max_terms}")
    df = Counter()
    for doc in corpus:
        df.update(set(doc))
    ranked = sorted(
        (term for term, count in df.items() if count >= min_doc_freq),
        key=lambda t: (-df[t], t),
    )[:max_terms]
    return Vocabulary(tuple(ranked), tuple(df[t] for t in ranked), len(corpus))


def vectorize(tokens, v: Vocabulary, scheme: str = "count") -> FeatureVector:
    """count: raw term counts; tfidf: count * ln((1+n_docs)/(1+doc_freq)),
    no further normalization.  Out-of-vocabulary tokens are ignored."""
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    index = {t: i for i, t in enumerate(v.terms)}
    values = np.zeros(len(v.terms))
    for tok in tokens:
        i = index.get(tok)
        if i is not None:
            values[i] += 1.0
    if scheme == "tfidf":
        idf = np.array([math.log((1 + v.n_docs) / (1 + df)) for df in v.doc_freq])
        values *= idf
    return FeatureVector(v.terms, values)
