"""Topic model over the corpus, fitted with collapsed Gibbs sampling.

The sampler integrates out the topic-word and document-topic distributions
and resamples each token's topic assignment from

    P(z_i = k | rest) ∝ (n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)

where the counts exclude token i.  The chain is sequential and driven by a
single seeded RNG, so a given (corpus, config) pair always produces
bitwise-identical phi and theta.  After the final sweep the distributions
are read off the smoothed counts:

    phi[k][w]   = (n_kw + beta) / (n_k + V * beta)
    theta[d][k] = (n_dk + alpha) / (n_d + K * alpha)
"""

import json
import random
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import CorpusStore, Document
from .errors import CorpusTooSmall, UnknownDocument
from .text import STOPWORDS, tokenize

_MODEL_FORMAT = "scholarqa-topic-model"
_MODEL_VERSION = 1

MIN_TERM_FREQUENCY = 3


@dataclass
class LdaConfig:
    n_topics: int = 20
    alpha: float = 0.1
    beta: float = 0.01
    iterations: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 2:
            raise ValueError("n_topics must be >= 2")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be an unsigned integer")


@dataclass
class TopicModel:
    vocabulary: list[str]
    doc_ids: list[str]
    phi: np.ndarray  # n_topics x V
    theta: np.ndarray  # D x n_topics
    config: LdaConfig

    def save(self, path: str | Path) -> None:
        payload = {
            "format": _MODEL_FORMAT,
            "version": _MODEL_VERSION,
            "config": asdict(self.config),
            "vocabulary": self.vocabulary,
            "doc_ids": self.doc_ids,
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
        }
        Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TopicModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != _MODEL_FORMAT or payload.get("version") != _MODEL_VERSION:
            raise ValueError("not a recognized topic model file")
        return cls(
            vocabulary=payload["vocabulary"],
            doc_ids=payload["doc_ids"],
            phi=np.array(payload["phi"], dtype=float),
            theta=np.array(payload["theta"], dtype=float),
            config=LdaConfig(**payload["config"]),
        )


def document_tokens(doc: Document) -> list[str]:
    """Token stream for topic modelling: title, abstract and section text."""
    parts = [doc.title, doc.abstract] + [text for _, text in doc.sections]
    return [t for t in tokenize(" ".join(parts)) if t not in STOPWORDS]


def _build_streams(texts_by_doc: list[list[str]]) -> tuple[list[str], list[list[int]]]:
    frequency = Counter(t for tokens in texts_by_doc for t in tokens)
    vocabulary = sorted(t for t, n in frequency.items() if n >= MIN_TERM_FREQUENCY)
    word_ids = {t: i for i, t in enumerate(vocabulary)}
    streams = [[word_ids[t] for t in tokens if t in word_ids] for tokens in texts_by_doc]
    return vocabulary, streams


def fit_lda(
    store: CorpusStore | None,
    cfg: LdaConfig | None = None,
    texts: list[str] | None = None,
    sweep_callback: Callable[[list[list[int]], list[list[int]], list[int]], None] | None = None,
) -> TopicModel:
    """Fit the topic model on the store's documents.

    ``texts`` switches the training corpus to caller-supplied strings (one
    pseudo-document each, ids "t0", "t1", ...) while keeping the same
    pipeline; the default is one document per store entry.
    ``sweep_callback(n_dk, n_kw, n_k)`` runs after every sweep, which is
    how the count-conservation checks observe the chain.
    """
    cfg = cfg or LdaConfig()
    if texts is not None:
        doc_ids = [f"t{i}" for i in range(len(texts))]
        token_lists = [[t for t in tokenize(text) if t not in STOPWORDS] for text in texts]
    elif store is not None:
        doc_ids = [doc.id for doc in store.documents]
        token_lists = [document_tokens(doc) for doc in store.documents]
    else:
        raise ValueError("need a corpus store or a list of texts")
    vocabulary, streams = _build_streams(token_lists)
    usable = sum(1 for s in streams if s)
    if usable < cfg.n_topics:
        raise CorpusTooSmall(
            f"{usable} documents with usable tokens, need at least {cfg.n_topics}"
        )

    n_topics, v_size = cfg.n_topics, len(vocabulary)
    alpha, beta = cfg.alpha, cfg.beta
    rng = random.Random(cfg.seed)

    n_dk = [[0] * n_topics for _ in streams]
    n_kw = [[0] * v_size for _ in range(n_topics)]
    n_k = [0] * n_topics
    assignments = []
    for d, stream in enumerate(streams):
        z_doc = []
        for w in stream:
            k = rng.randrange(n_topics)
            z_doc.append(k)
            n_dk[d][k] += 1
            n_kw[k][w] += 1
            n_k[k] += 1
        assignments.append(z_doc)

    v_beta = v_size * beta
    for _ in range(cfg.iterations):
        for d, stream in enumerate(streams):
            doc_counts = n_dk[d]
            z_doc = assignments[d]
            for i, w in enumerate(stream):
                k = z_doc[i]
                doc_counts[k] -= 1
                n_kw[k][w] -= 1
                n_k[k] -= 1

                total = 0.0
                weights = []
                for t in range(n_topics):
                    weight = (doc_counts[t] + alpha) * (n_kw[t][w] + beta) / (n_k[t] + v_beta)
                    total += weight
                    weights.append(weight)
                draw = rng.random() * total
                acc = 0.0
                k = n_topics - 1
                for t, weight in enumerate(weights):
                    acc += weight
                    if draw < acc:
                        k = t
                        break

                z_doc[i] = k
                doc_counts[k] += 1
                n_kw[k][w] += 1
                n_k[k] += 1
        if sweep_callback is not None:
            sweep_callback(n_dk, n_kw, n_k)

    phi = np.empty((n_topics, v_size))
    for k in range(n_topics):
        denom = n_k[k] + v_beta
        for w in range(v_size):
            phi[k, w] = (n_kw[k][w] + beta) / denom
    theta = np.empty((len(streams), n_topics))
    k_alpha = n_topics * alpha
    for d, stream in enumerate(streams):
        denom = len(stream) + k_alpha
        for k in range(n_topics):
            theta[d, k] = (n_dk[d][k] + alpha) / denom
    return TopicModel(
        vocabulary=vocabulary, doc_ids=doc_ids, phi=phi, theta=theta, config=cfg
    )


def top_words(model: TopicModel, topic: int, m: int) -> list[str]:
    """The m highest-probability terms of a topic; ties go alphabetically."""
    if not 0 <= topic < model.phi.shape[0]:
        raise IndexError(f"topic {topic} out of range")
    if not 1 <= m <= len(model.vocabulary):
        raise IndexError(f"m={m} out of range for vocabulary of {len(model.vocabulary)}")
    row = model.phi[topic]
    ranked = sorted(zip(model.vocabulary, row), key=lambda item: (-item[1], item[0]))
    return [term for term, _ in ranked[:m]]


def topics_for_document(
    model: TopicModel, doc_id: str, m: int, words_per_topic: int = 3
) -> list[tuple[int, float, list[str]]]:
    """The document's m heaviest topics with their weights and keywords."""
    try:
        d = model.doc_ids.index(doc_id)
    except ValueError:
        raise UnknownDocument(doc_id) from None
    if not 1 <= m <= model.phi.shape[0]:
        raise IndexError(f"m={m} out of range for {model.phi.shape[0]} topics")
    row = model.theta[d]
    ranked = sorted(range(len(row)), key=lambda k: (-row[k], k))[:m]
    return [(k, float(row[k]), top_words(model, k, words_per_topic)) for k in ranked]


class LdaTopicModel(BaseEstimator):
    """Estimator-style wrapper around `fit_lda`.

    Fitted attributes follow the usual convention: ``phi_``, ``theta_``,
    ``vocabulary_`` and the underlying ``model_``.
    """

    def __init__(
        self,
        n_topics: int = 20,
        alpha: float = 0.1,
        beta: float = 0.01,
        iterations: int = 200,
        seed: int = 0,
    ):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.iterations = iterations
        self.seed = seed

    def fit(self, store: CorpusStore, y=None) -> "LdaTopicModel":
        self.model_ = fit_lda(
            store,
            LdaConfig(
                n_topics=self.n_topics,
                alpha=self.alpha,
                beta=self.beta,
                iterations=self.iterations,
                seed=self.seed,
            ),
        )
        self.phi_ = self.model_.phi
        self.theta_ = self.model_.theta
        self.vocabulary_ = self.model_.vocabulary
        return self

    def top_words(self, topic: int, m: int = 10) -> list[str]:
        check_is_fitted(self, "model_")
        return top_words(self.model_, topic, m)

    def topics_for_document(self, doc_id: str, m: int = 3, words_per_topic: int = 3):
        check_is_fitted(self, "model_")
        return topics_for_document(self.model_, doc_id, m, words_per_topic)
