"""Sparse lexical retrieval over passages: inverted index plus BM25 ranking.

Scoring uses the Lucene-flavoured idf, ``ln(1 + (N - df + 0.5)/(df + 0.5))``,
which is strictly positive for every indexed term, so any passage containing
at least one query term scores above zero.  `retrieve` and `bm25_score`
share one contribution helper and therefore agree bit-for-bit with an
exhaustive scan, ties included.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import CorpusStore
from .errors import EmptyCorpus, UnknownPassage
from .text import tokenize

_INDEX_VERSION = 1


@dataclass
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


@dataclass
class ScoredPassage:
    passage_id: str
    score: float
    rank: int


@dataclass
class Bm25Index:
    """Inverted index with the corpus statistics BM25 needs.

    postings maps term -> [(passage_id, tf), ...] sorted by passage_id;
    doc_freq mirrors the postings lengths; avgdl is the mean passage length.
    """

    postings: dict[str, list[tuple[str, int]]]
    doc_freq: dict[str, int]
    passage_lengths: dict[str, int]
    N: int
    avgdl: float
    params: Bm25Params = field(default_factory=Bm25Params)

    def idf(self, term: str) -> float:
        df = self.doc_freq.get(term, 0)
        return math.log(1.0 + (self.N - df + 0.5) / (df + 0.5))

    def save(self, path: str | Path) -> None:
        payload = {
            "version": _INDEX_VERSION,
            "params": {"k1": self.params.k1, "b": self.params.b},
            "N": self.N,
            "avgdl": self.avgdl,
            "passage_lengths": self.passage_lengths,
            "postings": {t: [[pid, tf] for pid, tf in plist] for t, plist in self.postings.items()},
        }
        Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Bm25Index":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("version") != _INDEX_VERSION:
            raise ValueError(f"unsupported index version: {payload.get('version')!r}")
        postings = {t: [(pid, tf) for pid, tf in plist] for t, plist in payload["postings"].items()}
        return cls(
            postings=postings,
            doc_freq={t: len(plist) for t, plist in postings.items()},
            passage_lengths=payload["passage_lengths"],
            N=payload["N"],
            avgdl=payload["avgdl"],
            params=Bm25Params(**payload["params"]),
        )


def build_index(store: CorpusStore, params: Bm25Params | None = None) -> Bm25Index:
    """Build the inverted index over every passage in the store."""
    if not store.passages:
        raise EmptyCorpus("cannot index a store with no passages")
    params = params or Bm25Params()
    postings: dict[str, dict[str, int]] = {}
    passage_lengths: dict[str, int] = {}
    for passage in store.passages:
        tokens = tokenize(passage.text)
        passage_lengths[passage.passage_id] = len(tokens)
        for token in tokens:
            postings.setdefault(token, {})
            postings[token][passage.passage_id] = postings[token].get(passage.passage_id, 0) + 1
    sorted_postings = {
        term: sorted(by_passage.items()) for term, by_passage in sorted(postings.items())
    }
    n = len(passage_lengths)
    return Bm25Index(
        postings=sorted_postings,
        doc_freq={term: len(plist) for term, plist in sorted_postings.items()},
        passage_lengths=passage_lengths,
        N=n,
        avgdl=sum(passage_lengths.values()) / n,
        params=params,
    )


def _contribution(index: Bm25Index, term: str, tf: int, length: int) -> float:
    k1, b = index.params.k1, index.params.b
    norm = tf + k1 * (1.0 - b + b * length / index.avgdl)
    return index.idf(term) * (tf * (k1 + 1.0)) / norm


def bm25_score(query_terms: list[str], passage_id: str, index: Bm25Index) -> float:
    """Score one passage against the query's distinct terms.

    Terms absent from the corpus or from the passage contribute zero.
    """
    if passage_id not in index.passage_lengths:
        raise UnknownPassage(passage_id)
    length = index.passage_lengths[passage_id]
    score = 0.0
    for term in dict.fromkeys(query_terms):
        plist = index.postings.get(term)
        if plist is None:
            continue
        tf = _postings_tf(plist, passage_id)
        if tf:
            score += _contribution(index, term, tf, length)
    return score


def _postings_tf(plist: list[tuple[str, int]], passage_id: str) -> int:
    lo, hi = 0, len(plist)
    while lo < hi:
        mid = (lo + hi) // 2
        if plist[mid][0] < passage_id:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(plist) and plist[lo][0] == passage_id:
        return plist[lo][1]
    return 0


def retrieve(index: Bm25Index, query: str, top_n: int = 10) -> list[ScoredPassage]:
    """Rank the top_n passages for a query.

    Only passages with score > 0 are returned, sorted by score descending,
    ties broken by ascending passage_id.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    scores: dict[str, float] = {}
    for term in dict.fromkeys(tokenize(query)):
        plist = index.postings.get(term)
        if plist is None:
            continue
        for passage_id, tf in plist:
            contribution = _contribution(index, term, tf, index.passage_lengths[passage_id])
            scores[passage_id] = scores.get(passage_id, 0.0) + contribution
    ranked = sorted(
        ((pid, s) for pid, s in scores.items() if s > 0.0),
        key=lambda item: (-item[1], item[0]),
    )[:top_n]
    return [
        ScoredPassage(passage_id=pid, score=s, rank=i + 1) for i, (pid, s) in enumerate(ranked)
    ]


class Bm25Retriever(BaseEstimator):
    """Estimator-style wrapper: fit an index on a store, then query it.

    >>> retriever = Bm25Retriever().fit(store)
    >>> hits = retriever.retrieve("incubation period", top_n=5)
    """

    def __init__(self, k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b

    def fit(self, store: CorpusStore, y=None) -> "Bm25Retriever":
        self.index_ = build_index(store, Bm25Params(k1=self.k1, b=self.b))
        return self

    def retrieve(self, query: str, top_n: int = 10) -> list[ScoredPassage]:
        check_is_fitted(self, "index_")
        return retrieve(self.index_, query, top_n)

    def score_passage(self, query: str, passage_id: str) -> float:
        check_is_fitted(self, "index_")
        return bm25_score(tokenize(query), passage_id, self.index_)


def write_trec_run(path: str | Path, run: dict[str, list[ScoredPassage]]) -> None:
    """Write ranked results as whitespace-separated run lines.

    Format: ``query_id passage_id rank score`` with one line per hit.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for query_id in run:
            for hit in run[query_id]:
                fh.write(f"{query_id} {hit.passage_id} {hit.rank} {hit.score:.6f}\n")
