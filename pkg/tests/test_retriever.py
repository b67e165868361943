import math
import random
from collections import Counter

import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from scholarqa.corpus import CorpusStore, Document, Passage
from scholarqa.errors import EmptyCorpus, UnknownPassage
from scholarqa.retriever import (
    Bm25Index,
    Bm25Params,
    Bm25Retriever,
    bm25_score,
    build_index,
    retrieve,
    write_trec_run,
)
from scholarqa.text import tokenize

from conftest import make_store


def store_from_texts(texts: list[str]) -> CorpusStore:
    docs = [Document(id=f"d{i}", abstract=f"doc {i}") for i in range(len(texts))]
    passages = [
        Passage(passage_id=f"d{i}#0", doc_id=f"d{i}", text=t, char_offset_in_section=0, section_name="a")
        for i, t in enumerate(texts)
    ]
    return CorpusStore(docs, passages)


def reference_bm25(texts: dict[str, str], query: str, k1=1.2, b=0.75) -> dict[str, float]:
    """Independent per-(term, passage) computation, straight from the formula."""
    tfs = {pid: Counter(tokenize(text)) for pid, text in texts.items()}
    lengths = {pid: sum(tf.values()) for pid, tf in tfs.items()}
    n = len(texts)
    avgdl = sum(lengths.values()) / n
    scores = {}
    for pid in texts:
        total = 0.0
        for term in set(tokenize(query)):
            df = sum(1 for other in tfs.values() if term in other)
            tf = tfs[pid][term]
            if tf == 0:
                continue
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            total += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * lengths[pid] / avgdl))
        scores[pid] = total
    return scores


class TestIndex:
    def test_single_passage_counts(self):
        index = build_index(store_from_texts(["a b a"]))
        assert index.postings["a"] == [("d0#0", 2)]
        assert index.postings["b"] == [("d0#0", 1)]
        assert index.N == 1
        assert index.avgdl == 3

    def test_document_frequency_counts_distinct_passages(self):
        index = build_index(store_from_texts(["shared one", "shared two"]))
        assert index.doc_freq["shared"] == 2
        assert index.doc_freq["one"] == 1

    def test_punctuation_only_passage_has_zero_length(self):
        index = build_index(store_from_texts(["real words here", "..!?"]))
        assert index.passage_lengths["d1#0"] == 0
        assert all("d1#0" not in dict(plist) for plist in index.postings.values())

    def test_invariants(self):
        index = build_index(store_from_texts(["alpha beta", "beta gamma delta", "alpha"]))
        for term, plist in index.postings.items():
            assert index.doc_freq[term] == len({pid for pid, _ in plist})
            assert plist == sorted(plist)
        assert abs(sum(index.passage_lengths.values()) / index.N - index.avgdl) < 1e-9

    def test_empty_store_rejected(self):
        with pytest.raises(EmptyCorpus):
            build_index(CorpusStore([], []))

    def test_roundtrip(self, tmp_path):
        index = build_index(store_from_texts(["alpha beta", "beta gamma"]))
        index.save(tmp_path / "index.json")
        assert Bm25Index.load(tmp_path / "index.json") == index

    def test_params_validated(self):
        with pytest.raises(ValueError):
            Bm25Params(k1=0)
        with pytest.raises(ValueError):
            Bm25Params(b=1.5)


class TestBm25Score:
    def test_absent_terms_contribute_zero(self):
        index = build_index(store_from_texts(["alpha beta"]))
        assert bm25_score(["missing"], "d0#0", index) == 0.0
        assert bm25_score(["missing", "also"], "d0#0", index) == 0.0

    def test_single_passage_idf(self):
        index = build_index(store_from_texts(["origin"]))
        score = bm25_score(["origin"], "d0#0", index)
        # |p| == avgdl collapses the length norm, leaving exactly the idf
        assert score == pytest.approx(math.log(4 / 3), abs=1e-12)
        assert score == pytest.approx(0.28768, abs=1e-5)

    def test_duplicate_query_terms_count_once(self):
        index = build_index(store_from_texts(["origin story"]))
        assert bm25_score(["origin", "origin"], "d0#0", index) == bm25_score(
            ["origin"], "d0#0", index
        )

    def test_unknown_passage(self):
        index = build_index(store_from_texts(["alpha"]))
        with pytest.raises(UnknownPassage):
            bm25_score(["alpha"], "nope#0", index)

    def test_matches_reference_on_toy_corpus(self):
        texts = {
            "d0#0": "virus spread in the city",
            "d1#0": "the city closed its market",
            "d2#0": "virus virus mutation study",
        }
        index = build_index(store_from_texts(list(texts.values())))
        for query in ["virus city", "the market study", "mutation", "absent words"]:
            expected = reference_bm25(texts, query)
            for pid, want in expected.items():
                got = bm25_score(tokenize(query), pid, index)
                assert got == pytest.approx(want, abs=1e-9), (query, pid)


class TestRetrieve:
    def test_empty_query(self):
        index = build_index(store_from_texts(["alpha beta"]))
        assert retrieve(index, "", 5) == []

    def test_single_hit_rank_one(self):
        index = build_index(store_from_texts(["alpha beta"]))
        (hit,) = retrieve(index, "beta", 5)
        assert hit.passage_id == "d0#0"
        assert hit.rank == 1
        assert hit.score > 0

    def test_tie_broken_by_passage_id(self):
        index = build_index(store_from_texts(["same words", "same words"]))
        hits = retrieve(index, "same", 5)
        assert [h.passage_id for h in hits] == ["d0#0", "d1#0"]
        assert hits[0].score == hits[1].score

    def test_no_overlap_returns_empty(self):
        index = build_index(store_from_texts(["alpha beta"]))
        assert retrieve(index, "missing terms", 3) == []

    def test_scores_nonincreasing_and_ranks_dense(self):
        index = build_index(store_from_texts(["virus", "virus virus", "virus city", "city"]))
        hits = retrieve(index, "virus city", 10)
        assert [h.rank for h in hits] == list(range(1, len(hits) + 1))
        assert all(a.score >= b.score for a, b in zip(hits, hits[1:]))

    def test_disjoint_document_leaves_hit_set_unchanged(self):
        base = ["virus spread fast", "city market closed"]
        with_extra = base + ["unrelated botanical flora"]
        hits_before = retrieve(build_index(store_from_texts(base)), "virus", 10)
        hits_after = retrieve(build_index(store_from_texts(with_extra)), "virus", 10)
        assert {h.passage_id for h in hits_before} == {h.passage_id for h in hits_after}

    def test_tf_monotonicity(self):
        # same lengths everywhere; one passage swaps a filler for the query term
        low = store_from_texts(["virus filler filler", "other words here"])
        high = store_from_texts(["virus virus filler", "other words here"])
        score_low = retrieve(build_index(low), "virus", 5)[0].score
        score_high = retrieve(build_index(high), "virus", 5)[0].score
        assert score_high >= score_low

    def test_determinism(self):
        texts = ["virus city market", "city market", "virus mutation", "market stall"]
        index = build_index(store_from_texts(texts))
        assert retrieve(index, "virus market", 4) == retrieve(index, "virus market", 4)

    def test_brute_force_equivalence_random_corpora(self):
        rng = random.Random(20240)
        vocab = [f"w{i}" for i in range(40)]
        for _ in range(10):
            n = rng.randint(1, 50)
            texts = [
                " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 30))) for _ in range(n)
            ]
            store = store_from_texts(texts)
            index = build_index(store)
            query = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 5)))
            exhaustive = sorted(
                (
                    (pid, bm25_score(tokenize(query), pid, index))
                    for pid in index.passage_lengths
                ),
                key=lambda item: (-item[1], item[0]),
            )
            exhaustive = [(pid, s) for pid, s in exhaustive if s > 0][:10]
            got = [(h.passage_id, h.score) for h in retrieve(index, query, 10)]
            assert [p for p, _ in got] == [p for p, _ in exhaustive]
            for (_, a), (_, b) in zip(got, exhaustive):
                assert a == pytest.approx(b, abs=1e-9)


class TestEstimator:
    def test_fit_then_retrieve(self, mini_store):
        retriever = Bm25Retriever().fit(mini_store)
        hits = retriever.retrieve("Wuhan pneumonia cluster", top_n=2)
        assert hits[0].passage_id == "d1#0"

    def test_requires_fit(self):
        with pytest.raises(NotFittedError):
            Bm25Retriever().retrieve("anything")

    def test_get_params_and_clone(self):
        retriever = Bm25Retriever(k1=1.5, b=0.6)
        assert retriever.get_params() == {"k1": 1.5, "b": 0.6}
        copied = clone(retriever)
        assert copied.get_params() == retriever.get_params()

    def test_score_passage_matches_function(self, mini_store):
        retriever = Bm25Retriever().fit(mini_store)
        direct = bm25_score(tokenize("unusual pneumonia"), "d1#0", retriever.index_)
        assert retriever.score_passage("unusual pneumonia", "d1#0") == direct


def test_write_trec_run(tmp_path, mini_index):
    run = {"q1": retrieve(mini_index, "pneumonia cluster", 5)}
    out = tmp_path / "run.txt"
    write_trec_run(out, run)
    lines = out.read_text().strip().splitlines()
    assert lines
    query_id, passage_id, rank, score = lines[0].split()
    assert query_id == "q1"
    assert passage_id == "d1#0"
    assert rank == "1"
    float(score)
