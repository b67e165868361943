"""Retriever-reader question answering over scholarly corpora."""

from .corpus import CorpusStore, Document, FaqEntry, Passage, load_corpus, load_faq, parse_document, split_passages
from .reader import AnswerCandidate, PipelineResult, ReaderConfig, answer_pipeline
from .retriever import Bm25Index, Bm25Params, Bm25Retriever, ScoredPassage, bm25_score, build_index, retrieve
from .topics import LdaConfig, LdaTopicModel, TopicModel, fit_lda, top_words, topics_for_document

__version__ = "0.1.0"

__all__ = [
    "AnswerCandidate",
    "Bm25Index",
    "Bm25Params",
    "Bm25Retriever",
    "CorpusStore",
    "Document",
    "FaqEntry",
    "LdaConfig",
    "LdaTopicModel",
    "Passage",
    "PipelineResult",
    "ReaderConfig",
    "ScoredPassage",
    "TopicModel",
    "answer_pipeline",
    "bm25_score",
    "build_index",
    "fit_lda",
    "load_corpus",
    "load_faq",
    "parse_document",
    "retrieve",
    "split_passages",
    "top_words",
    "topics_for_document",
]
