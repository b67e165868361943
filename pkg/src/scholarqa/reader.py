"""Answer extraction from retrieved passages.

Two interchangeable readers share one output contract:

* the builtin reader scores candidate spans by how well their sentence
  covers the question's content terms (idf-weighted), fused with the
  passage's normalized retrieval score;
* the external reader forwards passages to an HTTP service speaking a
  strict JSON protocol and validates every span it returns.

Both attach a sentence-window context, deduplicate candidates by
normalized answer text and report how many distinct documents support
each surviving answer.
"""

import json
import math
import time
from dataclasses import dataclass, field

import requests

from .corpus import CorpusStore
from .errors import ProtocolViolation, ReaderUnreachable
from .retriever import Bm25Index, ScoredPassage, retrieve
from .text import STOPWORDS, normalize_answer, sentence_spans, tokenize, tokenize_with_spans

BUILTIN = "builtin"
EXTERNAL = "external"

DEFAULT_SHORTLIST = 10


@dataclass
class ReaderConfig:
    mode: str = BUILTIN
    endpoint: str | None = None
    max_span_tokens: int = 12
    retriever_weight: float = 0.3
    length_penalty: float = 0.05
    timeout: float = 30.0
    fallback_to_builtin: bool = False

    def __post_init__(self):
        if self.mode not in (BUILTIN, EXTERNAL):
            raise ValueError(f"unknown reader mode: {self.mode!r}")
        if self.max_span_tokens < 1:
            raise ValueError("max_span_tokens must be >= 1")
        if not 0.0 <= self.retriever_weight <= 1.0:
            raise ValueError("retriever_weight must be in [0, 1]")
        if self.length_penalty < 0.0:
            raise ValueError("length_penalty must be >= 0")


@dataclass
class AnswerCandidate:
    text: str
    score: float
    passage_id: str
    doc_id: str
    start: int
    end: int
    context: str
    context_offset: int  # offset of the answer text within context
    support_count: int = 1


@dataclass
class PipelineResult:
    answers: list["AnswerCandidate"]
    hits: list[ScoredPassage]
    retrieve_seconds: float
    read_seconds: float

    @property
    def total_seconds(self) -> float:
        return self.retrieve_seconds + self.read_seconds


@dataclass
class _RawSpan:
    passage_id: str
    doc_id: str
    start: int
    end: int
    text: str
    score: float
    sentence_index: int
    sentences: list[tuple[int, int]] = field(repr=False, default_factory=list)
    passage_text: str = field(repr=False, default="")
    support_count: int = 1


def _question_terms(question: str) -> list[str]:
    return [t for t in dict.fromkeys(tokenize(question)) if t not in STOPWORDS]


def _attach_context(span: _RawSpan) -> tuple[str, int]:
    i = span.sentence_index
    lo = span.sentences[max(0, i - 1)][0]
    hi = span.sentences[min(len(span.sentences) - 1, i + 1)][1]
    return span.passage_text[lo:hi], span.start - lo


def _support(merged: list) -> int:
    # Distinct documents among the merged items; never lower than a support
    # count already accumulated by an earlier dedup pass.
    return max(len({m.doc_id for m in merged}), max(m.support_count for m in merged))


def _dedupe(spans: list[_RawSpan], top_k: int) -> list[AnswerCandidate]:
    """Merge spans with the same normalized text, keeping the best instance."""
    order = sorted(
        spans, key=lambda s: (-s.score, s.doc_id, s.passage_id, s.start, s.end)
    )
    kept: dict[str, _RawSpan] = {}
    merged: dict[str, list[_RawSpan]] = {}
    for span in order:
        key = " ".join(normalize_answer(span.text))
        kept.setdefault(key, span)
        merged.setdefault(key, []).append(span)
    winners = sorted(
        kept.items(),
        key=lambda item: (-item[1].score, item[1].doc_id, item[1].start, item[1].passage_id, item[1].end),
    )[:top_k]
    candidates = []
    for key, span in winners:
        context, offset = _attach_context(span)
        assert span.passage_text[span.start : span.end] == span.text
        assert context[offset : offset + len(span.text)] == span.text
        candidates.append(
            AnswerCandidate(
                text=span.text,
                score=span.score,
                passage_id=span.passage_id,
                doc_id=span.doc_id,
                start=span.start,
                end=span.end,
                context=context,
                context_offset=offset,
                support_count=_support(merged[key]),
            )
        )
    return candidates


def dedupe_answers(candidates: list[AnswerCandidate], top_k: int | None = None) -> list[AnswerCandidate]:
    """Deduplicate finished candidates by normalized answer text.

    Idempotent: applying it to its own output changes nothing.
    """
    order = sorted(
        candidates, key=lambda c: (-c.score, c.doc_id, c.passage_id, c.start, c.end)
    )
    kept: dict[str, AnswerCandidate] = {}
    merged: dict[str, list[AnswerCandidate]] = {}
    for cand in order:
        key = " ".join(normalize_answer(cand.text))
        kept.setdefault(key, cand)
        merged.setdefault(key, []).append(cand)
    winners = sorted(
        kept.items(),
        key=lambda item: (-item[1].score, item[1].doc_id, item[1].start, item[1].passage_id, item[1].end),
    )
    if top_k is not None:
        winners = winners[:top_k]
    return [
        AnswerCandidate(
            text=c.text,
            score=c.score,
            passage_id=c.passage_id,
            doc_id=c.doc_id,
            start=c.start,
            end=c.end,
            context=c.context,
            context_offset=c.context_offset,
            support_count=_support(merged[key]),
        )
        for key, c in winners
    ]


def extract_answers_builtin(
    question: str,
    hits: list[ScoredPassage],
    cfg: ReaderConfig,
    top_k: int,
    index: Bm25Index,
    store: CorpusStore,
) -> list[AnswerCandidate]:
    """Deterministic extractive reader.

    For every hit passage: score each sentence by the idf-weighted share
    of question content terms it covers, then propose every token window
    of 1..max_span_tokens that contains no question term (whole sentence
    as fallback).  A span's score fuses the passage's normalized retrieval
    score with its sentence score, discounted gently for length.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not hits:
        return []
    terms = _question_terms(question)
    term_set = set(terms)
    idf_total = sum(index.idf(t) for t in terms)
    max_hit_score = max(h.score for h in hits)
    alpha = cfg.retriever_weight
    spans: list[_RawSpan] = []

    for hit in hits:
        passage = store.passage(hit.passage_id)
        norm_retr = hit.score / max_hit_score if max_hit_score > 0 else 0.0
        sentences = sentence_spans(passage.text)
        for sent_idx, (s_start, s_end) in enumerate(sentences):
            sentence = passage.text[s_start:s_end]
            sent_tokens = tokenize_with_spans(sentence)
            if idf_total > 0:
                present = {t for t, _, _ in sent_tokens} & term_set
                sentence_score = sum(index.idf(t) for t in present) / idf_total
            else:
                sentence_score = 0.0

            def span_score(n_tokens: int) -> float:
                penalty = math.exp(-cfg.length_penalty * max(0, n_tokens - 3))
                return alpha * norm_retr + (1 - alpha) * sentence_score * penalty

            proposed = False
            run_start = 0
            for pos in range(len(sent_tokens) + 1):
                boundary = pos == len(sent_tokens) or sent_tokens[pos][0] in term_set
                if not boundary:
                    continue
                for i in range(run_start, pos):
                    for j in range(i, min(i + cfg.max_span_tokens, pos)):
                        char_start = s_start + sent_tokens[i][1]
                        char_end = s_start + sent_tokens[j][2]
                        spans.append(
                            _RawSpan(
                                passage_id=passage.passage_id,
                                doc_id=passage.doc_id,
                                start=char_start,
                                end=char_end,
                                text=passage.text[char_start:char_end],
                                score=span_score(j - i + 1),
                                sentence_index=sent_idx,
                                sentences=sentences,
                                passage_text=passage.text,
                            )
                        )
                        proposed = True
                run_start = pos + 1
            if not proposed:
                spans.append(
                    _RawSpan(
                        passage_id=passage.passage_id,
                        doc_id=passage.doc_id,
                        start=s_start,
                        end=s_end,
                        text=sentence,
                        score=span_score(len(sent_tokens)),
                        sentence_index=sent_idx,
                        sentences=sentences,
                        passage_text=passage.text,
                    )
                )
    return _dedupe(spans, top_k)


def encode_read_request(question: str, top_k: int, passages: list[tuple[str, str]]) -> bytes:
    """Serialize the wire request; key order and separators are fixed."""
    payload = {
        "question": question,
        "top_k": top_k,
        "passages": [{"id": pid, "text": text} for pid, text in passages],
    }
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def parse_read_response(body: bytes | str, passages: dict[str, str]) -> list[dict]:
    """Validate a reader response body against the wire protocol.

    Checks: top-level object with an "answers" list; every answer names a
    known passage, has integer offsets in range with start < end, text
    equal to the passage slice, and a score in [0, 1].
    """
    try:
        payload = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolViolation(f"response body is not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or not isinstance(payload.get("answers"), list):
        raise ProtocolViolation('response must be an object with an "answers" list')
    validated = []
    for answer in payload["answers"]:
        if not isinstance(answer, dict):
            raise ProtocolViolation("answers entries must be objects")
        pid = answer.get("passage_id")
        if pid not in passages:
            raise ProtocolViolation(f"unknown passage_id {pid!r}")
        start, end = answer.get("start"), answer.get("end")
        if not isinstance(start, int) or not isinstance(end, int) or isinstance(start, bool) or isinstance(end, bool):
            raise ProtocolViolation("start and end must be integers")
        text = passages[pid]
        if start < 0 or end > len(text) or start >= end:
            raise ProtocolViolation(f"offsets [{start}, {end}) out of range for passage {pid!r}")
        if answer.get("text") != text[start:end]:
            raise ProtocolViolation("answer text does not match the passage slice")
        score = answer.get("score")
        if isinstance(score, bool) or not isinstance(score, (int, float)) or not 0.0 <= score <= 1.0:
            raise ProtocolViolation(f"score {score!r} out of [0, 1]")
        validated.append(
            {"passage_id": pid, "start": start, "end": end, "text": answer["text"], "score": float(score)}
        )
    return validated


def extract_answers_external(
    question: str,
    hits: list[ScoredPassage],
    cfg: ReaderConfig,
    top_k: int,
    index: Bm25Index,
    store: CorpusStore,
) -> list[AnswerCandidate]:
    """Delegate span extraction to the configured external reader service."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not cfg.endpoint:
        raise ValueError("external reader mode requires an endpoint")
    if not hits:
        return []
    passages = [(h.passage_id, store.passage(h.passage_id).text) for h in hits]
    body = encode_read_request(question, top_k, passages)
    url = cfg.endpoint.rstrip("/") + "/read"
    try:
        response = requests.post(
            url, data=body, headers={"Content-Type": "application/json"}, timeout=cfg.timeout
        )
    except (requests.ConnectionError, requests.Timeout) as exc:
        raise ReaderUnreachable(f"{url}: {exc}") from None
    if response.status_code != 200:
        raise ProtocolViolation(f"reader answered HTTP {response.status_code}")
    answers = parse_read_response(response.content, dict(passages))

    spans = []
    for answer in answers:
        passage = store.passage(answer["passage_id"])
        sentences = sentence_spans(passage.text)
        sent_idx = _sentence_containing(sentences, answer["start"])
        spans.append(
            _RawSpan(
                passage_id=passage.passage_id,
                doc_id=passage.doc_id,
                start=answer["start"],
                end=answer["end"],
                text=answer["text"],
                score=answer["score"],
                sentence_index=sent_idx,
                sentences=sentences,
                passage_text=passage.text,
            )
        )
    return _dedupe(spans, top_k)


def _sentence_containing(sentences: list[tuple[int, int]], offset: int) -> int:
    for i, (start, end) in enumerate(sentences):
        if start <= offset < end:
            return i
    return max(0, len(sentences) - 1)


def answer_pipeline(
    question: str,
    index: Bm25Index,
    store: CorpusStore,
    cfg: ReaderConfig,
    top_k: int = 10,
    shortlist: int = DEFAULT_SHORTLIST,
) -> PipelineResult:
    """Retrieve a shortlist, then run the configured reader over it."""
    started = time.perf_counter()
    hits = retrieve(index, question, shortlist)
    retrieved_at = time.perf_counter()
    if cfg.mode == EXTERNAL:
        try:
            answers = extract_answers_external(question, hits, cfg, top_k, index, store)
        except (ReaderUnreachable, ProtocolViolation):
            if not cfg.fallback_to_builtin:
                raise
            answers = extract_answers_builtin(question, hits, cfg, top_k, index, store)
    else:
        answers = extract_answers_builtin(question, hits, cfg, top_k, index, store)
    finished = time.perf_counter()
    return PipelineResult(
        answers=answers,
        hits=hits,
        retrieve_seconds=retrieved_at - started,
        read_seconds=finished - retrieved_at,
    )
