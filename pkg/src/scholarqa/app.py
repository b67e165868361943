"""REST service binding the store, index, readers and topic model together.

All shared state (store, index, topic model) is immutable after startup,
so request handling needs no locks; repeating a request returns an
identical body except for the timing figures.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .corpus import CorpusStore, FaqEntry, load_faq
from .errors import ProtocolViolation, ReaderUnreachable, UnknownDocument
from .reader import BUILTIN, EXTERNAL, ReaderConfig, answer_pipeline
from .retriever import Bm25Index
from .topics import TopicModel, top_words, topics_for_document

CONFIG_ENV_VAR = "QAS_CONFIG"


@dataclass
class AppConfig:
    store_path: str
    index_path: str
    faq_path: str | None = None
    topic_model_path: str | None = None
    reader: ReaderConfig = field(default_factory=ReaderConfig)
    host: str = "127.0.0.1"
    port: int = 8000
    shortlist: int = 10
    default_top_k: int = 10
    timeout_seconds: float = 30.0
    cors_origins: list[str] = field(default_factory=lambda: ["*"])

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port {self.port} out of range")
        if self.shortlist < 1 or self.default_top_k < 1:
            raise ValueError("shortlist and default_top_k must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        reader = ReaderConfig(**payload.pop("reader", {}))
        return cls(reader=reader, **payload)

    @classmethod
    def from_env(cls) -> "AppConfig":
        path = os.environ.get(CONFIG_ENV_VAR)
        if not path:
            raise ValueError(f"{CONFIG_ENV_VAR} is not set")
        return cls.from_file(path)


class AskRequest(BaseModel):
    question: str
    top_k: int | None = None
    reader: str | None = None


@dataclass
class AppState:
    config: AppConfig
    store: CorpusStore
    index: Bm25Index
    faq: list[FaqEntry]
    topic_model: TopicModel | None


def load_state(config: AppConfig) -> AppState:
    store = CorpusStore.load(config.store_path)
    index = Bm25Index.load(config.index_path)
    faq = load_faq(config.faq_path) if config.faq_path else []
    model = TopicModel.load(config.topic_model_path) if config.topic_model_path else None
    return AppState(config=config, store=store, index=index, faq=faq, topic_model=model)


def _document_payload(state: AppState, doc_id: str) -> dict:
    doc = state.store.document(doc_id)
    return {
        "id": doc.id,
        "title": doc.title,
        "authors": doc.authors,
        "journal": doc.journal,
        "publish_time": doc.publish_time,
        "url": doc.url,
    }


def _topic_keywords(state: AppState, doc_id: str) -> list[str]:
    if state.topic_model is None:
        return []
    try:
        dominant = topics_for_document(state.topic_model, doc_id, 1, words_per_topic=3)
    except UnknownDocument:
        return []
    return dominant[0][2] if dominant else []


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="scholarqa")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=state.config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    executor = ThreadPoolExecutor(max_workers=8)
    app.state.qa = state

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "documents": len(state.store.documents),
            "passages": len(state.store.passages),
            "faq_entries": len(state.faq),
            "topic_model": state.topic_model is not None,
        }

    @app.get("/api/faq")
    def faq():
        return [{"question": e.question, "tag": e.tag} for e in state.faq]

    @app.get("/api/topics")
    def topics():
        if state.topic_model is None:
            return []
        model = state.topic_model
        return [
            {"topic": k, "top_words": top_words(model, k, min(10, len(model.vocabulary)))}
            for k in range(model.config.n_topics)
        ]

    @app.get("/api/documents/{doc_id}")
    def document(doc_id: str):
        try:
            doc = state.store.document(doc_id)
        except UnknownDocument:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")
        return {
            "id": doc.id,
            "title": doc.title,
            "abstract": doc.abstract,
            "sections": [{"section": name, "text": text} for name, text in doc.sections],
            "authors": doc.authors,
            "journal": doc.journal,
            "publish_time": doc.publish_time,
            "url": doc.url,
        }

    @app.post("/api/ask")
    def ask(request: AskRequest):
        question = request.question.strip()
        if not question:
            raise HTTPException(status_code=400, detail="question must not be empty")
        top_k = request.top_k if request.top_k is not None else state.config.default_top_k
        if top_k < 1:
            raise HTTPException(status_code=400, detail="top_k must be >= 1")
        cfg = state.config.reader
        if request.reader is not None:
            if request.reader not in (BUILTIN, EXTERNAL):
                raise HTTPException(status_code=400, detail=f"unknown reader {request.reader!r}")
            if request.reader == EXTERNAL and not cfg.endpoint:
                raise HTTPException(status_code=400, detail="no external reader endpoint configured")
            cfg = replace(cfg, mode=request.reader)

        future = executor.submit(
            answer_pipeline,
            question,
            state.index,
            state.store,
            cfg,
            top_k,
            state.config.shortlist,
        )
        try:
            result = future.result(timeout=state.config.timeout_seconds)
        except FutureTimeout:
            raise HTTPException(status_code=504, detail="question timed out")
        except (ReaderUnreachable, ProtocolViolation) as exc:
            raise HTTPException(status_code=502, detail=str(exc))

        answers = []
        for cand in result.answers:
            answers.append(
                {
                    "text": cand.text,
                    "score": cand.score,
                    "context": cand.context,
                    "highlight": {
                        "start": cand.context_offset,
                        "end": cand.context_offset + len(cand.text),
                    },
                    "document": _document_payload(state, cand.doc_id),
                    "topics": _topic_keywords(state, cand.doc_id),
                    "support_count": cand.support_count,
                }
            )
        return {
            "question": question,
            "answers": answers,
            "timings": {
                "retrieve_ms": result.retrieve_seconds * 1000.0,
                "read_ms": result.read_seconds * 1000.0,
                "total_ms": result.total_seconds * 1000.0,
            },
        }

    return app


def serve(config: AppConfig) -> None:
    """Load all resources and run the HTTP service until interrupted."""
    import uvicorn

    state = load_state(config)
    app = create_app(state)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
