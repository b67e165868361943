"""Parse heterogeneous scholarly-corpus files into a unified document/passage store.

Two input layouts are supported: a simple JSONL file with one document per
line, and a CORD-19-style layout (metadata CSV joined with per-document
full-text JSON).  Both produce the same `Document` shape, which is then cut
into retrievable `Passage` units on sentence boundaries.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyCorpus, MalformedRecord, UnknownDocument, UnknownPassage
from .text import sentence_spans, tokenize

SIMPLE_JSONL = "simple-jsonl-record"
CORD19_FULLTEXT = "cord19-fulltext"

DEFAULT_MAX_PASSAGE_TOKENS = 128

_STORE_VERSION = 1


@dataclass
class Document:
    id: str
    title: str = ""
    abstract: str = ""
    sections: list[tuple[str, str]] = field(default_factory=list)
    authors: list[str] = field(default_factory=list)
    journal: str = ""
    publish_time: str = ""
    url: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "abstract": self.abstract,
            "body": [{"section": name, "text": text} for name, text in self.sections],
            "authors": list(self.authors),
            "journal": self.journal,
            "publish_time": self.publish_time,
            "url": self.url,
        }


@dataclass
class Passage:
    passage_id: str
    doc_id: str
    text: str
    char_offset_in_section: int
    section_name: str


@dataclass
class FaqEntry:
    question: str
    tag: str = ""


def _require_str(record: dict, key: str) -> str:
    value = record.get(key, "")
    if value is None:
        return ""
    if not isinstance(value, str):
        raise MalformedRecord(f"field {key!r} must be a string")
    return value


def _parse_body(entries, source_key: str) -> list[tuple[str, str]]:
    if entries is None:
        return []
    if not isinstance(entries, list):
        raise MalformedRecord(f"field {source_key!r} must be a list")
    sections = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise MalformedRecord(f"{source_key} entries must be objects")
        text = entry.get("text", "")
        if not isinstance(text, str):
            raise MalformedRecord(f"{source_key} entry text must be a string")
        if not text.strip():
            continue
        name = entry.get("section", "")
        sections.append((name if isinstance(name, str) else "", text))
    return sections


def parse_document(raw: bytes | str, format: str = SIMPLE_JSONL) -> Document:
    """Parse one raw record into a Document.

    Raises MalformedRecord for invalid JSON, a missing id, or a record with
    neither abstract nor body content.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedRecord(f"not valid UTF-8: {exc}") from None
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"not valid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise MalformedRecord("record must be a JSON object")

    if format == SIMPLE_JSONL:
        doc_id = record.get("id")
        if not isinstance(doc_id, str) or not doc_id.strip():
            raise MalformedRecord("missing or empty id")
        authors = record.get("authors") or []
        if not isinstance(authors, list) or any(not isinstance(a, str) for a in authors):
            raise MalformedRecord("authors must be a list of strings")
        doc = Document(
            id=doc_id,
            title=_require_str(record, "title"),
            abstract=_require_str(record, "abstract"),
            sections=_parse_body(record.get("body"), "body"),
            authors=authors,
            journal=_require_str(record, "journal"),
            publish_time=_require_str(record, "publish_time"),
            url=_require_str(record, "url"),
        )
    elif format == CORD19_FULLTEXT:
        doc_id = record.get("paper_id") or record.get("id")
        if not isinstance(doc_id, str) or not doc_id.strip():
            raise MalformedRecord("missing or empty paper_id")
        metadata = record.get("metadata") or {}
        abstract_entries = record.get("abstract") or []
        abstract = " ".join(
            e.get("text", "") for e in abstract_entries if isinstance(e, dict) and e.get("text")
        )
        doc = Document(
            id=doc_id,
            title=metadata.get("title", "") if isinstance(metadata, dict) else "",
            abstract=abstract,
            sections=_parse_body(record.get("body_text"), "body_text"),
        )
    else:
        raise ValueError(f"unknown corpus format: {format!r}")

    if not doc.abstract.strip() and not doc.sections:
        raise MalformedRecord(f"document {doc.id!r} has no abstract and no body text")
    return doc


def split_passages(doc: Document, max_passage_tokens: int = DEFAULT_MAX_PASSAGE_TOKENS) -> list[Passage]:
    """Cut a document into passages of whole sentences.

    Sentences are packed greedily until adding the next one would exceed
    ``max_passage_tokens``; a single over-long sentence becomes its own
    passage.  The abstract (when present) is emitted first under the
    section name "abstract".
    """
    if max_passage_tokens < 32:
        raise ValueError("max_passage_tokens must be >= 32")
    units: list[tuple[str, str]] = []
    if doc.abstract.strip():
        units.append(("abstract", doc.abstract))
    units.extend(doc.sections)

    passages: list[Passage] = []
    ordinal = 0
    for section_name, section_text in units:
        spans = sentence_spans(section_text)
        if not spans:
            continue
        batch: list[str] = []
        batch_offset = 0
        batch_tokens = 0

        def flush() -> None:
            nonlocal ordinal, batch, batch_tokens
            if not batch:
                return
            passages.append(
                Passage(
                    passage_id=f"{doc.id}#{ordinal}",
                    doc_id=doc.id,
                    text=" ".join(batch),
                    char_offset_in_section=batch_offset,
                    section_name=section_name,
                )
            )
            ordinal += 1
            batch = []
            batch_tokens = 0

        for start, end in spans:
            sentence = section_text[start:end]
            n_tokens = len(tokenize(sentence))
            if batch and batch_tokens + n_tokens > max_passage_tokens:
                flush()
            if not batch:
                batch_offset = start
            batch.append(sentence)
            batch_tokens += n_tokens
        flush()
    return passages


class CorpusStore:
    """Immutable collection of documents and their passages.

    Built once by `load_corpus` (or `CorpusStore.load`), then shared
    read-only by the index, the readers and the service.
    """

    def __init__(
        self,
        documents: list[Document],
        passages: list[Passage],
        skipped: int = 0,
        max_passage_tokens: int = DEFAULT_MAX_PASSAGE_TOKENS,
    ):
        self.documents = documents
        self.passages = passages
        self.skipped = skipped
        self.max_passage_tokens = max_passage_tokens
        self._docs_by_id = {doc.id: doc for doc in documents}
        self._passages_by_id = {p.passage_id: p for p in passages}

    def __len__(self) -> int:
        return len(self.documents)

    def document(self, doc_id: str) -> Document:
        try:
            return self._docs_by_id[doc_id]
        except KeyError:
            raise UnknownDocument(doc_id) from None

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._docs_by_id

    def passage(self, passage_id: str) -> Passage:
        try:
            return self._passages_by_id[passage_id]
        except KeyError:
            raise UnknownPassage(passage_id) from None

    def save(self, path: str | Path) -> None:
        out = Path(path)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "documents.jsonl", "w", encoding="utf-8") as fh:
            for doc in self.documents:
                fh.write(json.dumps(doc.to_dict(), ensure_ascii=False) + "\n")
        with open(out / "passages.jsonl", "w", encoding="utf-8") as fh:
            for p in self.passages:
                fh.write(
                    json.dumps(
                        {
                            "passage_id": p.passage_id,
                            "doc_id": p.doc_id,
                            "text": p.text,
                            "char_offset_in_section": p.char_offset_in_section,
                            "section_name": p.section_name,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        meta = {
            "version": _STORE_VERSION,
            "documents": len(self.documents),
            "passages": len(self.passages),
            "skipped": self.skipped,
            "max_passage_tokens": self.max_passage_tokens,
        }
        (out / "store.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CorpusStore":
        root = Path(path)
        meta = json.loads((root / "store.json").read_text(encoding="utf-8"))
        if meta.get("version") != _STORE_VERSION:
            raise MalformedRecord(f"unsupported store version: {meta.get('version')!r}")
        documents = []
        with open(root / "documents.jsonl", encoding="utf-8") as fh:
            for line in fh:
                record = json.loads(line)
                documents.append(
                    Document(
                        id=record["id"],
                        title=record["title"],
                        abstract=record["abstract"],
                        sections=[(s["section"], s["text"]) for s in record["body"]],
                        authors=record["authors"],
                        journal=record["journal"],
                        publish_time=record["publish_time"],
                        url=record["url"],
                    )
                )
        passages = []
        with open(root / "passages.jsonl", encoding="utf-8") as fh:
            for line in fh:
                record = json.loads(line)
                passages.append(Passage(**record))
        return cls(
            documents,
            passages,
            skipped=meta.get("skipped", 0),
            max_passage_tokens=meta.get("max_passage_tokens", DEFAULT_MAX_PASSAGE_TOKENS),
        )


def _iter_simple_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield line


def _load_cord19(root: Path) -> tuple[list[Document], int]:
    metadata_path = root / "metadata.csv"
    if not metadata_path.exists():
        raise FileNotFoundError(f"no metadata.csv under {root}")
    documents: list[Document] = []
    skipped = 0
    seen: set[str] = set()
    with open(metadata_path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            doc_id = (row.get("cord_uid") or "").strip()
            if not doc_id or doc_id in seen:
                skipped += 1
                continue
            json_path = root / f"{doc_id}.json"
            if not json_path.exists():
                json_path = root / "document_parses" / f"{doc_id}.json"
            try:
                if json_path.exists():
                    doc = parse_document(json_path.read_bytes(), CORD19_FULLTEXT)
                    doc.id = doc_id
                else:
                    abstract = (row.get("abstract") or "").strip()
                    if not abstract:
                        raise MalformedRecord(f"{doc_id}: no full text and no abstract")
                    doc = Document(id=doc_id, abstract=abstract)
                doc.title = row.get("title") or doc.title
                doc.authors = [a.strip() for a in (row.get("authors") or "").split(";") if a.strip()]
                doc.journal = row.get("journal") or ""
                doc.publish_time = row.get("publish_time") or ""
                doc.url = row.get("url") or ""
            except MalformedRecord:
                skipped += 1
                continue
            seen.add(doc_id)
            documents.append(doc)
    return documents, skipped


def load_corpus(
    path: str | Path,
    format: str = SIMPLE_JSONL,
    max_passage_tokens: int = DEFAULT_MAX_PASSAGE_TOKENS,
) -> CorpusStore:
    """Read a corpus file or directory and return a populated CorpusStore.

    Malformed records are skipped and counted, never silently dropped.
    Raises EmptyCorpus when no valid document remains.
    """
    source = Path(path)
    documents: list[Document] = []
    skipped = 0
    if format == SIMPLE_JSONL:
        seen: set[str] = set()
        for line in _iter_simple_jsonl(source):
            try:
                doc = parse_document(line, SIMPLE_JSONL)
                if doc.id in seen:
                    raise MalformedRecord(f"duplicate document id {doc.id!r}")
            except MalformedRecord:
                skipped += 1
                continue
            seen.add(doc.id)
            documents.append(doc)
    elif format == CORD19_FULLTEXT:
        documents, skipped = _load_cord19(source)
    else:
        raise ValueError(f"unknown corpus format: {format!r}")

    if not documents:
        raise EmptyCorpus(f"no valid documents in {source}")
    passages: list[Passage] = []
    for doc in documents:
        passages.extend(split_passages(doc, max_passage_tokens))
    return CorpusStore(documents, passages, skipped=skipped, max_passage_tokens=max_passage_tokens)


def load_faq(path: str | Path) -> list[FaqEntry]:
    """Load a FAQ file: a JSON array of {"question": str, "tag": str?}."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        entries = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"FAQ file is not valid JSON: {exc}") from None
    if not isinstance(entries, list):
        raise MalformedRecord("FAQ file must be a JSON array")
    faqs = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise MalformedRecord("FAQ entries must be objects")
        question = entry.get("question")
        if not isinstance(question, str) or not question.strip():
            raise MalformedRecord("FAQ entry with missing or empty question")
        tag = entry.get("tag", "")
        if not isinstance(tag, str):
            raise MalformedRecord("FAQ tag must be a string")
        faqs.append(FaqEntry(question=question, tag=tag))
    return faqs
