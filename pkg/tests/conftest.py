import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from scholarqa.corpus import CorpusStore, Document, split_passages
from scholarqa.retriever import build_index

PNEUMONIA_CLUSTER = (
    "On December 29, 2019, clinicians in a hospital in Wuhan City, China, noticed a "
    "clustering of cases of unusual pneumonia later attributed to SARS-CoV-2. "
    "Within four weeks, by January 26, 2020, the causative organism had been "
    "identified as a novel coronavirus."
)

T_CELL_FINDING = (
    "Excessive reactive oxygen species (ROS) was shown to hinder T cell responses "
    "to viral infection and ROS accumulation was detected in autophagy-deficient "
    "effector T cells."
)

ORIGIN_QUESTION = "Where did SARS-CoV-2 originate?"


def make_store(docs: list[Document], max_passage_tokens: int = 128) -> CorpusStore:
    passages = []
    for doc in docs:
        passages.extend(split_passages(doc, max_passage_tokens))
    return CorpusStore(docs, passages, max_passage_tokens=max_passage_tokens)


@pytest.fixture
def mini_docs() -> list[Document]:
    return [
        Document(
            id="d1",
            title="Early report of an unusual pneumonia cluster",
            sections=[("Background", PNEUMONIA_CLUSTER)],
            authors=["Chen, L.", "Novak, P."],
            journal="Journal of Clinical Findings",
            publish_time="2020-02-17",
            url="https://example.org/d1",
        ),
        Document(
            id="d2",
            title="Oxidative stress and T cell exhaustion",
            sections=[("Findings", T_CELL_FINDING)],
            authors=["Okafor, A."],
            journal="Immunology Letters",
            publish_time="2020-05-02",
            url="https://example.org/d2",
        ),
    ]


@pytest.fixture
def mini_store(mini_docs) -> CorpusStore:
    return make_store(mini_docs)


@pytest.fixture
def mini_index(mini_store):
    return build_index(mini_store)


class _ReaderHandler(BaseHTTPRequestHandler):
    behavior = staticmethod(lambda path, body: (200, {"answers": []}))
    requests_seen: list[bytes] = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length)
        type(self).requests_seen.append(body)
        status, payload = type(self).behavior(self.path, body)
        data = payload if isinstance(payload, bytes) else json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class MockReaderServer:
    def __init__(self):
        self.handler = type("Handler", (_ReaderHandler,), {"requests_seen": []})
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), self.handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def endpoint(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def requests_seen(self) -> list[bytes]:
        return self.handler.requests_seen

    def respond_with(self, behavior):
        self.handler.behavior = staticmethod(behavior)

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def reader_server():
    server = MockReaderServer()
    yield server
    server.close()
