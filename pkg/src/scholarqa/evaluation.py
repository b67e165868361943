"""Measurement apparatus: dataset loading, ranked-retrieval metrics,
answer-string metrics, answer-category curves and inter-rater agreement.

All metric computations are pure functions over immutable inputs, so
results never depend on evaluation order.
"""

import csv
import json
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path

from .corpus import CorpusStore
from .errors import EmptyRun, LengthMismatch, MalformedRecord, MissingPrediction
from .retriever import Bm25Index, ScoredPassage, retrieve
from .text import normalize_answer


@dataclass
class QAPair:
    id: str
    question: str
    gold_answers: list[str]
    gold_context: str = ""
    gold_doc_id: str | None = None


@dataclass
class RankedRun:
    """Per-query ranked passage lists plus the relevant sets to judge them."""

    rankings: dict[str, list[tuple[str, float]]]
    relevant: dict[str, set[str]]
    retrieve_seconds: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for query_id, ranking in self.rankings.items():
            ids = [pid for pid, _ in ranking]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate passage id in ranking for query {query_id!r}")


class Category(IntEnum):
    """Answer correctness levels, ordered from best to worst."""

    EXACT = 0
    PARTIAL = 1
    NON_GT = 2
    FALSE = 3


class AutoMatch(str, Enum):
    EXACT = "EXACT"
    PARTIAL = "PARTIAL"
    UNKNOWN = "UNKNOWN"


@dataclass
class JudgmentMatrix:
    """question ids x ranks 1..k_max, each cell a Category."""

    question_ids: list[str]
    cells: list[list[Category]]

    def __post_init__(self):
        if not self.cells or not self.cells[0]:
            raise ValueError("judgment matrix must have at least one row and one column")
        k_max = len(self.cells[0])
        if any(len(row) != k_max for row in self.cells):
            raise ValueError("judgment matrix must be rectangular")

    @property
    def k_max(self) -> int:
        return len(self.cells[0])


@dataclass
class MetricReport:
    metrics: dict[str, float]
    query_count: int

    def to_json(self) -> str:
        return json.dumps({"query_count": self.query_count, **self.metrics}, indent=2)


def load_qa_dataset(path: str | Path) -> tuple[list[QAPair], int]:
    """Load a SQuAD2.0-style JSON dataset.

    Returns (pairs, skipped) where skipped counts qa entries with an empty
    answers list.
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"dataset is not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or not isinstance(payload.get("data"), list):
        raise MalformedRecord('dataset must be an object with a "data" list')
    pairs: list[QAPair] = []
    skipped = 0
    for article in payload["data"]:
        for paragraph in article.get("paragraphs", []):
            context = paragraph.get("context", "")
            doc_id = paragraph.get("document_id") or article.get("document_id")
            for qa in paragraph.get("qas", []):
                question = qa.get("question", "")
                qa_id = str(qa.get("id", ""))
                if not question or not qa_id:
                    raise MalformedRecord("qa entry missing id or question")
                answers = [a.get("text", "") for a in qa.get("answers", [])]
                answers = [a for a in answers if a]
                if not answers:
                    skipped += 1
                    continue
                pairs.append(
                    QAPair(
                        id=qa_id,
                        question=question,
                        gold_answers=answers,
                        gold_context=context,
                        gold_doc_id=doc_id,
                    )
                )
    return pairs, skipped


def exact_match(pred: str, golds: list[str]) -> int:
    """1 iff the normalized prediction equals some normalized gold answer."""
    if not golds:
        raise ValueError("golds must be nonempty")
    pred_tokens = normalize_answer(pred)
    return int(any(pred_tokens == normalize_answer(g) for g in golds))


def _f1(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def token_f1(pred: str, golds: list[str]) -> float:
    """Max token-multiset F1 of the prediction against any gold answer."""
    if not golds:
        raise ValueError("golds must be nonempty")
    pred_tokens = normalize_answer(pred)
    return max(_f1(pred_tokens, normalize_answer(g)) for g in golds)


def retriever_metrics(run: RankedRun, k: int) -> MetricReport:
    """recall@k, MAP, MRR and average retrieve time over a ranked run."""
    if not run.rankings:
        raise EmptyRun("ranked run has no queries")
    if k < 1:
        raise ValueError("k must be >= 1")
    recall_hits = 0
    ap_sum = 0.0
    rr_sum = 0.0
    for query_id, ranking in run.rankings.items():
        relevant = run.relevant.get(query_id, set())
        if not relevant:
            raise ValueError(f"query {query_id!r} has an empty relevant set")
        if any(pid in relevant for pid, _ in ranking[:k]):
            recall_hits += 1
        hits = 0
        ap = 0.0
        rr = 0.0
        for rank, (pid, _) in enumerate(ranking, start=1):
            if pid in relevant:
                hits += 1
                ap += hits / rank
                if rr == 0.0:
                    rr = 1.0 / rank
        ap_sum += ap / len(relevant)
        rr_sum += rr
    n = len(run.rankings)
    metrics = {
        f"recall@{k}": recall_hits / n,
        "map": ap_sum / n,
        "mrr": rr_sum / n,
    }
    if run.retrieve_seconds:
        metrics["avg_retrieve_time_s"] = sum(run.retrieve_seconds.values()) / len(
            run.retrieve_seconds
        )
    return MetricReport(metrics=metrics, query_count=n)


def reader_metrics(
    predictions: dict[str, list[str]],
    dataset: list[QAPair],
    times: dict[str, float] | None = None,
) -> MetricReport:
    """Rank-1 answer quality over a dataset.

    accuracy counts a question when its rank-1 answer overlaps any gold
    answer at all (token F1 > 0); EM and F1 are the usual rank-1 averages.
    An empty prediction list scores 0 on all three.
    """
    if not dataset:
        raise ValueError("dataset must be nonempty")
    em_sum = 0.0
    f1_sum = 0.0
    soft_hits = 0
    for pair in dataset:
        if pair.id not in predictions:
            raise MissingPrediction(pair.id)
        ranked = predictions[pair.id]
        if not ranked:
            continue
        top = ranked[0]
        em_sum += exact_match(top, pair.gold_answers)
        f1 = token_f1(top, pair.gold_answers)
        f1_sum += f1
        if f1 > 0:
            soft_hits += 1
    n = len(dataset)
    metrics = {
        "accuracy": soft_hits / n,
        "em@1": em_sum / n,
        "f1@1": f1_sum / n,
    }
    if times is not None:
        metrics["total_time_s"] = sum(times.values())
    return MetricReport(metrics=metrics, query_count=n)


def cumulative_curves(matrix: JudgmentMatrix) -> dict[Category, list[float]]:
    """Fraction of questions with an answer at or above each level in the top k.

    For each level L in EXACT/PARTIAL/NON_GT and each k in 1..k_max, the
    rate is the share of rows whose first k cells contain at least one
    category <= L.  FALSE never satisfies any level.
    """
    rows = matrix.cells
    curves: dict[Category, list[float]] = {}
    for level in (Category.EXACT, Category.PARTIAL, Category.NON_GT):
        rates = []
        for k in range(1, matrix.k_max + 1):
            satisfied = sum(1 for row in rows if any(cell <= level for cell in row[:k]))
            rates.append(satisfied / len(rows))
        curves[level] = rates
    return curves


def percent_agreement(labels_a: list, labels_b: list) -> float:
    """Fraction of positions where two equal-length label lists agree."""
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)}")
    if not labels_a:
        raise LengthMismatch("label lists must be nonempty")
    return sum(a == b for a, b in zip(labels_a, labels_b)) / len(labels_a)


def auto_categorize(pred: str, gold: str) -> AutoMatch:
    """Mechanical first pass over answer categories.

    EXACT when the normalized token multisets match; PARTIAL when one is a
    nonempty proper sub-multiset of the other; otherwise UNKNOWN, because
    telling a factually-correct alternative from a false answer requires a
    human judge.
    """
    pred_counts = Counter(normalize_answer(pred))
    gold_counts = Counter(normalize_answer(gold))
    if pred_counts == gold_counts:
        return AutoMatch.EXACT
    if pred_counts and not pred_counts - gold_counts:
        return AutoMatch.PARTIAL
    if gold_counts and not gold_counts - pred_counts:
        return AutoMatch.PARTIAL
    return AutoMatch.UNKNOWN


def load_judgments(path: str | Path) -> JudgmentMatrix:
    """Read a judgment CSV with header ``question_id,rank,category``."""
    by_question: dict[str, dict[int, Category]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"question_id", "rank", "category"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise MalformedRecord("judgment CSV must have question_id,rank,category columns")
        for row in reader:
            try:
                rank = int(row["rank"])
                category = Category[row["category"].strip()]
            except (KeyError, ValueError) as exc:
                raise MalformedRecord(f"bad judgment row {row!r}: {exc}") from None
            by_question.setdefault(row["question_id"], {})[rank] = category
    if not by_question:
        raise MalformedRecord("judgment CSV has no rows")
    k_max = max(max(ranks) for ranks in by_question.values())
    question_ids = sorted(by_question)
    cells = []
    for qid in question_ids:
        ranks = by_question[qid]
        if set(ranks) != set(range(1, k_max + 1)):
            raise MalformedRecord(f"question {qid!r} does not cover ranks 1..{k_max}")
        cells.append([ranks[r] for r in range(1, k_max + 1)])
    return JudgmentMatrix(question_ids=question_ids, cells=cells)


def judgment_labels(matrix: JudgmentMatrix) -> list[Category]:
    """Flatten a judgment matrix row-major for agreement computations."""
    return [cell for row in matrix.cells for cell in row]


def relevant_passages(store: CorpusStore, pair: QAPair) -> set[str]:
    """Passages counted as relevant for a question.

    A passage is relevant when it comes from the gold document, or, if no
    gold document id is given, when a gold answer occurs verbatim in it.
    """
    if pair.gold_doc_id:
        return {p.passage_id for p in store.passages if p.doc_id == pair.gold_doc_id}
    return {
        p.passage_id
        for p in store.passages
        if any(answer in p.text for answer in pair.gold_answers)
    }


def run_retriever(
    index: Bm25Index,
    store: CorpusStore,
    dataset: list[QAPair],
    depth: int = 10,
) -> tuple[RankedRun, int]:
    """Retrieve for every dataset question, timing each query.

    Questions whose relevant set is empty are skipped and counted, since no
    metric is defined for them.
    """
    rankings: dict[str, list[tuple[str, float]]] = {}
    relevant: dict[str, set[str]] = {}
    seconds: dict[str, float] = {}
    skipped = 0
    for pair in dataset:
        rel = relevant_passages(store, pair)
        if not rel:
            skipped += 1
            continue
        started = time.perf_counter()
        hits = retrieve(index, pair.question, depth)
        seconds[pair.id] = time.perf_counter() - started
        rankings[pair.id] = [(h.passage_id, h.score) for h in hits]
        relevant[pair.id] = rel
    if not rankings:
        raise EmptyRun("no dataset question has a nonempty relevant set")
    return RankedRun(rankings=rankings, relevant=relevant, retrieve_seconds=seconds), skipped


def read_trec_run(path: str | Path) -> dict[str, list[ScoredPassage]]:
    """Read run lines of the form ``query_id passage_id rank score``."""
    run: dict[str, list[ScoredPassage]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise MalformedRecord(f"bad run line: {line!r}")
            query_id, passage_id, rank, score = parts
            run.setdefault(query_id, []).append(
                ScoredPassage(passage_id=passage_id, score=float(score), rank=int(rank))
            )
    return run


def run_from_trec(
    path: str | Path, store: CorpusStore, dataset: list[QAPair]
) -> tuple[RankedRun, int]:
    """Pair a pre-computed run file with relevance sets derived from a dataset.

    Dataset questions absent from the run file, and questions with empty
    relevant sets, are skipped and counted.
    """
    hits_by_query = read_trec_run(path)
    rankings: dict[str, list[tuple[str, float]]] = {}
    relevant: dict[str, set[str]] = {}
    skipped = 0
    for pair in dataset:
        hits = hits_by_query.get(pair.id)
        rel = relevant_passages(store, pair)
        if hits is None or not rel:
            skipped += 1
            continue
        rankings[pair.id] = [(h.passage_id, h.score) for h in hits]
        relevant[pair.id] = rel
    if not rankings:
        raise EmptyRun(f"no usable queries joining {path} with the dataset")
    return RankedRun(rankings=rankings, relevant=relevant), skipped


_CATEGORY_LABELS = {
    Category.EXACT: "Exact match",
    Category.PARTIAL: "Partial match",
    Category.NON_GT: "Non-GT match",
}


def format_curve_table(curves: dict[Category, list[float]]) -> str:
    """Render level-by-k rates as an aligned plain-text table."""
    k_max = len(next(iter(curves.values())))
    header = ["category".ljust(14)] + [f"k={k}".rjust(7) for k in range(1, k_max + 1)]
    lines = ["".join(header)]
    for level in (Category.EXACT, Category.PARTIAL, Category.NON_GT):
        if level not in curves:
            continue
        row = [_CATEGORY_LABELS[level].ljust(14)]
        row += [f"{rate * 100:6.1f}%" for rate in curves[level]]
        lines.append("".join(row))
    return "\n".join(lines)


def format_metric_table(report: MetricReport) -> str:
    """Render a metric report as an aligned two-column table."""
    width = max(len(name) for name in report.metrics) if report.metrics else 0
    lines = [f"{'queries'.ljust(width)}  {report.query_count}"]
    for name, value in report.metrics.items():
        lines.append(f"{name.ljust(width)}  {value:.4f}")
    return "\n".join(lines)
