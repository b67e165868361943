"""Command-line interface.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .app import CONFIG_ENV_VAR, AppConfig, serve
from .corpus import CORD19_FULLTEXT, SIMPLE_JSONL, CorpusStore, load_corpus
from .errors import ScholarQaError
from .evaluation import (
    cumulative_curves,
    format_curve_table,
    format_metric_table,
    judgment_labels,
    load_judgments,
    load_qa_dataset,
    percent_agreement,
    reader_metrics,
    retriever_metrics,
    run_from_trec,
    run_retriever,
)
from .reader import BUILTIN, EXTERNAL, ReaderConfig, answer_pipeline
from .retriever import Bm25Index, Bm25Params, build_index
from .topics import LdaConfig, TopicModel, fit_lda


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_store_index(parser):
    parser.add_argument("--store", required=True, help="corpus store directory")
    parser.add_argument("--index", required=True, help="index file")


def _load_app_config(args) -> AppConfig:
    import os

    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    if path:
        config = AppConfig.from_file(path)
    else:
        if not getattr(args, "store", None) or not getattr(args, "index", None):
            raise ValueError("need --config (or QAS_CONFIG) or both --store and --index")
        config = AppConfig(store_path=args.store, index_path=args.index)
    overrides = {}
    for flag, attr in [
        ("store", "store_path"),
        ("index", "index_path"),
        ("faq", "faq_path"),
        ("topic_model", "topic_model_path"),
        ("port", "port"),
        ("host", "host"),
        ("shortlist", "shortlist"),
        ("timeout", "timeout_seconds"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[attr] = value
    if overrides:
        config = replace(config, **overrides)
    reader_overrides = {}
    if getattr(args, "reader", None):
        reader_overrides["mode"] = args.reader
    if getattr(args, "endpoint", None):
        reader_overrides["endpoint"] = args.endpoint
    if reader_overrides:
        config = replace(config, reader=replace(config.reader, **reader_overrides))
    return config


def cmd_ingest(args) -> int:
    store = load_corpus(args.corpus, args.format, max_passage_tokens=args.max_passage_tokens)
    store.save(args.out)
    print(
        f"ingested {len(store.documents)} documents ({len(store.passages)} passages), "
        f"skipped {store.skipped} malformed records -> {args.out}"
    )
    return 0


def cmd_index(args) -> int:
    store = CorpusStore.load(args.store)
    index = build_index(store, Bm25Params(k1=args.k1, b=args.b))
    index.save(args.out)
    print(f"indexed {index.N} passages, {len(index.postings)} terms -> {args.out}")
    return 0


def cmd_ask(args) -> int:
    config = _load_app_config(args)
    store = CorpusStore.load(config.store_path)
    index = Bm25Index.load(config.index_path)
    cfg = config.reader
    if args.reader:
        if args.reader == EXTERNAL and not cfg.endpoint:
            raise ValueError("external reader requested but no endpoint configured")
        cfg = replace(cfg, mode=args.reader)
    result = answer_pipeline(
        args.question, index, store, cfg, top_k=args.top_k, shortlist=config.shortlist
    )
    if not result.answers:
        print("no answers")
        return 0
    for i, cand in enumerate(result.answers, start=1):
        doc = store.document(cand.doc_id)
        print(f"{i}. [{cand.score:.3f}] {cand.text}  (support: {cand.support_count})")
        print(f"   context: {cand.context}")
        meta = ", ".join(x for x in [doc.title, doc.journal, doc.publish_time] if x)
        print(f"   source: {meta or doc.id}" + (f" <{doc.url}>" if doc.url else ""))
    print(
        f"retrieve {result.retrieve_seconds * 1000:.1f} ms, "
        f"read {result.read_seconds * 1000:.1f} ms"
    )
    return 0


def cmd_topics_fit(args) -> int:
    store = CorpusStore.load(args.store)
    cfg = LdaConfig(
        n_topics=args.k, alpha=args.alpha, beta=args.beta, iterations=args.iters, seed=args.seed
    )
    model = fit_lda(store, cfg)
    model.save(args.out)
    print(f"fitted {cfg.n_topics} topics over {len(model.doc_ids)} documents -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    config = _load_app_config(args)
    serve(config)
    return 0


def _write_report(args, payload: dict) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"report written to {args.out}")


def cmd_eval_retriever(args) -> int:
    store = CorpusStore.load(args.store)
    dataset, skipped = load_qa_dataset(args.dataset)
    if args.run:
        run, unjudged = run_from_trec(args.run, store, dataset)
    else:
        if not args.index:
            raise ValueError("need --index (to retrieve) or --run (a precomputed run file)")
        index = Bm25Index.load(args.index)
        run, unjudged = run_retriever(index, store, dataset, depth=args.k)
    report = retriever_metrics(run, args.k)
    print(format_metric_table(report))
    if skipped or unjudged:
        print(f"(skipped {skipped} unanswered, {unjudged} without relevant passages)")
    _write_report(args, {"query_count": report.query_count, **report.metrics})
    return 0


def cmd_eval_reader(args) -> int:
    store = CorpusStore.load(args.store)
    index = Bm25Index.load(args.index)
    dataset, skipped = load_qa_dataset(args.dataset)
    cfg = ReaderConfig(mode=args.reader or BUILTIN, endpoint=args.endpoint)
    predictions: dict[str, list[str]] = {}
    times: dict[str, float] = {}
    for pair in dataset:
        result = answer_pipeline(pair.question, index, store, cfg, top_k=args.top_k)
        predictions[pair.id] = [c.text for c in result.answers]
        times[pair.id] = result.total_seconds
    report = reader_metrics(predictions, dataset, times=times)
    print(format_metric_table(report))
    if skipped:
        print(f"(skipped {skipped} unanswered questions)")
    _write_report(args, {"query_count": report.query_count, **report.metrics})
    return 0


def cmd_eval_curves(args) -> int:
    matrix = load_judgments(args.judgments)
    curves = cumulative_curves(matrix)
    print(format_curve_table(curves))
    _write_report(
        args,
        {level.name: rates for level, rates in curves.items()},
    )
    return 0


def cmd_eval_agreement(args) -> int:
    matrix_a = load_judgments(args.a)
    matrix_b = load_judgments(args.b)
    if matrix_a.question_ids != matrix_b.question_ids or matrix_a.k_max != matrix_b.k_max:
        raise ValueError("judgment files must cover the same questions and ranks")
    agreement = percent_agreement(judgment_labels(matrix_a), judgment_labels(matrix_b))
    print(f"agreement  {agreement:.4f} ({agreement * 100:.1f}%)")
    _write_report(args, {"agreement": agreement})
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="scholarqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a corpus into a document/passage store")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=[SIMPLE_JSONL, CORD19_FULLTEXT], default=SIMPLE_JSONL)
    p.add_argument("--out", required=True)
    p.add_argument("--max-passage-tokens", type=int, default=128)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="build the retrieval index over a store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("ask", help="answer a question from the command line")
    p.add_argument("question")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--reader", choices=[BUILTIN, EXTERNAL])
    p.add_argument("--endpoint")
    p.add_argument("--config")
    p.add_argument("--store")
    p.add_argument("--index")
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("topics", help="topic model commands")
    topics_sub = p.add_subparsers(dest="topics_command", required=True)
    pf = topics_sub.add_parser("fit", help="fit the topic model on a store")
    pf.add_argument("--store", required=True)
    pf.add_argument("--out", required=True)
    pf.add_argument("--k", type=int, default=20)
    pf.add_argument("--alpha", type=float, default=0.1)
    pf.add_argument("--beta", type=float, default=0.01)
    pf.add_argument("--iters", type=int, default=200)
    pf.add_argument("--seed", type=int, default=0)
    pf.set_defaults(func=cmd_topics_fit)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config")
    p.add_argument("--store")
    p.add_argument("--index")
    p.add_argument("--faq")
    p.add_argument("--topic-model", dest="topic_model")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--shortlist", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--reader", choices=[BUILTIN, EXTERNAL])
    p.add_argument("--endpoint")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="evaluation commands")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)

    pe = eval_sub.add_parser("retriever", help="ranked-retrieval metrics on a dataset")
    pe.add_argument("--store", required=True, help="corpus store directory")
    pe.add_argument("--index", help="index file (omit when --run is given)")
    pe.add_argument("--dataset", required=True)
    pe.add_argument("--run", help="precomputed run file (query_id passage_id rank score)")
    pe.add_argument("--k", type=int, default=10)
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_eval_retriever)

    pe = eval_sub.add_parser("reader", help="answer-quality metrics on a dataset")
    _add_store_index(pe)
    pe.add_argument("--dataset", required=True)
    pe.add_argument("--top-k", type=int, default=1)
    pe.add_argument("--reader", choices=[BUILTIN, EXTERNAL])
    pe.add_argument("--endpoint")
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_eval_reader)

    pe = eval_sub.add_parser("curves", help="cumulative answer-category curves")
    pe.add_argument("--judgments", required=True)
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_eval_curves)

    pe = eval_sub.add_parser("agreement", help="inter-rater percent agreement")
    pe.add_argument("--a", required=True)
    pe.add_argument("--b", required=True)
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_eval_agreement)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScholarQaError, OSError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
