"""``sage`` command line.

Exit codes: 0 success, 2 configuration error, 3 build/training failure,
4 upstream-service failure, 1 anything else.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import httpx

from .config import PipelineConfig, load_config, make_config
from .errors import (
    BuildError,
    ContractViolation,
    IndexFormatError,
    InsufficientDataError,
    ModelFormatError,
    RetryableError,
    SageError,
    StageError,
    TrainingDivergedError,
    UpstreamError,
)

EXIT_CONFIG, EXIT_BUILD, EXIT_UPSTREAM = 2, 3, 4

log = logging.getLogger("sage")


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (RetryableError, UpstreamError, httpx.HTTPError)):
        return EXIT_UPSTREAM
    if isinstance(exc, (BuildError, InsufficientDataError, TrainingDivergedError)):
        return EXIT_BUILD
    if isinstance(exc, (ContractViolation, ModelFormatError, IndexFormatError, FileNotFoundError)):
        return EXIT_CONFIG
    return 1


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--ss", type=float, help="segmentation score threshold")
    p.add_argument("--l", type=int, dest="l", help="coarse chunk length in tokens")
    p.add_argument("--min-k", type=int)
    p.add_argument("--g", type=float, help="gradient threshold")
    p.add_argument("--fs", type=int, help="feedback score threshold")
    p.add_argument("-N", "--top-n", type=int, dest="N", help="candidates fetched before reranking")
    p.add_argument("--max-rounds", type=int, dest="max_feedback_rounds")
    p.add_argument("--dim", type=int, help="embedding dimension")


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else make_config()
    data = cfg.snapshot()
    for key in ("ss", "l", "min_k", "g", "fs", "N", "max_feedback_rounds"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "dim", None):
        data["embedder"] = dict(data["embedder"], dimension=args.dim)
    if getattr(args, "mock_script", None):
        data["llm"] = dict(data["llm"], kind="scripted", script=args.mock_script)
    return make_config(data)


def _pipeline(args):
    from .pipeline import Pipeline
    from .vector_store import VectorStore

    store = VectorStore.load(args.index)
    return Pipeline(store, _config(args))


def cmd_train_seg(args) -> int:
    from .embedder import EmbedderSpec
    from .pipeline import read_documents
    from .segmenter import TrainConfig, collect_pairs, save_model, train
    from .segmenter.segment import paragraphs_of

    docs, _ = read_documents(args.corpus)
    paragraphs = [p for _, text in docs for p in paragraphs_of(text)]
    pairs = collect_pairs(paragraphs, args.ratio, args.seed)
    cfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=min(args.batch_size, len(pairs)),
        seed=args.seed,
        optimizer=args.optimizer,
    )
    model = train(pairs, EmbedderSpec(dimension=args.dim), cfg)
    save_model(model, args.out)
    print(json.dumps({"pairs": len(pairs), "epochs": cfg.epochs, "loss": model.history, "out": args.out}))
    return 0


def cmd_build(args) -> int:
    from .pipeline import build_index
    from .segmenter import load_model

    cfg = _config(args)
    model = load_model(args.seg_model)
    store = build_index(args.corpus, model, cfg, args.index)
    print(json.dumps({"index": args.index, "chunks": len(store), "skipped": store.meta.get("skipped_files", [])}))
    return 0


def _post(server: str, route: str, payload: dict) -> dict:
    resp = httpx.post(server.rstrip("/") + route, json=payload, timeout=600)
    if resp.status_code >= 500:
        raise UpstreamError(f"server error {resp.status_code}: {resp.text[:200]}", server)
    if resp.status_code >= 400:
        raise ContractViolation(f"server rejected request ({resp.status_code}): {resp.text[:200]}")
    return resp.json()


def cmd_query(args) -> int:
    payload = {"question": args.question, "qtype": args.qtype, "options": args.option or None}
    if args.server:
        body = _post(args.server, "/query", payload)
        answer, trace = body["answer"], body["trace"]
    else:
        answer, tr = _pipeline(args).answer_with_feedback(args.question, args.qtype, args.option or None)
        trace = tr.to_record()
    if args.trace:
        Path(args.trace).write_text(json.dumps(trace, sort_keys=True) + "\n", encoding="utf-8")
    print(answer)
    return 0


def cmd_eval(args) -> int:
    from .pipeline import evaluate, load_dataset

    records, bad = load_dataset(args.dataset)
    if args.server:
        body = _post(args.server, "/evaluate", {"records": [r.model_dump() for r in records]})
        lines = body["results"] + body["summary"] + [{"n_malformed": bad, "n_questions": len(records)}]
        summary = body["summary"]
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.writelines(json.dumps(x, sort_keys=True) + "\n" for x in lines)
    else:
        report = evaluate(_pipeline(args), records, bad)
        summary = report.summary
        if args.report:
            report.write(args.report)
    for row in summary:
        print(json.dumps(row, sort_keys=True))
    return 0


def cmd_segment(args) -> int:
    from .segmenter import load_model, segment_corpus

    cfg = _config(args)
    text = Path(args.text).read_text(encoding="utf-8")
    model = load_model(args.seg_model)
    for c in segment_corpus(text, model, cfg.embedder, cfg.ss, cfg.l, Path(args.text).name):
        print(json.dumps(c.to_record(), ensure_ascii=False))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .segmenter import load_model
    from .service import create_app

    model = load_model(args.seg_model) if args.seg_model else None
    uvicorn.run(create_app(_pipeline(args), model), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sage", description="precise-retrieval RAG engine")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-seg", help="train the sentence-pair segmentation model")
    p.add_argument("--corpus", required=True, help="directory of UTF-8 .txt files")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratio", type=float, default=1.0, help="negative pairs per positive pair")
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.set_defaults(func=cmd_train_seg)

    p = sub.add_parser("build", help="segment, embed and index a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--seg-model", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_build)

    for name, func, text in (
        ("query", cmd_query, "answer one question with the feedback loop"),
        ("eval", cmd_eval, "score a JSONL dataset and write a report"),
    ):
        p = sub.add_parser(name, help=text)
        if name == "query":
            p.add_argument("--question", required=True)
            p.add_argument("--qtype", choices=["open-ended", "multiple-choice"], default="open-ended")
            p.add_argument("--option", action="append", help="answer option (repeat for each)")
            p.add_argument("--trace", help="write the query trace as JSON")
        else:
            p.add_argument("--dataset", required=True)
            p.add_argument("--report", help="write per-question and summary records as JSONL")
        p.add_argument("--index", help="index directory (local mode)")
        p.add_argument("--server", help="base URL of a running `sage serve` (client mode)")
        p.add_argument("--mock-script", help="JSONL script for a scripted mock LLM")
        _add_config_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("segment", help="print fine chunk boundaries for a text file")
    p.add_argument("--text", required=True)
    p.add_argument("--seg-model", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("serve", help="serve an index over HTTP")
    p.add_argument("--index", required=True)
    p.add_argument("--seg-model")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--mock-script")
    _add_config_args(p)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command in ("query", "eval") and not (args.index or args.server):
        parser.error("one of --index or --server is required")
    try:
        return args.func(args)
    except (SageError, OSError, httpx.HTTPError) as exc:
        print(f"sage: error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
