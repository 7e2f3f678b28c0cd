"""Command line entry point.

Exit status is 0 on success, 1 on usage errors and 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import levt
from .corpus import load_jsonl
from .errors import SgmError
from .pipeline import (EvalReport, PipelineConfig, Resources, evaluate, levt_context,
                       levt_examples, load_variants, run_record, write_report)
from .search import load_index, retrieve, save_index, tfidf_index
from .tokenize import build_vocab, detokenize, tokenize

log = logging.getLogger("sgmrepair")


class UsageError(Exception):
    def __init__(self, message, usage=None):
        super().__init__(message)
        self.usage = usage


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}", self.format_usage())


def _csv(text):
    return [p for p in text.split(",") if p]


def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--config", help="JSON file with PipelineConfig fields")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = Parser(prog="sgmrepair", description="search, generate and modify code patches")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=Parser)

    p = sub.add_parser("index", parents=[common], help="build a TF-IDF patch index")
    p.add_argument("--corpus", help="JSONL patch database")
    p.add_argument("--out", required=True)
    p.add_argument("--modalities", type=_csv, help="record fields embedded as the query side")

    p = sub.add_parser("search", parents=[common], help="query a patch index")
    p.add_argument("--index", help="index file")
    p.add_argument("--query", required=True, help="query text; use ' <s> ' to join modalities")
    p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("train-levt", parents=[common], help="train the edit model")
    p.add_argument("--train", help="training JSONL")
    p.add_argument("--eval", dest="eval_path", help="validation JSONL")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=levt.TrainConfig.lr)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--modalities", type=_csv, help="encoder input modalities")

    p = sub.add_parser("generate", parents=[common], help="search + generate candidates")
    p.add_argument("--corpus", help="JSONL records to patch")
    p.add_argument("--index", help="index file")
    p.add_argument("--generator", choices=["identity", "retrieval_copy", "remote"])
    p.add_argument("--url", help="remote generator endpoint")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--out", help="output JSONL (stdout if omitted)")

    p = sub.add_parser("modify", parents=[common], help="refine candidates with a LevT model")
    p.add_argument("--corpus", help="JSONL records supplying context")
    p.add_argument("--checkpoint", help="LevT checkpoint")
    p.add_argument("--candidates", help="JSONL from `generate`; defaults to the buggy lines")
    p.add_argument("--iterations", type=int)
    p.add_argument("--out", help="output JSONL (stdout if omitted)")

    p = sub.add_parser("eval", parents=[common], help="evaluate pipeline variants")
    p.add_argument("--out", help="report directory (overrides report_dir)")

    p = sub.add_parser("report", parents=[common], help="emit CSV/JSON tables from an eval")
    p.add_argument("--eval", dest="eval_report", help="eval_report.json from `eval`")
    p.add_argument("--out", help="output directory")
    return parser


def _load_config(args) -> dict:
    if not args.config:
        return {}
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {args.config}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return data


def _base_config(args, raw: dict) -> PipelineConfig:
    raw = {k: v for k, v in raw.items() if k not in ("variants", "baseline")}
    cfg = PipelineConfig.from_dict(raw)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _need(value, what):
    if not value:
        raise UsageError(f"missing {what}")
    return value


def _emit(lines, out):
    text = "".join(json.dumps(obj) + "\n" for obj in lines)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_index(args, cfg):
    corpus = load_jsonl(_need(args.corpus or cfg.database_path, "--corpus"))
    modalities = args.modalities or cfg.query_modalities
    index = tfidf_index(corpus, modalities)
    save_index(index, args.out)
    log.info("indexed %d records into %s", len(index), args.out)


def cmd_search(args, cfg):
    index = load_index(_need(args.index or cfg.index_path, "--index"))
    hits = retrieve(args.query, index, args.k, index.embedder())
    print(json.dumps([h.to_dict() for h in hits], indent=2))


def cmd_train(args, cfg):
    train_set = load_jsonl(_need(args.train or cfg.train_path, "--train"))
    eval_path = args.eval_path or cfg.eval_path
    eval_set = load_jsonl(eval_path, "eval") if eval_path else None
    modalities = args.modalities or cfg.levt_modalities
    train_x = levt_examples(train_set, modalities)
    eval_x = levt_examples(eval_set, modalities) if eval_set else []
    vocab = build_vocab(e.source + e.target + e.context for e in train_x)
    model_cfg = levt.LevTConfig(d_model=args.d_model, n_enc_layers=args.layers,
                                n_dec_layers=args.layers, ffn_dim=2 * args.d_model,
                                seed=cfg.seed)
    model = levt.LevTModel(model_cfg, vocab)
    train_cfg = levt.TrainConfig(lr=args.lr, batch_size=args.batch_size,
                                 max_epochs=args.epochs, patience=args.patience, seed=cfg.seed)
    model, history = levt.train(model, train_x, eval_x, train_cfg)
    levt.save_checkpoint(model, args.out)
    print(json.dumps({"checkpoint": args.out, "best_epoch": history.best_epoch,
                      "best_exact_match": history.best_exact_match,
                      "epochs": history.epochs}, indent=2))


def cmd_generate(args, cfg):
    records = load_jsonl(_need(args.corpus or cfg.test_path, "--corpus"), "test")
    overrides = {"modify": False}
    if args.generator:
        overrides["generator"] = args.generator
    if args.url:
        overrides["generator_url"] = args.url
    if args.n:
        overrides["n_generate"] = args.n
    if args.k is not None:
        overrides["k_retrieve"] = args.k
    cfg = replace(cfg, **overrides)
    index_path = args.index or cfg.index_path
    index = load_index(index_path) if index_path else None
    if index is None:
        cfg = replace(cfg, search=False)
    out = []
    for rec in records:
        cands = run_record(rec, cfg, index=index)
        out.append({"id": rec.id, "candidates": [c.to_dict() for c in cands]})
    _emit(out, args.out)


def cmd_modify(args, cfg):
    records = load_jsonl(_need(args.corpus or cfg.test_path, "--corpus"), "test")
    model = levt.load_checkpoint(_need(args.checkpoint or cfg.levt_checkpoint, "--checkpoint"))
    policy = levt.LevTPolicy(model)
    iterations = args.iterations or cfg.refine_iterations
    given = {}
    if args.candidates:
        with open(args.candidates, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    given[obj["id"]] = [c["patch"] for c in obj["candidates"] if not c.get("error")]
    out = []
    for rec in records:
        context = levt_context(rec, cfg.levt_modalities)
        sources = given.get(rec.id, [rec.buggy_only or rec.prev_code])
        refined = []
        for rank, text in enumerate(sources, start=1):
            tokens, trace = levt.refine(policy, tokenize(text), context, iterations)
            refined.append({"rank": rank, "patch": detokenize(tokens), "iterations": len(trace)})
        out.append({"id": rec.id, "candidates": refined})
    _emit(out, args.out)


def cmd_eval(args, raw):
    if not raw:
        raise UsageError("eval needs --config")
    if args.seed is not None:
        raw = {**raw, "seed": args.seed}
    variants, baseline = load_variants(raw)
    base = variants[0]
    test_set = load_jsonl(_need(base.test_path, "test_path in config"), "test")
    database = load_jsonl(base.database_path) if base.database_path else None
    report = evaluate(test_set, variants, baseline, Resources(database=database))
    out_dir = Path(args.out or base.report_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.save(out_dir / "eval_report.json")
    print(json.dumps({k: {"top1": v.top1, "top5": v.top5} for k, v in report.variants.items()},
                     indent=2))


def cmd_report(args, cfg):
    path = args.eval_report or str(Path(cfg.report_dir) / "eval_report.json")
    report = EvalReport.load(path)
    out_dir = args.out or str(Path(path).parent)
    paths = write_report(report, out_dir)
    print(json.dumps({k: str(v) for k, v in paths.items()}, indent=2))


COMMANDS = {
    "index": cmd_index,
    "search": cmd_search,
    "train-levt": cmd_train,
    "generate": cmd_generate,
    "modify": cmd_modify,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("no command given")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        raw = _load_config(args)
        if args.command == "eval":
            cmd_eval(args, raw)
        else:
            COMMANDS[args.command](args, _base_config(args, raw))
    except UsageError as exc:
        sys.stderr.write(exc.usage or parser.format_usage())
        print(str(exc), file=sys.stderr)
        return 1
    except (SgmError, OSError, ValueError, KeyError) as exc:
        print(f"sgmrepair: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
