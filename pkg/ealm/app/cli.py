"""CLI commands for ealm."""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from app.config import Config, ConfigError, parse_config
from app.services.corpus import (
    CorpusError,
    build_vocab,
    load_corpus,
    load_stopwords,
    read_lines,
    tokenize,
)
from app.services.evaluation import (
    DEFAULT_BYTE_CAP,
    EvaluationError,
    evaluate_files,
    format_report,
    lead_n,
)
from app.services.inference import explain, summarize
from app.services.language_model import train_lm
from app.services.model_store import (
    ModelFormatError,
    load_agent,
    load_lm,
    save_agent,
    save_lm,
)
from app.services.trainer import train, write_training_log
from app.version import __version__
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging() -> None:
    """Load ``.env`` and configure the root logger from ``EALM_LOG_LEVEL``."""
    load_dotenv()
    level_name = os.getenv("EALM_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=LOG_FORMAT)


def _config(args: argparse.Namespace, **flags) -> Config:
    flags.setdefault("seed", args.seed)
    return parse_config(args.config, args.set or (), flags)


def _write_lines(path: str | Path, lines: Sequence[str]) -> None:
    destination = Path(path)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with destination.open("w", encoding="utf-8") as output_file:
        for line in lines:
            output_file.write(line + "\n")


def cmd_lm_train(args: argparse.Namespace) -> int:
    cfg = _config(
        args,
        corpus_path=args.corpus,
        stopwords_path=args.stopwords,
        lm_order=args.order,
        lm_smoothing=args.smoothing,
    )
    if not cfg.corpus_path:
        raise ConfigError("No corpus given (use --corpus or corpus_path)", key="corpus_path")

    corpus = load_corpus(cfg.corpus_path, cfg.max_len, cfg.sample_size, cfg.seed)
    if not corpus:
        raise CorpusError(f"No usable sentences in {cfg.corpus_path}")
    vocab = build_vocab(corpus, cfg.min_freq)
    vocab = vocab.with_stopwords(
        load_stopwords(cfg.stopwords_path, vocab, cfg.rare_cutoff)
    )
    lm = train_lm(
        corpus,
        order=cfg.lm_order,
        smoothing=cfg.lm_smoothing,
        vocab=vocab,
        lambda_left=cfg.lm_lambda_left,
        embedding_dim=cfg.embedding_dim,
        window=cfg.cooccurrence_window,
    )
    save_lm(lm, args.out)
    return 0


def _run_path(base: str, run: int) -> str:
    return base if run == 0 else f"{base}.run{run}"


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _config(
        args, corpus_path=args.corpus, episodes=args.episodes, llh_mode=args.llh_mode
    )
    if not cfg.corpus_path:
        raise ConfigError("No corpus given (use --corpus or corpus_path)", key="corpus_path")
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1", key="runs")

    lm = load_lm(args.lm)
    corpus = load_corpus(
        cfg.corpus_path, cfg.max_len, cfg.sample_size, cfg.seed, vocab=lm.vocab
    )
    if not corpus:
        raise CorpusError(f"No usable sentences in {cfg.corpus_path}")

    for run in range(args.runs):
        run_cfg = cfg.model_copy(update={"seed": cfg.seed + run})
        logger.info(f"Starting training run {run + 1}/{args.runs} (seed {run_cfg.seed})")
        result = train(corpus, lm, run_cfg)
        save_agent(result.params, run_cfg.reward, _run_path(args.out, run))
        if args.log:
            write_training_log(result.log, _run_path(args.log, run))
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    cfg = _config(args, inference_rr_mode=args.rr_mode)
    lm = load_lm(args.lm)
    params, reward_cfg = load_agent(args.model)

    summaries: List[str] = []
    for number, line in enumerate(read_lines(args.input), start=1):
        x = tokenize(line)
        if x.n == 0:
            logger.warning(f"Line {number} of {args.input} is empty")
            summaries.append("")
            continue
        result = summarize(x, params, lm, reward_cfg, cfg.inference_rr_mode)
        summaries.append(result.y.text)

    _write_lines(args.output, summaries)
    logger.info(f"Wrote {len(summaries)} summaries to {args.output}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    references = [path for path in args.references.split(",") if path]
    report = evaluate_files(args.candidates, args.sources, references, args.cap)
    print(format_report(report, machine=args.machine), end="")
    return 0


def cmd_lead(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise ConfigError("--n must be >= 1", key="n")
    leads = [lead_n(tokenize(line), args.n).text for line in read_lines(args.input)]
    _write_lines(args.output, leads)
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    cfg = _config(args, inference_rr_mode=args.rr_mode)
    lm = load_lm(args.lm)
    params, reward_cfg = load_agent(args.model)
    x = tokenize(args.sentence)
    if x.n == 0:
        raise CorpusError("--sentence is empty")
    print(explain(x, params, lm, reward_cfg, cfg.inference_rr_mode), end="")
    return 0


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Flat YAML config file (default: $EALM_CONFIG)")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="Override one config key (repeatable)",
    )
    parser.add_argument("--seed", type=int, help="Seed for every stochastic component")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ealm", description="Edit-based unsupervised sentence summarization"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="<command>")

    lm_train = commands.add_parser("lm-train", help="Train the masked language model")
    lm_train.add_argument("--corpus", help="One pre-tokenized sentence per line")
    lm_train.add_argument("--stopwords", help="Stopword list, one word per line")
    lm_train.add_argument("--order", type=int, help="n-gram order")
    lm_train.add_argument("--smoothing", type=float, help="Add-k smoothing constant")
    lm_train.add_argument("--out", required=True, help="Model file to write")
    _add_config_options(lm_train)
    lm_train.set_defaults(handler=cmd_lm_train)

    train_cmd = commands.add_parser("train", help="Train the editorial agent")
    train_cmd.add_argument("--corpus", help="One pre-tokenized sentence per line")
    train_cmd.add_argument("--lm", required=True, help="Language model file")
    train_cmd.add_argument("--out", required=True, help="Agent file to write")
    train_cmd.add_argument("--episodes", type=int, help="Number of training episodes")
    train_cmd.add_argument(
        "--llh-mode", choices=["geo", "raw"], help="Quantity compared with llh_threshold"
    )
    train_cmd.add_argument("--log", help="Write the training log as JSON lines")
    train_cmd.add_argument("--runs", type=int, default=1, help="Independent runs")
    _add_config_options(train_cmd)
    train_cmd.set_defaults(handler=cmd_train)

    summarize_cmd = commands.add_parser("summarize", help="Summarize sentences")
    summarize_cmd.add_argument("--model", required=True, help="Agent file")
    summarize_cmd.add_argument("--lm", required=True, help="Language model file")
    summarize_cmd.add_argument("--input", required=True, help="Sentences to summarize")
    summarize_cmd.add_argument("--output", required=True, help="Summaries to write")
    summarize_cmd.add_argument("--rr-mode", choices=["exact", "relaxed"])
    _add_config_options(summarize_cmd)
    summarize_cmd.set_defaults(handler=cmd_summarize)

    evaluate_cmd = commands.add_parser("evaluate", help="Score summaries")
    evaluate_cmd.add_argument("--candidates", required=True)
    evaluate_cmd.add_argument("--sources", required=True)
    evaluate_cmd.add_argument(
        "--references", required=True, help="Comma-separated reference files"
    )
    evaluate_cmd.add_argument("--cap", type=int, default=DEFAULT_BYTE_CAP)
    evaluate_cmd.add_argument(
        "--machine", action="store_true", help="Append a key=value block"
    )
    evaluate_cmd.set_defaults(handler=cmd_evaluate)

    lead = commands.add_parser("lead", help="Lead-N baseline")
    lead.add_argument("--input", required=True)
    lead.add_argument("--output", required=True)
    lead.add_argument("--n", type=int, default=8)
    lead.set_defaults(handler=cmd_lead)

    trace = commands.add_parser("trace", help="Show a greedy episode step by step")
    trace.add_argument("--model", required=True, help="Agent file")
    trace.add_argument("--lm", required=True, help="Language model file")
    trace.add_argument("--sentence", required=True, help="Pre-tokenized sentence")
    trace.add_argument("--rr-mode", choices=["exact", "relaxed"])
    _add_config_options(trace)
    trace.set_defaults(handler=cmd_trace)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point. Returns 0 on success, 1 on failure and 2 on usage errors."""
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return 1
    except (CorpusError, ModelFormatError, EvaluationError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
