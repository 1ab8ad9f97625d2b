"""``feedbackctl``: run the feedback-classification pipeline from a config file.

    feedbackctl prepare|embed|train|evaluate|predict|report --config FILE [--set key=value ...]

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError, FeedbackMLError
from .config import load_config
from .stages import Pipeline

COMMANDS = {
    "prepare": "ingest, clean, select the task labels and encode the dataset",
    "embed": "train Word2Vec vectors or load pretrained ones, projected onto the vocabulary",
    "train": "train the configured model (holdout or k-fold)",
    "evaluate": "score trained models on their test partitions",
    "predict": "classify new feedback from a CSV or JSONL file",
    "report": "write class / type / agency distributions for plotting",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="feedbackctl", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND", parser_class=_Parser)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key, e.g. train.max_epochs=10 (repeatable)")
        p.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
        if name == "predict":
            p.add_argument("--input", help="feedback file to classify (overrides predict.input)")
            p.add_argument("--output", help="also copy predictions.jsonl to this path")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    config = load_config(args.config, args.overrides)
    pipeline = Pipeline(config)
    if args.command == "predict":
        out = pipeline.predict(args.input, args.output)
    else:
        out = getattr(pipeline, args.command)()
    print(out)
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except FeedbackMLError as exc:
        print(f"feedbackctl: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
