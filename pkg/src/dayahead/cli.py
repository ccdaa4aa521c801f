"""Command-line entry point: ``dayahead <command> --config pipeline.yaml``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .config import load_config

COMMANDS = ("generate", "preprocess", "tune", "train", "evaluate", "run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dayahead", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline YAML file")
        p.add_argument("--seed", type=int, help="override the top-level seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--scenario", help="only this dataset, season or dataset/season")
        p.add_argument("--full-grid", action="store_true", help="search the full 65,536-candidate grid")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = load_config(args.config).with_overrides(args.seed, args.out, args.full_grid)

    if args.command == "generate":
        for path in pipeline.cmd_generate(cfg):
            print(path)
        return 0
    if args.command == "run":
        report = pipeline.run(cfg, args.scenario)
        print(pipeline.summary_table(report), end="")
    elif args.command == "evaluate":
        report = pipeline.cmd_evaluate(cfg, args.scenario)
        print(pipeline.summary_table(report), end="")
    else:
        handler = {"preprocess": pipeline.cmd_preprocess, "tune": pipeline.cmd_tune, "train": pipeline.cmd_train}
        report = handler[args.command](cfg, args.scenario)
        print(json.dumps(report, indent=1))
    return 1 if report.get("errors") else 0


if __name__ == "__main__":
    sys.exit(main())
