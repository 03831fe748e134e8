import argparse
import logging
from pathlib import Path

from spacetoken.commands.base import RunRecorder, dump, existing_dir
from spacetoken.evalbench.evaluate import evaluate
from spacetoken.planner.checkpoint import load_checkpoint
from spacetoken.scene_synth.dataset import load_dataset
from spacetoken.trainer.batching import split_by_seed_parity
from spacetoken.utils import write_json

LOGGER = logging.getLogger(__name__)

REPORT_FILE = "evaluation.json"


def add_parser(subparsers: argparse._SubParsersAction):
    parser = subparsers.add_parser("eval", help="Open-loop evaluation of a checkpoint")
    parser.add_argument("--data", type=existing_dir, required=True)
    parser.add_argument("--ckpt", type=existing_dir, required=True)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--protocol", choices=["uniad", "stp3"], default="uniad")
    parser.add_argument(
        "--split",
        choices=["all", "val"],
        default="all",
        help="val: only odd-seed scenes, the held-out half",
    )
    parser.set_defaults(func=run)


def run(args: argparse.Namespace):
    state = load_checkpoint(args.ckpt)
    scenes = load_dataset(args.data)
    if args.split == "val":
        _, scenes = split_by_seed_parity(scenes)
    recorder = RunRecorder(
        "eval",
        args.out,
        {
            "model": dump(state.config),
            "ckpt": str(args.ckpt),
            "data": str(args.data),
            "protocol": args.protocol,
            "split": args.split,
        },
    )
    report = evaluate(scenes, state, args.protocol)
    path = args.out / REPORT_FILE
    write_json(path, report)
    recorder.output("report", path)
    recorder.finish()
    print(report.metrics.model_dump_json(indent=2))
