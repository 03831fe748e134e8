import argparse
import logging
from pathlib import Path

from spacetoken.commands.base import RunRecorder, dump, existing_dir, existing_file
from spacetoken.conf import CONFIG
from spacetoken.evalbench.ablation import PRESETS, preset_matrix, run_ablation
from spacetoken.evalbench.models import AblationMatrix
from spacetoken.evalbench.report import REPORT_MD, write_report
from spacetoken.scene_synth.dataset import load_dataset
from spacetoken.utils import read_json

LOGGER = logging.getLogger(__name__)


def add_parser(subparsers: argparse._SubParsersAction):
    parser = subparsers.add_parser("ablate", help="Train and compare a matrix of configurations")
    parser.add_argument("--data", type=existing_dir, required=True)
    parser.add_argument("--out", type=Path, required=True)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--matrix", type=existing_file, help="Ablation matrix JSON")
    source.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--seeds", type=int, nargs="+")
    parser.add_argument("--max-steps", type=int)
    parser.add_argument("--protocol", choices=["uniad", "stp3"])
    parser.add_argument("--workers", type=int, default=CONFIG.run.workers)
    parser.set_defaults(func=run)


def resolve_matrix(args: argparse.Namespace) -> AblationMatrix:
    given = {"seeds": args.seeds, "max_steps": args.max_steps, "protocol": args.protocol}
    given = {k: v for k, v in given.items() if v is not None}
    if args.preset:
        return preset_matrix(args.preset, **given)
    return AblationMatrix.model_validate(read_json(args.matrix) | given)


def run(args: argparse.Namespace):
    matrix = resolve_matrix(args)
    scenes = load_dataset(args.data)
    recorder = RunRecorder("ablate", args.out, {"matrix": dump(matrix), "data": str(args.data)})
    cells = run_ablation(matrix, scenes, args.out / "cells", workers=args.workers)
    for path in write_report(matrix, cells, args.out):
        recorder.output(path.name, path)
    recorder.finish()
    print((args.out / REPORT_MD).read_text())
