import argparse
import logging
from pathlib import Path

from spacetoken.commands.base import RunRecorder, UsageError, existing_dir, existing_file
from spacetoken.evalbench.models import EvaluationReport
from spacetoken.planner.checkpoint import load_checkpoint
from spacetoken.planner.generate import generate
from spacetoken.plots import plot_endpoint_fan, plot_loss_curves, plot_trajectory
from spacetoken.scene_synth.dataset import read_dataset
from spacetoken.scene_synth.models import DatasetError
from spacetoken.utils import read_json

LOGGER = logging.getLogger(__name__)


def add_parser(subparsers: argparse._SubParsersAction):
    parser = subparsers.add_parser("plot", help="Write SVG figures")
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--report", type=existing_file, help="evaluation.json from eval")
    parser.add_argument("--metrics", type=existing_file, help="metrics.csv from train")
    parser.add_argument("--data", type=existing_dir, help="Dataset holding --scene")
    parser.add_argument("--scene", type=int, nargs="+", help="Scene seeds to overlay")
    parser.add_argument("--ckpt", type=existing_dir, help="Checkpoint predicting the overlays")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace):
    if not (args.report or args.metrics or args.scene):
        raise UsageError("plot needs --report, --metrics or --scene")
    if args.scene and not args.data:
        raise UsageError("--scene needs --data")
    recorder = RunRecorder(
        "plot",
        args.out,
        {
            "report": args.report and str(args.report),
            "metrics": args.metrics and str(args.metrics),
            "data": args.data and str(args.data),
            "scenes": args.scene,
            "ckpt": args.ckpt and str(args.ckpt),
        },
    )
    if args.report:
        report = EvaluationReport.model_validate(read_json(args.report))
        recorder.output("endpoint_fan", plot_endpoint_fan(report, args.out / "endpoint_fan.svg"))
    if args.metrics:
        recorder.output("loss_curves", plot_loss_curves(args.metrics, args.out / "loss_curves.svg"))
    if args.scene:
        wanted = set(args.scene)
        state = load_checkpoint(args.ckpt) if args.ckpt else None
        found = set()
        for scene in read_dataset(args.data):
            if scene.seed not in wanted:
                continue
            found.add(scene.seed)
            predicted = generate(scene, state).waypoints if state else None
            path = plot_trajectory(scene, predicted, args.out / f"scene-{scene.seed}.svg")
            recorder.output(f"scene-{scene.seed}", path)
        if missing := wanted - found:
            raise DatasetError(f"scenes {sorted(missing)} are not in {args.data}")
    recorder.finish()
