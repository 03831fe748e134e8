import argparse
import logging
from pathlib import Path

from spacetoken.commands.base import RunRecorder, dump
from spacetoken.scene_synth.dataset import INDEX_FILE, write_dataset
from spacetoken.scene_synth.generator import generate_scene
from spacetoken.scene_synth.models import SceneConfig
from spacetoken.utils import file_sha256

LOGGER = logging.getLogger(__name__)


def parse_mix(value: str) -> dict[str, float]:
    """``"straight=2,curve=1"`` to a weight mapping."""
    mix = {}
    for part in value.split(","):
        name, _, weight = part.partition("=")
        try:
            mix[name.strip()] = float(weight) if weight else 1.0
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"bad weight in {part!r}") from e
    return mix


def add_parser(subparsers: argparse._SubParsersAction):
    parser = subparsers.add_parser("gen-data", help="Generate a synthetic scene dataset")
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--scenes", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0, help="Seed of the first scene")
    parser.add_argument("--templates", type=parse_mix, help='e.g. "straight=2,curve=1"')
    parser.add_argument("--commands", type=parse_mix, help='e.g. "straight=1,left=1,right=1"')
    parser.add_argument("--image-size", type=int)
    parser.add_argument("--max-agents", type=int)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace):
    updates = {
        "templates": args.templates,
        "command_mix": args.commands,
        "image_size": args.image_size,
        "max_agents": args.max_agents,
    }
    config = SceneConfig.model_validate({k: v for k, v in updates.items() if v is not None})
    recorder = RunRecorder(
        "gen-data",
        args.out,
        {"scenes": args.scenes, "first_seed": args.seed, "scene_config": dump(config)},
        seed=args.seed,
    )
    seeds = range(args.seed, args.seed + args.scenes)
    count = write_dataset(args.out, (generate_scene(seed, config) for seed in seeds))
    index = args.out / INDEX_FILE
    recorder.output("index", index)
    recorder.manifest.config["index_sha256"] = file_sha256(index)
    LOGGER.info(f"Generated {count} scenes, index hash {file_sha256(index)[:12]}")
    recorder.finish()
