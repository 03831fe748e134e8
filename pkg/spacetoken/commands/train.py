import argparse
import logging
from pathlib import Path

from spacetoken.commands.base import RunRecorder, dump, existing_dir, existing_file, overrides
from spacetoken.commands.models import ExperimentConfig
from spacetoken.globs import default_vocab
from spacetoken.planner.models import ModelConfig
from spacetoken.planner.state import init_state
from spacetoken.scene_synth.dataset import load_dataset
from spacetoken.trainer.batching import split_by_seed_parity
from spacetoken.trainer.loop import METRICS_FILE, Trainer
from spacetoken.trainer.models import TrainConfig
from spacetoken.utils import read_json

LOGGER = logging.getLogger(__name__)

MODEL_FLAGS = (
    "mode",
    "width",
    "layers",
    "heads",
    "image_size",
    "patch_size",
    "inject_visual",
    "encode_text_coords",
    "encode_ego",
    "use_ego_status",
    "pe_base",
    "alpha_init",
    "alpha_learnable",
    "pe_encoder",
    "pe_decoder",
    "task_specific",
    "feed_back_waypoints",
)
TRAIN_FLAGS = ("epochs", "batch_size", "lr", "loss", "seed", "ckpt_every", "reg_weight")


def add_model_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("model")
    group.add_argument("--mode", choices=["spatial_pe", "digit_text"])
    group.add_argument("--width", type=int)
    group.add_argument("--layers", type=int)
    group.add_argument("--heads", type=int)
    group.add_argument("--image-size", type=int, help="Must match the dataset renders")
    group.add_argument("--patch-size", type=int)
    for flag in (
        "inject_visual",
        "encode_text_coords",
        "encode_ego",
        "use_ego_status",
        "alpha_learnable",
        "task_specific",
        "feed_back_waypoints",
    ):
        group.add_argument(
            f"--{flag.replace('_', '-')}", action=argparse.BooleanOptionalAction, default=None
        )
    group.add_argument("--pe-base", type=float)
    group.add_argument("--alpha-init", type=float)
    group.add_argument("--pe-encoder", choices=["sincos", "mlp"])
    group.add_argument("--pe-decoder", choices=["mlp", "sincos"])


def add_parser(subparsers: argparse._SubParsersAction):
    parser = subparsers.add_parser("train", help="Train a planner on a dataset")
    parser.add_argument("--data", type=existing_dir, required=True)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--config", type=existing_file, help="Experiment config JSON")
    parser.add_argument(
        "--split",
        choices=["all", "train"],
        default="all",
        help="train: only even-seed scenes, keeping odd seeds held out",
    )
    parser.add_argument("--max-steps", type=int)
    parser.add_argument("--resume", type=existing_dir, help="Checkpoint directory to resume")
    add_model_flags(parser)
    group = parser.add_argument_group("training")
    group.add_argument("--epochs", type=int)
    group.add_argument("--batch-size", type=int)
    group.add_argument("--lr", type=float)
    group.add_argument("--loss", choices=["huber", "mae", "mse"])
    group.add_argument("--seed", type=int)
    group.add_argument("--ckpt-every", type=int)
    group.add_argument("--reg-weight", type=float)
    parser.set_defaults(func=run)


def resolve_config(args: argparse.Namespace) -> tuple[ModelConfig, TrainConfig]:
    experiment = ExperimentConfig()
    if args.config:
        experiment = ExperimentConfig.model_validate(read_json(args.config))
    model = ModelConfig.model_validate(experiment.model.model_dump() | overrides(args, MODEL_FLAGS))
    train = TrainConfig.model_validate(experiment.train.model_dump() | overrides(args, TRAIN_FLAGS))
    return model, train


def run(args: argparse.Namespace):
    model, cfg = resolve_config(args)
    scenes = load_dataset(args.data)
    if args.split == "train":
        scenes, _ = split_by_seed_parity(scenes)
    recorder = RunRecorder(
        "train",
        args.out,
        {"model": dump(model), "train": dump(cfg), "data": str(args.data), "split": args.split},
        seed=cfg.seed,
    )
    if args.resume:
        trainer = Trainer.resume(args.resume, cfg, args.out)
    else:
        state = init_state(model, default_vocab(), cfg.seed)
        LOGGER.info(f"Training {model.mode} planner with {state.num_parameters} parameters")
        trainer = Trainer(state, cfg, args.out)
    result = trainer.train(scenes, max_steps=args.max_steps)
    if result.first and result.last:
        LOGGER.info(f"Total loss {result.first.total:.4f} -> {result.last.total:.4f}")
    recorder.output("metrics", args.out / METRICS_FILE)
    recorder.output("checkpoint", Path(result.checkpoint))
    recorder.finish()
