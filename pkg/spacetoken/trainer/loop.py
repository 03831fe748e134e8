import csv
import logging
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from spacetoken.conf import CONFIG
from spacetoken.diffcore.tensor import backward
from spacetoken.planner.checkpoint import load_checkpoint, save_checkpoint
from spacetoken.planner.state import PlannerState
from spacetoken.scene_synth.models import DatasetError, Scene
from spacetoken.trainer.batching import epoch_batches, steps_per_epoch
from spacetoken.trainer.losses import batch_loss
from spacetoken.trainer.models import (
    EpochSummary,
    LossReport,
    TrainConfig,
    TrainerState,
    TrainingDivergedError,
    TrainResult,
)
from spacetoken.trainer.optim import AdamW, clip_grad_norm, cosine_lr
from spacetoken.utils import read_json, write_json

LOGGER = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
METRICS_COLUMNS = ("step", "lm_loss", "reg_loss", "total", "lr")
TRAINER_STATE_FILE = "trainer_state.json"
TRAIN_CONFIG_FILE = "train_config.json"
CHECKPOINTS_DIR = "checkpoints"
FINAL_DIR = "final"


def checkpoint_dir(out: Path, step: int) -> Path:
    return out / CHECKPOINTS_DIR / f"step-{step:06d}"


class Trainer:
    """
    Teacher-forced training of one planner. Owns the parameter store for the
    duration of the run; checkpoints carry weights, optimizer moments and the
    position in the epoch so a resumed run continues bit-identically.
    """

    def __init__(self, state: PlannerState, cfg: TrainConfig, out: Path):
        self.state = state
        self.cfg = cfg
        self.out = out
        self.optimizer = AdamW(state.store, cfg)
        self.progress: TrainerState | None = None
        self.last_good: Path | None = None
        every = cfg.ckpt_every if cfg.ckpt_every is not None else CONFIG.run.ckpt_every
        self.ckpt_every = max(every, 0)

    @classmethod
    def resume(cls, directory: Path, cfg: TrainConfig, out: Path) -> "Trainer":
        trainer = cls(load_checkpoint(directory), cfg, out)
        trainer.progress = TrainerState.model_validate(read_json(directory / TRAINER_STATE_FILE))
        trainer.optimizer.load(directory, trainer.progress.optimizer_steps)
        trainer.last_good = directory
        LOGGER.info(f"Resuming at step {trainer.progress.step} from {directory}")
        return trainer

    def save(self, directory: Path):
        assert self.progress is not None, "Invariant: saving requires an active run"
        save_checkpoint(directory, self.state)
        self.optimizer.save(directory)
        write_json(directory / TRAINER_STATE_FILE, self.progress)
        write_json(directory / TRAIN_CONFIG_FILE, self.cfg)
        self.last_good = directory

    def _append_metrics(self, report: LossReport):
        path = self.out / METRICS_FILE
        fresh = not path.exists()
        with open(path, "a", newline="") as f:
            writer = csv.writer(f)
            if fresh:
                writer.writerow(METRICS_COLUMNS)
            writer.writerow([report.step, report.lm_loss, report.reg_loss, report.total, report.lr])

    def _diverged(self, report: LossReport):
        message = f"loss diverged at step {report.step} (total={report.total})"
        if self.last_good is not None:
            self.state.store.load(self.last_good)
            self.progress = TrainerState.model_validate(
                read_json(self.last_good / TRAINER_STATE_FILE)
            )
            self.optimizer.load(self.last_good, self.progress.optimizer_steps)
            message += f"; weights and optimizer restored from {self.last_good}"
        LOGGER.error(message)
        raise TrainingDivergedError(message)

    def train(
        self,
        scenes: Sequence[Scene],
        max_steps: int | None = None,
        on_epoch_end: Callable[[int, PlannerState], None] | None = None,
    ) -> TrainResult:
        """
        Runs the configured epochs (or stops after ``max_steps`` optimizer steps)
        and returns the per-epoch summaries and the final checkpoint directory.
        ``on_epoch_end`` is the evaluation hook, called after each full epoch.
        """
        if not scenes:
            raise DatasetError("cannot train on an empty dataset")
        self.out.mkdir(parents=True, exist_ok=True)
        per_epoch = steps_per_epoch(len(scenes), self.cfg.batch_size)
        if self.progress is None:
            self.progress = TrainerState(total_steps=self.cfg.epochs * per_epoch)
            self.save(checkpoint_dir(self.out, 0))
        progress = self.progress

        first: LossReport | None = None
        last: LossReport | None = None
        summaries: list[EpochSummary] = []
        stop = False
        while progress.epoch < self.cfg.epochs and not stop:
            epoch = progress.epoch
            reports: list[LossReport] = []
            batches = epoch_batches(len(scenes), self.cfg.batch_size, self.cfg.seed, epoch)
            for batch in batches[progress.batch :]:
                report = self._step([scenes[i] for i in batch])
                first = first or report
                last = report
                reports.append(report)
                progress.batch += 1
                if self.ckpt_every and progress.step % self.ckpt_every == 0:
                    self.save(checkpoint_dir(self.out, progress.step))
                if max_steps is not None and progress.step >= max_steps:
                    stop = True
                    break
            if not stop:
                progress.epoch += 1
                progress.batch = 0
            if reports:
                summaries.append(self._summarize(epoch, reports))
            if not stop and self.ckpt_every == 0:
                self.save(checkpoint_dir(self.out, progress.step))
            if not stop and on_epoch_end is not None:
                on_epoch_end(epoch, self.state)

        final = self.out / FINAL_DIR
        self.save(final)
        return TrainResult(first=first, last=last, epochs=summaries, checkpoint=str(final))

    def _step(self, batch: list[Scene]) -> LossReport:
        progress = self.progress
        lr = cosine_lr(progress.step, progress.total_steps, self.cfg.lr)
        self.state.store.zero_grad()
        total, report = batch_loss(batch, self.state, self.cfg, progress.step)
        report.lr = lr
        if not report.finite:
            self._diverged(report)
        backward(total)
        norm = clip_grad_norm(self.state.store, self.cfg.grad_clip)
        if not np.isfinite(norm):
            self._diverged(report)
        self.optimizer.step(lr)
        progress.step += 1
        progress.optimizer_steps = self.optimizer.steps
        self._append_metrics(report)
        LOGGER.info(
            f"step {report.step}: lm_loss={report.lm_loss:.4f} "
            f"reg_loss={report.reg_loss:.4f} lr={lr:.2e}"
        )
        return report

    def _summarize(self, epoch: int, reports: list[LossReport]) -> EpochSummary:
        residuals = [r for report in reports for r in report.residuals]
        summary = EpochSummary(
            epoch=epoch,
            steps=len(reports),
            lm_loss=float(np.mean([r.lm_loss for r in reports])),
            reg_loss=float(np.mean([r.reg_loss for r in reports])),
            total=float(np.mean([r.total for r in reports])),
            mean_residual=float(np.mean(residuals)) if residuals else None,
        )
        LOGGER.info(
            f"epoch {epoch}: {summary.steps} steps, total={summary.total:.4f}, "
            f"mean residual={summary.mean_residual}"
        )
        return summary


def train(
    scenes: Sequence[Scene], state: PlannerState, cfg: TrainConfig, out: Path
) -> TrainResult:
    return Trainer(state, cfg, out).train(scenes)
