from spacetoken.trainer.batching import epoch_batches, split_by_seed_parity
from spacetoken.trainer.losses import batch_loss, huber, mae, mse, regression_loss, sample_loss
from spacetoken.trainer.loop import METRICS_FILE, Trainer, train
from spacetoken.trainer.models import (
    EpochSummary,
    LossReport,
    TrainConfig,
    TrainerState,
    TrainingDivergedError,
    TrainResult,
)
from spacetoken.trainer.optim import AdamW, cosine_lr

__all__ = [
    "METRICS_FILE",
    "AdamW",
    "EpochSummary",
    "LossReport",
    "TrainConfig",
    "TrainResult",
    "Trainer",
    "TrainerState",
    "TrainingDivergedError",
    "batch_loss",
    "cosine_lr",
    "epoch_batches",
    "huber",
    "mae",
    "mse",
    "regression_loss",
    "sample_loss",
    "split_by_seed_parity",
    "train",
]
