import csv

import numpy as np
import pytest
from pydantic import ValidationError

from spacetoken.diffcore.params import ParameterStore
from spacetoken.diffcore.tensor import backward, constant
from spacetoken.scene_synth import DatasetError
from spacetoken.trainer import (
    METRICS_FILE,
    AdamW,
    LossReport,
    TrainConfig,
    Trainer,
    TrainingDivergedError,
    cosine_lr,
    epoch_batches,
    huber,
    mae,
    mse,
    regression_loss,
    sample_loss,
    split_by_seed_parity,
)
from spacetoken.trainer.batching import steps_per_epoch
from spacetoken.trainer.loop import checkpoint_dir
from spacetoken.trainer.optim import clip_grad_norm


@pytest.mark.parametrize(
    "residual,delta,expected",
    [
        (0.5, 1.0, 0.125),
        (3.0, 1.0, 2.5),
        ([0.5, -3.0], 1.0, 2.625),
        (3.0, 2.0, 4.0),
        (0.0, 1.0, 0.0),
    ],
)
def test_huber(residual, delta, expected):
    assert huber(residual, delta) == pytest.approx(expected)


def test_mae_and_mse():
    assert mae([1.0, -2.0]) == pytest.approx(3.0)
    assert mse([1.0, -2.0]) == pytest.approx(5.0)


@pytest.mark.parametrize("kind", ["huber", "mae", "mse"])
def test_regression_loss_matches_the_scalar_penalties(kind):
    pred = np.array([[0.2, -1.5], [3.0, 0.0]])
    target = np.array([[0.0, 0.0], [0.5, 0.5]])
    penalty = {"huber": huber, "mae": mae, "mse": mse}[kind]
    expected = np.mean([penalty(p - t) for p, t in zip(pred, target, strict=True)])
    loss = regression_loss(constant(pred), target, kind)
    assert loss.item() == pytest.approx(expected, rel=1e-6)


def test_cosine_lr():
    assert cosine_lr(0, 10, 1.0) == pytest.approx(1.0)
    assert cosine_lr(5, 10, 1.0) == pytest.approx(0.5)
    assert cosine_lr(10, 10, 1.0) == pytest.approx(0.0)
    assert cosine_lr(12, 10, 1.0) == pytest.approx(0.0)
    assert cosine_lr(3, 0, 0.1) == 0.1


def test_clip_grad_norm():
    store = ParameterStore()
    store.add("a", np.zeros(2)).grad = np.array([3.0, 4.0], dtype=np.float32)
    assert clip_grad_norm(store, 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose(store["a"].grad, [0.6, 0.8], rtol=1e-6)


def test_adamw_decays_matrices_only():
    store = ParameterStore()
    w = store.add("w", np.ones((2, 2)))
    b = store.add("b", np.ones(2))
    w.grad = np.zeros((2, 2), dtype=w.data.dtype)
    b.grad = np.zeros(2, dtype=b.data.dtype)
    AdamW(store, TrainConfig(weight_decay=0.5)).step(0.1)
    np.testing.assert_allclose(w.data, 0.95, rtol=1e-6)
    np.testing.assert_allclose(b.data, 1.0)


def test_adamw_first_step_moves_by_lr():
    store = ParameterStore()
    x = store.add("x", np.array([1.0, -1.0]))
    backward((x * x).sum())
    AdamW(store, TrainConfig(weight_decay=0.0)).step(0.01)
    # bias-corrected first step is lr * sign(g)
    np.testing.assert_allclose(x.data, [0.99, -0.99], rtol=1e-5)


def test_epoch_batches():
    batches = epoch_batches(10, 4, seed=1, epoch=0)
    assert [len(b) for b in batches] == [4, 4, 2]
    assert sorted(i for b in batches for i in b) == list(range(10))
    assert batches == epoch_batches(10, 4, seed=1, epoch=0)
    assert batches != epoch_batches(10, 4, seed=1, epoch=1)
    assert steps_per_epoch(10, 4) == 3


def test_split_by_seed_parity(scenes):
    train, val = split_by_seed_parity(scenes)
    assert [s.seed for s in train] == [0, 2, 4, 6]
    assert [s.seed for s in val] == [1, 3, 5, 7]


@pytest.mark.parametrize(
    "kwargs",
    [{"epochs": 0}, {"batch_size": 0}, {"lr": 0.0}, {"beta1": 1.0}, {"reg_weight": -1.0}],
)
def test_invalid_train_config(kwargs):
    with pytest.raises(ValidationError):
        TrainConfig(**kwargs)


def test_loss_report_checks_its_total():
    with pytest.raises(ValidationError):
        LossReport(step=0, lm_loss=1.0, reg_loss=1.0, total=3.0)
    assert not LossReport(step=0, lm_loss=float("nan"), reg_loss=0.0, total=0.0).finite


def test_sample_loss_per_mode(tiny_config, make_state, scenes):
    cfg = TrainConfig()
    lm, reg, residuals = sample_loss(scenes[0], make_state(tiny_config), cfg)
    assert lm.item() > 0.0
    assert reg.item() > 0.0
    assert residuals.shape == (6,)

    digits = make_state(tiny_config.model_copy(update={"mode": "digit_text"}))
    lm, reg, residuals = sample_loss(scenes[0], digits, cfg)
    assert reg.item() == 0.0
    assert residuals.size == 0

    whole = make_state(tiny_config.model_copy(update={"task_specific": True}))
    _, reg, residuals = sample_loss(scenes[0], whole, cfg)
    assert reg.item() > 0.0
    assert residuals.shape == (6,)


def _params(state):
    return {name: t.data.copy() for name, t in state.store.items()}


def test_training_writes_metrics_and_checkpoints(
    tiny_config, tiny_train, make_state, scenes, tmp_path
):
    result = Trainer(make_state(tiny_config), tiny_train, tmp_path).train(scenes[:4])
    assert result.first is not None and result.last is not None
    assert len(result.epochs) == 1
    assert result.epochs[0].steps == 2
    assert result.epochs[0].mean_residual is not None
    with open(tmp_path / METRICS_FILE) as f:
        rows = list(csv.DictReader(f))
    assert [int(r["step"]) for r in rows] == [0, 1]
    assert float(rows[0]["lr"]) == pytest.approx(tiny_train.lr)
    assert (checkpoint_dir(tmp_path, 0) / "params.json").exists()
    assert (checkpoint_dir(tmp_path, 2) / "optimizer.json").exists()
    assert result.checkpoint == str(tmp_path / "final")


def test_training_reduces_the_loss(tiny_config, make_state, scenes, tmp_path):
    cfg = TrainConfig(epochs=25, batch_size=2, lr=3e-3, ckpt_every=1000)
    result = Trainer(make_state(tiny_config), cfg, tmp_path).train(scenes[:2])
    assert result.last.total < result.first.total


def test_resume_is_bit_identical(tiny_config, make_state, scenes, tmp_path):
    cfg = TrainConfig(epochs=2, batch_size=2, lr=1e-3, ckpt_every=2)
    straight = Trainer(make_state(tiny_config), cfg, tmp_path / "a")
    straight.train(scenes, max_steps=4)

    Trainer(make_state(tiny_config), cfg, tmp_path / "b").train(scenes, max_steps=2)
    resumed = Trainer.resume(checkpoint_dir(tmp_path / "b", 2), cfg, tmp_path / "c")
    resumed.train(scenes, max_steps=4)

    assert resumed.progress.step == straight.progress.step == 4
    expected = _params(straight.state)
    for name, array in _params(resumed.state).items():
        np.testing.assert_array_equal(array, expected[name], err_msg=name)


def test_divergence_restores_the_last_checkpoint(
    tiny_config, tiny_train, make_state, scenes, tmp_path
):
    trainer = Trainer(make_state(tiny_config), tiny_train, tmp_path)
    trainer.train(scenes[:4], max_steps=1)
    good = _params(trainer.state)
    moments = {name: m.copy() for name, m in trainer.optimizer.m.items()}
    trainer.state.store["lm_head.bias"].data[:] = np.nan
    trainer.optimizer.m["lm_head.bias"][:] = 7.0
    trainer.optimizer.steps = 99
    with pytest.raises(TrainingDivergedError):
        trainer.train(scenes[:4])
    for name, array in _params(trainer.state).items():
        np.testing.assert_array_equal(array, good[name], err_msg=name)
    for name, m in trainer.optimizer.m.items():
        np.testing.assert_array_equal(m, moments[name], err_msg=name)
    assert trainer.optimizer.steps == trainer.progress.optimizer_steps == 1
    assert trainer.progress.step == 1


def test_training_needs_scenes(tiny_config, tiny_train, make_state, tmp_path):
    with pytest.raises(DatasetError):
        Trainer(make_state(tiny_config), tiny_train, tmp_path).train([])
