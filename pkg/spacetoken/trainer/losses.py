"""
The combined objective: next-token cross-entropy over the extended vocabulary
plus a coordinate regression at every waypoint slot.
"""

import logging
from collections.abc import Sequence

import numpy as np

from spacetoken.coord_text.models import TextElement, TokenStream, Vocab
from spacetoken.coord_text.stream import lm_targets, regression_slots
from spacetoken.diffcore import ops
from spacetoken.diffcore.ops import IGNORE_INDEX
from spacetoken.diffcore.tensor import Tensor, constant
from spacetoken.planner.generate import trajectory_head
from spacetoken.planner.model import run, training_input
from spacetoken.planner.state import PlannerState
from spacetoken.scene_synth.models import Scene
from spacetoken.spatial_pe.injection import alpha_tensor
from spacetoken.trainer.models import LossKind, LossReport, TrainConfig
from spacetoken.utils import notnone

LOGGER = logging.getLogger(__name__)


def huber(residual: float | np.ndarray, delta: float = 1.0) -> float:
    """Huber penalty summed over components: quadratic within δ, linear beyond."""
    assert delta > 0, "Invariant: huber delta must be positive"
    a = np.abs(np.asarray(residual, dtype=np.float64))
    inner = np.minimum(a, delta)
    return float(np.sum(0.5 * inner * inner + delta * (a - inner)))


def mae(residual: float | np.ndarray) -> float:
    return float(np.sum(np.abs(residual)))


def mse(residual: float | np.ndarray) -> float:
    return float(np.sum(np.square(residual)))


def regression_loss(
    pred: Tensor, target: np.ndarray, kind: LossKind = "huber", delta: float = 1.0
) -> Tensor:
    """Per-row penalty summed over components, averaged over rows."""
    r = ops.sub(pred, constant(target))
    if kind == "mse":
        per_component = ops.mul(r, r)
    else:
        a = ops.absolute(r)
        if kind == "mae":
            per_component = a
        else:
            inner = ops.clip(a, 0.0, delta)
            per_component = ops.add(
                ops.mul(ops.mul(inner, inner), 0.5), ops.mul(ops.sub(a, inner), delta)
            )
    return ops.mul(ops.sum_all(per_component), 1.0 / max(pred.shape[0], 1))


def lm_target_ids(stream: TokenStream, target_start: int, vocab: Vocab) -> np.ndarray:
    """Next-element targets, supervised only from BOS onward."""
    targets = lm_targets(stream, vocab)
    targets[: target_start - 1] = IGNORE_INDEX
    return targets


def sample_loss(
    scene: Scene, state: PlannerState, cfg: TrainConfig
) -> tuple[Tensor, Tensor, np.ndarray]:
    """(lm loss, unweighted regression loss, per-waypoint residuals in meters)."""
    config, vocab = state.config, state.vocab
    inp = training_input(scene, vocab, config)
    logits, hidden = run(scene, inp, state)
    lm = ops.cross_entropy(logits, lm_target_ids(inp.stream, inp.target_start, vocab))

    if not config.spatial:
        return lm, constant(0.0), np.zeros(0)

    waypoints = scene.future_xy()
    if config.whole_trajectory:
        ind = TextElement(token_id=vocab.ind_id)
        positions = [
            i for i, e in enumerate(inp.stream.elements) if i >= inp.target_start and e == ind
        ]
        assert len(positions) == 1, "Invariant: whole-trajectory targets carry one indicator"
        out = trajectory_head(ops.index(hidden, np.array(positions)), state)
        pred = ops.reshape(out, (config.horizon, 2))
        reg = regression_loss(pred, waypoints, cfg.loss, cfg.huber_delta)
        residuals = np.linalg.norm(pred.numpy() - waypoints, axis=-1)
        return lm, reg, residuals

    decoder = notnone(state.decoder)
    slots = [(i, c) for i, c in regression_slots(inp.stream) if i >= inp.target_start]
    assert len(slots) == config.horizon, "Invariant: one regression slot per waypoint"
    positions = np.array([i for i, _ in slots])
    coords = np.array([c.as_array() for _, c in slots])
    out = decoder.forward(ops.index(hidden, positions))
    if decoder.kind == "mlp":
        pred = ops.index(out, (slice(None), slice(0, 2)))
        reg = regression_loss(pred, coords[:, :2], cfg.loss, cfg.huber_delta)
        decoded = pred.numpy()
    else:
        alpha = alpha_tensor(state.store, config.pe_scale).item()
        reg = regression_loss(out, decoder.target(coords, alpha), cfg.loss, cfg.huber_delta)
        decoded = decoder.to_coordinates(out.numpy())[:, :2]
    return lm, reg, np.linalg.norm(decoded - coords[:, :2], axis=-1)


def batch_loss(
    scenes: Sequence[Scene], state: PlannerState, cfg: TrainConfig, step: int = 0
) -> tuple[Tensor, LossReport]:
    """Mean over the batch of the LM loss plus the weighted regression loss, with its report."""
    lm_terms, reg_terms, residuals = [], [], []
    for scene in scenes:
        lm, reg, r = sample_loss(scene, state, cfg)
        lm_terms.append(lm)
        reg_terms.append(reg)
        residuals.extend(float(v) for v in r)
    scale = 1.0 / len(scenes)
    lm_mean = ops.mul(_stack_sum(lm_terms), scale)
    reg_mean = ops.mul(_stack_sum(reg_terms), scale * cfg.reg_weight)
    total = ops.add(lm_mean, reg_mean)
    report = LossReport(
        step=step,
        lm_loss=lm_mean.item(),
        reg_loss=reg_mean.item(),
        total=total.item(),
        residuals=residuals,
    )
    return total, report


def _stack_sum(terms: list[Tensor]) -> Tensor:
    acc = terms[0]
    for t in terms[1:]:
        acc = ops.add(acc, t)
    return acc
