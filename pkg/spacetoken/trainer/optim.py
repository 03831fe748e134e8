import logging
import math
from pathlib import Path

import numpy as np

from spacetoken.diffcore.params import ParameterStore, load_arrays, save_arrays
from spacetoken.trainer.models import TrainConfig

LOGGER = logging.getLogger(__name__)

OPTIMIZER_STEM = "optimizer"


def cosine_lr(step: int, total_steps: int, peak: float) -> float:
    """Cosine annealing from ``peak`` at step 0 to zero at ``total_steps``."""
    if total_steps <= 0:
        return peak
    progress = min(step, total_steps) / total_steps
    return 0.5 * peak * (1.0 + math.cos(math.pi * progress))


def clip_grad_norm(store: ParameterStore, max_norm: float) -> float:
    """Scales all gradients so their global norm is at most ``max_norm``; returns the norm."""
    grads = [t.grad for _, t in store.items() if t.grad is not None]
    norm = math.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads))
    if math.isfinite(norm) and norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm


class AdamW:
    """
    Adaptive moments with decoupled weight decay. Decay only applies to matrices
    (weights and embedding tables), never to gains, biases or the PE scale.
    """

    def __init__(self, store: ParameterStore, cfg: TrainConfig):
        self.store = store
        self.cfg = cfg
        self.steps = 0
        self.m = {name: np.zeros_like(t.data) for name, t in store.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in store.items()}

    def step(self, lr: float):
        self.steps += 1
        b1, b2 = self.cfg.beta1, self.cfg.beta2
        correction1 = 1.0 - b1**self.steps
        correction2 = 1.0 - b2**self.steps
        for name, tensor in self.store.items():
            if tensor.grad is None:
                continue
            g = tensor.grad
            m, v = self.m[name], self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = (m / correction1) / (np.sqrt(v / correction2) + self.cfg.eps)
            if tensor.ndim >= 2:
                update = update + self.cfg.weight_decay * tensor.data
            tensor.data -= (lr * update).astype(tensor.data.dtype)

    def save(self, directory: Path):
        arrays = {f"m.{name}": a for name, a in self.m.items()}
        arrays.update({f"v.{name}": a for name, a in self.v.items()})
        save_arrays(directory, OPTIMIZER_STEM, arrays)

    def load(self, directory: Path, steps: int):
        arrays = load_arrays(directory, OPTIMIZER_STEM)
        for name in self.m:
            self.m[name] = arrays[f"m.{name}"].astype(self.m[name].dtype)
            self.v[name] = arrays[f"v.{name}"].astype(self.v[name].dtype)
        self.steps = steps
        LOGGER.debug(f"Restored optimizer moments at step {steps} from {directory}")
