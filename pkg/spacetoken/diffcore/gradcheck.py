import logging
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field

from spacetoken.diffcore.params import ParameterStore
from spacetoken.diffcore.tensor import Tensor, backward, float64

LOGGER = logging.getLogger(__name__)

# Relative errors are measured against max(|analytic|, |numeric|, REL_FLOOR) so
# vanishing gradients do not turn round-off into huge ratios.
REL_FLOOR = 1e-6


class GradCheckEntry(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    checked: int
    max_rel_error: float


class GradCheckReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    tolerance: float
    entries: list[GradCheckEntry]

    @computed_field
    @property
    def passed(self) -> bool:
        return all(e.max_rel_error < self.tolerance for e in self.entries)

    @computed_field
    @property
    def worst(self) -> float:
        return max((e.max_rel_error for e in self.entries), default=0.0)


def grad_check(
    f: Callable[[ParameterStore], Tensor],
    store: ParameterStore,
    tolerance: float = 1e-4,
    step: float = 1e-4,
    entries_per_param: int | None = None,
    seed: int = 0,
    floor: float = REL_FLOOR,
) -> GradCheckReport:
    """
    Compare analytic gradients of ``f`` with central differences.

    Runs in float64; parameters are cast up for the check and restored after.
    ``entries_per_param`` limits the number of sampled elements per parameter.
    ``floor`` is the smallest denominator of the relative error; raising it
    turns the check absolute for gradients below it.
    """
    original = {name: t.data.dtype for name, t in store.items()}
    rng = np.random.default_rng(seed)
    entries: list[GradCheckEntry] = []
    with float64():
        store.cast(np.float64)
        try:
            store.zero_grad()
            backward(f(store))
            for name, tensor in store.items():
                analytic = (
                    np.zeros_like(tensor.data) if tensor.grad is None else tensor.grad.copy()
                )
                flat = tensor.data.reshape(-1)
                indices = np.arange(flat.size)
                if entries_per_param is not None and flat.size > entries_per_param:
                    indices = np.sort(rng.choice(flat.size, entries_per_param, replace=False))
                worst = 0.0
                for i in indices:
                    saved = flat[i]
                    flat[i] = saved + step
                    plus = f(store).item()
                    flat[i] = saved - step
                    minus = f(store).item()
                    flat[i] = saved
                    numeric = (plus - minus) / (2.0 * step)
                    exact = analytic.reshape(-1)[i]
                    denom = max(abs(exact), abs(numeric), floor)
                    worst = max(worst, abs(exact - numeric) / denom)
                entries.append(GradCheckEntry(name=name, checked=len(indices), max_rel_error=worst))
                LOGGER.debug(f"grad_check {name}: {len(indices)} entries, max rel err {worst:.2e}")
        finally:
            store.zero_grad()
            for name, tensor in store.items():
                tensor.data = tensor.data.astype(original[name])
    return GradCheckReport(tolerance=tolerance, entries=entries)
