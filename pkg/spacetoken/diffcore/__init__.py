from spacetoken.diffcore.gradcheck import GradCheckReport, grad_check
from spacetoken.diffcore.ops import IGNORE_INDEX
from spacetoken.diffcore.params import CheckpointError, ParameterStore
from spacetoken.diffcore.tensor import (
    GraphError,
    ShapeError,
    Tensor,
    backward,
    constant,
    default_dtype,
    float64,
    grad_enabled,
    no_grad,
    precision,
)

__all__ = [
    "IGNORE_INDEX",
    "CheckpointError",
    "GradCheckReport",
    "GraphError",
    "ParameterStore",
    "ShapeError",
    "Tensor",
    "backward",
    "constant",
    "default_dtype",
    "float64",
    "grad_check",
    "grad_enabled",
    "no_grad",
    "precision",
]
