from spacetoken.planner.checkpoint import clone_state, load_checkpoint, save_checkpoint
from spacetoken.planner.generate import generate, trajectory_head
from spacetoken.planner.model import (
    embed_stream,
    embed_views,
    forward,
    prompt_input,
    run,
    target_stream,
    training_input,
)
from spacetoken.planner.models import GenerationResult, ModelConfig, ModelConfigError, PlannerInput
from spacetoken.planner.state import PlannerState, init_state

__all__ = [
    "GenerationResult",
    "ModelConfig",
    "ModelConfigError",
    "PlannerInput",
    "PlannerState",
    "clone_state",
    "embed_stream",
    "embed_views",
    "forward",
    "generate",
    "init_state",
    "load_checkpoint",
    "prompt_input",
    "run",
    "save_checkpoint",
    "target_stream",
    "trajectory_head",
    "training_input",
]
