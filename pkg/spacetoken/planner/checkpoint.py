import logging
from pathlib import Path

from pydantic import ValidationError

from spacetoken.coord_text.models import TokenizationError
from spacetoken.coord_text.vocab import load_vocab, save_vocab
from spacetoken.diffcore.params import CheckpointError, ParameterStore
from spacetoken.planner.models import ModelConfig, ModelConfigError
from spacetoken.planner.state import PlannerState, init_state, restore_decoder
from spacetoken.utils import read_json, write_json

LOGGER = logging.getLogger(__name__)

MODEL_CONFIG_FILE = "model_config.json"
PARAMS_STEM = "params"


def save_checkpoint(directory: Path, state: PlannerState):
    """Parameters (manifest + blob), vocabulary and model config in one directory."""
    state.store.save(directory, PARAMS_STEM)
    save_vocab(state.vocab, directory)
    write_json(directory / MODEL_CONFIG_FILE, state.config)
    LOGGER.info(f"Saved checkpoint with {state.num_parameters} parameters to {directory}")


def load_model_config(directory: Path) -> ModelConfig:
    path = directory / MODEL_CONFIG_FILE
    if not path.exists():
        raise CheckpointError(f"{directory} holds no {MODEL_CONFIG_FILE}")
    try:
        return ModelConfig.model_validate(read_json(path))
    except ModelConfigError as e:
        raise CheckpointError(f"invalid {path}: {e.message}") from e
    except ValidationError as e:
        raise CheckpointError(f"invalid {path}: {e.error_count()} errors") from e


def load_checkpoint(directory: Path) -> PlannerState:
    config = load_model_config(directory)
    try:
        vocab = load_vocab(directory)
    except TokenizationError as e:
        raise CheckpointError(e.message) from e
    # init_state fixes the parameter layout; the loaded arrays then replace the values
    state = init_state(config, vocab)
    state.store.load(directory, PARAMS_STEM)
    LOGGER.info(f"Loaded {config.mode} checkpoint from {directory}")
    return state


def clone_state(state: PlannerState) -> PlannerState:
    """An independent copy of the weights (last-good snapshots)."""
    store = ParameterStore()
    for name, tensor in state.store.items():
        store.add(name, tensor.data.copy())
    return PlannerState(
        config=state.config,
        vocab=state.vocab,
        store=store,
        decoder=restore_decoder(state.config, store),
    )
