import pytest

from spacetoken.coord_text.corpus import corpus_vocab
from spacetoken.coord_text.models import Vocab
from spacetoken.planner.models import ModelConfig
from spacetoken.planner.state import PlannerState, init_state
from spacetoken.scene_synth.generator import generate_scenes
from spacetoken.scene_synth.models import Scene, SceneConfig
from spacetoken.trainer.models import TrainConfig

IMAGE_SIZE = 16


@pytest.fixture(scope="session")
def vocab() -> Vocab:
    return corpus_vocab()


@pytest.fixture(scope="session")
def scene_config() -> SceneConfig:
    return SceneConfig(image_size=IMAGE_SIZE, max_agents=2)


@pytest.fixture(scope="session")
def scenes(scene_config: SceneConfig) -> list[Scene]:
    return generate_scenes(range(8), scene_config)


@pytest.fixture
def tiny_config() -> ModelConfig:
    return ModelConfig(width=16, layers=1, heads=2, patch_size=8, image_size=IMAGE_SIZE)


@pytest.fixture
def tiny_train() -> TrainConfig:
    return TrainConfig(batch_size=2, lr=1e-3, ckpt_every=0)


@pytest.fixture
def make_state(vocab: Vocab):
    def factory(config: ModelConfig, seed: int = 0) -> PlannerState:
        return init_state(config, vocab, seed)

    return factory
