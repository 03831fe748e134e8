import logging
from dataclasses import dataclass

from spacetoken.coord_text.models import Vocab
from spacetoken.diffcore.nn import INIT_STD, init_layer_norm, init_linear, init_mlp
from spacetoken.diffcore.params import ParameterStore
from spacetoken.planner.layers import init_block
from spacetoken.planner.models import ModelConfig
from spacetoken.scene_synth.models import ego_feature_width
from spacetoken.spatial_pe.decoder import PeDecoder
from spacetoken.spatial_pe.injection import register_alpha, register_mlp_encoder
from spacetoken.utils import rng_for

LOGGER = logging.getLogger(__name__)

PATCH_EMBED = "patch_embed"
PROJECTOR = "projector"
TOKEN_EMBED = "token_embed"
EGO_ENCODER = "ego_encoder"
FINAL_NORM = "ln_f"
LM_HEAD = "lm_head"
TRAJECTORY_HEAD = "trajectory_head"


@dataclass
class PlannerState:
    config: ModelConfig
    vocab: Vocab
    store: ParameterStore
    decoder: PeDecoder | None
    """The coordinate decoder, absent in digit_text mode and whole-trajectory decoding"""

    @property
    def num_parameters(self) -> int:
        return self.store.num_elements()


def init_state(config: ModelConfig, vocab: Vocab, seed: int = 0) -> PlannerState:
    """
    Registers every parameter in a fixed order so a seed fully determines the
    initial weights and a checkpoint's manifest order.
    """
    rng = rng_for(seed, 11)
    store = ParameterStore()
    w = config.width

    patch_inputs = config.channels * config.patch_size**2
    init_linear(store, PATCH_EMBED, patch_inputs, w, rng)
    init_mlp(store, PROJECTOR, [w, w, w], rng)
    store.add(f"{TOKEN_EMBED}.weight", rng.normal(0.0, INIT_STD, size=(vocab.extended_size, w)))
    if config.use_ego_status:
        init_mlp(store, EGO_ENCODER, [ego_feature_width(config.history), w, w], rng)
    for i in range(config.layers):
        init_block(store, f"blocks.{i}", w, rng)
    init_layer_norm(store, FINAL_NORM, w)
    init_linear(store, LM_HEAD, w, vocab.extended_size, rng)

    decoder = None
    if config.spatial:
        register_alpha(store, config.pe_scale)
        if config.pe_encoder == "mlp":
            register_mlp_encoder(store, w, rng)
        if config.task_specific:
            init_mlp(store, TRAJECTORY_HEAD, [w, w, 2 * config.horizon], rng)
        else:
            decoder = PeDecoder.register(store, w, rng, config.pe_decoder, config.pe_config)

    LOGGER.info(
        f"Initialized {config.mode} planner: {len(store)} tensors, "
        f"{store.num_elements()} parameters, vocab {vocab.extended_size}"
    )
    return PlannerState(config=config, vocab=vocab, store=store, decoder=decoder)


def restore_decoder(config: ModelConfig, store: ParameterStore) -> PeDecoder | None:
    """The decoder view over an already populated store (checkpoint loading)."""
    if not config.spatial or config.whole_trajectory:
        return None
    return PeDecoder(store, config.width, config.pe_decoder, config.pe_config)

