"""
Planner forward pass: visual tokens from camera rasters, the mixed textual
stream (ego prefix, prompt, answer) and the causal transformer over both.
"""

import logging
from collections.abc import Sequence

import numpy as np

from spacetoken.coord_text.models import (
    EgoStatusElement,
    IndicatorElement,
    SpatialElement,
    TextElement,
    TokenStream,
    Vocab,
)
from spacetoken.coord_text.stream import (
    build_digit_target_stream,
    build_target_stream,
    build_trajectory_stream,
    ego_prefix,
    prompt_stream,
)
from spacetoken.diffcore import ops
from spacetoken.diffcore.nn import layer_norm, linear, mlp
from spacetoken.diffcore.tensor import Tensor, constant
from spacetoken.geometry.models import CameraRig
from spacetoken.geometry.patches import patch_coordinates
from spacetoken.planner.layers import block
from spacetoken.planner.models import ModelConfig, ModelConfigError, PlannerInput
from spacetoken.planner.state import (
    EGO_ENCODER,
    FINAL_NORM,
    LM_HEAD,
    PATCH_EMBED,
    PROJECTOR,
    TOKEN_EMBED,
    PlannerState,
)
from spacetoken.scene_synth.models import CameraView, Scene
from spacetoken.spatial_pe.injection import alpha_tensor, inject, spatial_rows

LOGGER = logging.getLogger(__name__)

EGO_INPUT_SCALE = 0.1


def prompt_input(scene: Scene, vocab: Vocab, config: ModelConfig) -> PlannerInput:
    """Ego prefix, prompt and BOS: the context generation starts from."""
    stream = TokenStream()
    ego_features = ego_xy = None
    if config.use_ego_status:
        history = scene.history_xy()
        stream = ego_prefix(len(history))
        ego_features = scene.ego_status().features()
        ego_xy = history
    stream = stream + prompt_stream(scene.prompt(), vocab, spatial=config.uses_text_pe)
    stream = stream + TokenStream(elements=(TextElement(token_id=vocab.bos_id),))
    return PlannerInput(
        stream=stream, target_start=len(stream), ego_features=ego_features, ego_xy=ego_xy
    )


def target_stream(scene: Scene, vocab: Vocab, config: ModelConfig) -> TokenStream:
    if not config.spatial:
        return build_digit_target_stream(scene.waypoints(), vocab, config.horizon)
    if config.task_specific:
        return build_trajectory_stream(vocab)
    return build_target_stream(scene.waypoints(), vocab, config.horizon)


def training_input(scene: Scene, vocab: Vocab, config: ModelConfig) -> PlannerInput:
    """The teacher-forced sequence: context followed by the ground-truth answer."""
    context = prompt_input(scene, vocab, config)
    return context.extend(*target_stream(scene, vocab, config).elements)


def patchify(features: np.ndarray, patch_size: int) -> np.ndarray:
    """[C, H, W] raster to [rows*cols, C*p*p] patch vectors, row-major."""
    c, h, w = features.shape
    p = patch_size
    patches = features.reshape(c, h // p, p, w // p, p).transpose(1, 3, 0, 2, 4)
    return patches.reshape((h // p) * (w // p), c * p * p)


def embed_views(views: Sequence[CameraView], rig: CameraRig, state: PlannerState) -> Tensor:
    """Visual tokens [views*rows*cols, width], view-major then row-major."""
    config = state.config
    if len(views) != config.views:
        raise ModelConfigError(f"model expects {config.views} views, got {len(views)}")
    expected = (config.channels, config.image_size, config.image_size)
    for i, view in enumerate(views):
        if view.features.shape != expected:
            raise ModelConfigError(f"view {i} raster {view.features.shape}, expected {expected}")

    patches = np.concatenate([patchify(v.features, config.patch_size) for v in views])
    x = mlp(state.store, PROJECTOR, linear(state.store, PATCH_EMBED, constant(patches)), 2)
    if not config.uses_visual_pe:
        return x
    coords = np.concatenate(
        [patch_coordinates(v.depth, config.grid, i, rig) for i, v in enumerate(views)]
    )
    alpha = alpha_tensor(state.store, config.pe_scale)
    return inject(x, coords, alpha, config.pe_config, state.store, config.pe_encoder)


def embed_stream(inp: PlannerInput, state: PlannerState) -> Tensor:
    """
    Input rows [L, width] for a mixed stream.

    Text and Indicator elements look up the token table. Spatial elements and
    the history slots of the ego prefix carry the scaled encoding of their
    coordinate; ego slot 0 carries the encoded ego-status features. Rows for
    disabled inputs stay zero.
    """
    config, vocab, store = state.config, state.vocab, state.store
    elements = inp.stream.elements
    length, width = len(elements), config.width

    ids = np.zeros(length, dtype=np.int64)
    text_mask = np.zeros(length)
    coords = np.zeros((length, 3))
    bev = np.zeros(length, dtype=bool)
    spatial_mask = np.zeros(length)
    ego_row = None
    for i, element in enumerate(elements):
        if isinstance(element, TextElement | IndicatorElement):
            ids[i] = element.token_id if isinstance(element, TextElement) else vocab.ind_id
            text_mask[i] = 1.0
        elif isinstance(element, SpatialElement):
            answer = i >= inp.target_start
            if not config.spatial or not (answer or config.uses_text_pe):
                raise ModelConfigError(
                    f"spatial element at {i} but coordinates are read as digits in this config"
                )
            coords[i] = element.coord.as_array()
            bev[i] = element.bev
            spatial_mask[i] = 1.0 if config.feed_back_waypoints or not answer else 0.0
        elif isinstance(element, EgoStatusElement):
            if element.slot == 0:
                assert i == 0, "Invariant: the ego-status row leads the stream"
                ego_row = i
            else:
                coords[i, :2] = inp.ego_xy[element.slot - 1]
                bev[i] = True
                spatial_mask[i] = 1.0 if config.uses_ego_pe else 0.0

    table = store[f"{TOKEN_EMBED}.weight"]
    x = ops.mul(ops.embedding(table, ids), constant(np.repeat(text_mask[:, None], width, axis=1)))
    if spatial_mask.any():
        alpha = alpha_tensor(store, config.pe_scale)
        rows = spatial_rows(coords, bev, config.pe_config, alpha, store, config.pe_encoder)
        x = ops.add(x, ops.mul(rows, constant(np.repeat(spatial_mask[:, None], width, axis=1))))
    if ego_row is not None:
        if not config.use_ego_status:
            raise ModelConfigError("ego-status prefix given to a model without an ego encoder")
        features = constant(inp.ego_features[None, :] * EGO_INPUT_SCALE)
        ego = mlp(store, EGO_ENCODER, features, 2)
        if length > 1:
            ego = ops.concat([ego, constant(np.zeros((length - 1, width)))])
        x = ops.add(x, ego)
    return x


def forward(visual: Tensor, textual: Tensor, state: PlannerState) -> tuple[Tensor, Tensor]:
    """
    Causal transformer over [visual ‖ textual]. Returns logits over the extended
    vocabulary and the final hidden states, both for the textual positions only.
    """
    config = state.config
    total = visual.shape[0] + textual.shape[0]
    if total > config.max_seq_len:
        raise ModelConfigError(f"sequence of {total} exceeds the limit of {config.max_seq_len}")
    x = ops.concat([visual, textual])
    for i in range(config.layers):
        x = block(state.store, f"blocks.{i}", x, config.heads)
    hidden = layer_norm(state.store, FINAL_NORM, ops.index(x, slice(visual.shape[0], None)))
    return linear(state.store, LM_HEAD, hidden), hidden


def run(scene: Scene, inp: PlannerInput, state: PlannerState) -> tuple[Tensor, Tensor]:
    visual = embed_views(scene.views, scene.rig, state)
    return forward(visual, embed_stream(inp, state), state)
