from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, model_validator

from spacetoken.coord_text.models import EgoStatusElement, StreamElement, TokenStream
from spacetoken.geometry.models import PatchGrid
from spacetoken.spatial_pe.models import DEFAULT_ALPHA, DEFAULT_BASE, PeConfig, PeScale
from spacetoken.utils import SpaceTokenError

SCHEMA_VERSION = 1


class ModelConfigError(SpaceTokenError):
    pass


class ModelConfig(BaseModel):
    """
    Planner architecture and coordinate interface.

    ``mode="digit_text"`` reads and writes coordinates as digit tokens and never
    builds a PE decoder or PE scale; the three encoding flags only apply in
    ``spatial_pe`` mode.
    """

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    schema_version: int = SCHEMA_VERSION
    width: int = 128
    layers: int = 4
    heads: int = 4
    patch_size: int = 8
    image_size: int = 64
    channels: int = 3
    views: int = 2
    max_seq_len: int = 512
    history: int = 2
    horizon: int = 6

    mode: Literal["spatial_pe", "digit_text"] = "spatial_pe"
    inject_visual: bool = True
    encode_text_coords: bool = True
    encode_ego: bool = True
    use_ego_status: bool = True

    pe_base: float = DEFAULT_BASE
    alpha_init: float = DEFAULT_ALPHA
    alpha_learnable: bool = True
    pe_encoder: Literal["sincos", "mlp"] = "sincos"
    pe_decoder: Literal["mlp", "sincos"] = "mlp"
    task_specific: bool = False
    feed_back_waypoints: bool = True

    @model_validator(mode="after")
    def validate_shapes(self) -> "ModelConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ModelConfigError(
                f"model config schema {self.schema_version}, expected {SCHEMA_VERSION}"
            )
        if self.width <= 0 or self.layers <= 0 or self.heads <= 0:
            raise ModelConfigError("width, layers and heads must be positive")
        if self.width % (2 * self.heads):
            raise ModelConfigError(
                f"width {self.width} is not divisible by 2 x {self.heads} heads (rotary pairs)"
            )
        if self.image_size % self.patch_size:
            raise ModelConfigError(
                f"image size {self.image_size} is not tiled by {self.patch_size}px patches"
            )
        if self.task_specific and self.pe_decoder != "mlp":
            raise ModelConfigError("whole-trajectory decoding has its own head; use pe_decoder=mlp")
        return self

    @property
    def spatial(self) -> bool:
        return self.mode == "spatial_pe"

    @property
    def uses_visual_pe(self) -> bool:
        return self.spatial and self.inject_visual

    @property
    def uses_text_pe(self) -> bool:
        return self.spatial and self.encode_text_coords

    @property
    def uses_ego_pe(self) -> bool:
        return self.spatial and self.encode_ego

    @property
    def whole_trajectory(self) -> bool:
        return self.spatial and self.task_specific

    @property
    def uses_alpha_param(self) -> bool:
        return self.spatial and self.alpha_learnable

    @property
    def pe_config(self) -> PeConfig:
        return PeConfig(dim=self.width, base=self.pe_base)

    @property
    def pe_scale(self) -> PeScale:
        return PeScale(init=self.alpha_init, learnable=self.alpha_learnable)

    @property
    def grid(self) -> PatchGrid:
        return PatchGrid(patch_size=self.patch_size, width=self.image_size, height=self.image_size)

    @computed_field
    @property
    def visual_tokens(self) -> int:
        per_view = (self.image_size // self.patch_size) ** 2
        return self.views * per_view

    @property
    def head_dim(self) -> int:
        return self.width // self.heads


class GenerationResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    emitted: list[int]
    waypoints: list[tuple[float, float]]
    head_log: list[Literal["lm", "pe"]]
    text: str
    truncated: bool = False
    grammar_valid: bool = False


class PlannerInput(BaseModel):
    """Everything the textual side of one forward pass needs besides the weights."""

    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True, frozen=True)

    stream: TokenStream
    target_start: int
    """Index of the first element after BOS; generation appends from here"""
    ego_features: np.ndarray | None = None
    ego_xy: np.ndarray | None = None

    @model_validator(mode="after")
    def validate_prefix(self) -> "PlannerInput":
        if not 0 < self.target_start <= len(self.stream):
            raise ModelConfigError(
                f"target start {self.target_start} outside stream of {len(self.stream)}"
            )
        slots = sum(isinstance(e, EgoStatusElement) for e in self.stream.elements)
        if slots and (self.ego_features is None or self.ego_xy is None):
            raise ModelConfigError("ego-status slots without ego features")
        if slots and len(self.ego_xy) != slots - 1:
            raise ModelConfigError(f"{slots - 1} history slots but {len(self.ego_xy)} positions")
        return self

    def extend(self, *elements: StreamElement) -> "PlannerInput":
        stream = TokenStream(elements=(*self.stream.elements, *elements))
        return self.model_copy(update={"stream": stream})
