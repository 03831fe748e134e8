from typing import Annotated, Literal

from cachetools.func import lru_cache
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from spacetoken.geometry.models import Coordinate3D
from spacetoken.utils import SpaceTokenError

PAD = "<pad>"
BOS = "<bos>"
EOS = "<eos>"
UNK = "<unk>"
IND = "<ind>"
SPECIAL_TOKENS = (PAD, BOS, EOS, UNK)
MAX_VOCAB_SIZE = 512


class TokenizationError(SpaceTokenError):
    pass


class StreamError(SpaceTokenError):
    pass


class Vocab(BaseModel):
    """
    Closed word-level vocabulary. The indicator token is not a member of it;
    it takes the id ``len(tokens)`` in the extended embedding table.
    """

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    tokens: tuple[str, ...]

    @model_validator(mode="after")
    def validate_tokens(self) -> "Vocab":
        if self.tokens[: len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise ValueError(f"vocabulary must start with {SPECIAL_TOKENS}")
        if IND in self.tokens:
            raise ValueError("the indicator token cannot be a member of the base vocabulary")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        if len(self.tokens) > MAX_VOCAB_SIZE:
            raise ValueError(f"vocabulary holds {len(self.tokens)} > {MAX_VOCAB_SIZE} tokens")
        return self

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def index(self) -> dict[str, int]:
        return _index(self.tokens)

    @computed_field
    @property
    def ind_id(self) -> int:
        return len(self.tokens)

    @property
    def extended_size(self) -> int:
        return len(self.tokens) + 1

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    @property
    def unk_id(self) -> int:
        return 3

    def token_id(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    def token(self, token_id: int) -> str:
        if token_id == self.ind_id:
            return IND
        if not 0 <= token_id < len(self.tokens):
            raise TokenizationError(f"token id {token_id} outside the extended vocabulary")
        return self.tokens[token_id]

    def to_mapping(self) -> dict[str, int]:
        mapping = dict(self.index)
        mapping[IND] = self.ind_id
        return mapping

    @classmethod
    def from_mapping(cls, mapping: dict[str, int]) -> "Vocab":
        base = {t: i for t, i in mapping.items() if t != IND}
        if sorted(base.values()) != list(range(len(base))):
            raise TokenizationError("vocabulary ids must be contiguous from 0")
        if mapping.get(IND, len(base)) != len(base):
            raise TokenizationError(f"indicator id must be {len(base)}, got {mapping[IND]}")
        return cls(tokens=tuple(sorted(base, key=base.__getitem__)))


@lru_cache(maxsize=16)
def _index(tokens: tuple[str, ...]) -> dict[str, int]:
    return {t: i for i, t in enumerate(tokens)}


class CoordSpan(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    start: int
    end: int
    values: tuple[float, ...]

    @computed_field
    @property
    def bev(self) -> bool:
        return len(self.values) == 2

    def coordinate(self) -> Coordinate3D:
        x, y, *rest = self.values
        return Coordinate3D(x=x, y=y, z=rest[0] if rest else 0.0)


class TextElement(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["text"] = "text"
    token_id: int


class IndicatorElement(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["ind"] = "ind"


class SpatialElement(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["spatial"] = "spatial"
    coord: Coordinate3D
    bev: bool = False


class EgoStatusElement(BaseModel):
    """Slot 0 carries the ego-status feature row, slots 1.. the history poses."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["ego"] = "ego"
    slot: int


StreamElement = Annotated[
    TextElement | IndicatorElement | SpatialElement | EgoStatusElement,
    Field(discriminator="kind"),
]


class TokenStream(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    elements: tuple[StreamElement, ...] = ()

    @model_validator(mode="after")
    def validate_structure(self) -> "TokenStream":
        in_prefix = True
        for i, element in enumerate(self.elements):
            if isinstance(element, EgoStatusElement):
                if not in_prefix:
                    raise StreamError(f"ego-status element at {i} outside the ego prefix")
                continue
            in_prefix = False
            after = self.elements[i + 1] if i + 1 < len(self.elements) else None
            before = self.elements[i - 1] if i > 0 else None
            if isinstance(element, SpatialElement) and not isinstance(before, IndicatorElement):
                raise StreamError(f"spatial element at {i} is not preceded by an indicator")
            # a trailing indicator is the open slot the decoder fills next
            if isinstance(element, IndicatorElement) and not isinstance(
                after, SpatialElement | None
            ):
                raise StreamError(f"indicator at {i} is not followed by a spatial element")
        return self

    def __len__(self) -> int:
        return len(self.elements)

    def __add__(self, other: "TokenStream") -> "TokenStream":
        return TokenStream(elements=self.elements + other.elements)

    @property
    def indicator_count(self) -> int:
        return sum(isinstance(e, IndicatorElement) for e in self.elements)

    @property
    def spatial_count(self) -> int:
        return sum(isinstance(e, SpatialElement) for e in self.elements)


class RenderResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    text: str
    incomplete: bool = False
