"""
Building token streams from prompt text and waypoints, and rendering model
output back to text.
"""

import logging
import re
from collections.abc import Sequence

import numpy as np

from spacetoken.coord_text.models import (
    BOS,
    EOS,
    PAD,
    CoordSpan,
    EgoStatusElement,
    IndicatorElement,
    RenderResult,
    SpatialElement,
    StreamElement,
    StreamError,
    TextElement,
    TokenStream,
    Vocab,
)
from spacetoken.coord_text.scanner import scan_coordinates
from spacetoken.coord_text.vocab import encode_tokens, join_pieces, merge_numbers, tokenize
from spacetoken.diffcore.ops import IGNORE_INDEX
from spacetoken.geometry.models import Coordinate3D
from spacetoken.utils import format_number

LOGGER = logging.getLogger(__name__)

HORIZON = 6
PREAMBLE = ("trajectory", ":")
MISSING_COORDINATE = "(?)"


def format_coordinate(c: Coordinate3D, bev: bool) -> str:
    values = (c.x, c.y) if bev else (c.x, c.y, c.z)
    return "(" + ", ".join(format_number(v) for v in values) + ")"


def _text_elements(text: str, vocab: Vocab) -> list[TextElement]:
    return [TextElement(token_id=i) for i in encode_tokens(tokenize(text), vocab)]


def build_stream(text: str, spans: Sequence[CoordSpan], vocab: Vocab) -> TokenStream:
    """Text outside spans becomes Text elements; each span becomes Indicator + Spatial."""
    elements: list[StreamElement] = []
    cursor = 0
    for span in spans:
        if span.start < cursor:
            raise StreamError(f"coordinate span at {span.start} overlaps the previous span")
        elements.extend(_text_elements(text[cursor : span.start], vocab))
        elements.append(IndicatorElement())
        elements.append(SpatialElement(coord=span.coordinate(), bev=span.bev))
        cursor = span.end
    elements.extend(_text_elements(text[cursor:], vocab))
    return TokenStream(elements=tuple(elements))


def prompt_stream(text: str, vocab: Vocab, spatial: bool = True) -> TokenStream:
    """Prompt stream; with ``spatial`` off the coordinates stay as digit tokens."""
    return build_stream(text, scan_coordinates(text) if spatial else [], vocab)


def ego_prefix(history_len: int) -> TokenStream:
    """The ego-status row followed by one slot per history pose."""
    return TokenStream(elements=tuple(EgoStatusElement(slot=i) for i in range(history_len + 1)))


def _check_horizon(waypoints: Sequence[Coordinate3D], horizon: int):
    if len(waypoints) != horizon:
        raise StreamError(f"expected {horizon} waypoints, got {len(waypoints)}")


def build_target_stream(
    waypoints: Sequence[Coordinate3D], vocab: Vocab, horizon: int = HORIZON
) -> TokenStream:
    _check_horizon(waypoints, horizon)
    elements: list[StreamElement] = [TextElement(token_id=vocab.token_id(t)) for t in PREAMBLE]
    for w in waypoints:
        elements.append(IndicatorElement())
        elements.append(SpatialElement(coord=Coordinate3D(x=w.x, y=w.y), bev=True))
    elements.append(TextElement(token_id=vocab.eos_id))
    return TokenStream(elements=tuple(elements))


def build_trajectory_stream(vocab: Vocab) -> TokenStream:
    """Target for whole-trajectory decoding: the preamble, one indicator and EOS."""
    return TokenStream(
        elements=(
            *(TextElement(token_id=vocab.token_id(t)) for t in PREAMBLE),
            TextElement(token_id=vocab.ind_id),
            TextElement(token_id=vocab.eos_id),
        )
    )


def target_text(waypoints: Sequence[Coordinate3D], horizon: int = HORIZON) -> str:
    _check_horizon(waypoints, horizon)
    return " ".join([*PREAMBLE, *(format_coordinate(w, bev=True) for w in waypoints)])


def build_digit_target_stream(
    waypoints: Sequence[Coordinate3D], vocab: Vocab, horizon: int = HORIZON
) -> TokenStream:
    """Target stream with coordinates spelled out as digit tokens."""
    text = _text_elements(target_text(waypoints, horizon), vocab)
    return TokenStream(elements=(*text, TextElement(token_id=vocab.eos_id)))


def element_id(element: StreamElement, vocab: Vocab) -> int | None:
    """Input id of an element; Spatial and ego elements are fed as encodings instead."""
    if isinstance(element, TextElement):
        return element.token_id
    if isinstance(element, IndicatorElement):
        return vocab.ind_id
    return None


def lm_targets(stream: TokenStream, vocab: Vocab) -> np.ndarray:
    """
    Next-element language targets for every input position. Positions whose next
    element is a Spatial payload (or nothing) carry the ignore label.
    """
    targets = np.full(len(stream), IGNORE_INDEX, dtype=np.int64)
    for i, nxt in enumerate(stream.elements[1:]):
        next_id = element_id(nxt, vocab)
        if next_id is not None:
            targets[i] = next_id
    return targets


def regression_slots(stream: TokenStream) -> list[tuple[int, Coordinate3D]]:
    """(position of each Indicator, the Spatial payload that follows it)."""
    slots = []
    for i, element in enumerate(stream.elements[:-1]):
        nxt = stream.elements[i + 1]
        if isinstance(element, IndicatorElement) and isinstance(nxt, SpatialElement):
            slots.append((i, nxt.coord))
    return slots


class _PieceBuffer:
    def __init__(self):
        self.pieces: list[str] = []
        self.words: list[str] = []

    def word(self, token: str):
        self.words.append(token)

    def piece(self, text: str):
        self.flush()
        self.pieces.append(text)

    def flush(self):
        self.pieces.extend(merge_numbers(self.words))
        self.words = []

    def text(self) -> str:
        self.flush()
        return join_pieces(self.pieces)


def render_stream(stream: TokenStream, vocab: Vocab) -> str:
    """Stream back to canonical text, coordinates reprinted at 0.1 m."""
    buffer = _PieceBuffer()
    for element in stream.elements:
        if isinstance(element, TextElement):
            token = vocab.token(element.token_id)
            if token not in (PAD, BOS, EOS):
                buffer.word(token)
        elif isinstance(element, SpatialElement):
            buffer.piece(format_coordinate(element.coord, element.bev))
    return buffer.text()


def render_output(emitted: Sequence[int | Coordinate3D], vocab: Vocab) -> RenderResult:
    """
    Emitted ids, with the decoded coordinate following each IND, rendered as
    text. An IND without its coordinate renders as "(?)" and flags the result.
    """
    buffer = _PieceBuffer()
    incomplete = False
    for i, item in enumerate(emitted):
        if isinstance(item, Coordinate3D):
            if i == 0 or emitted[i - 1] != vocab.ind_id:
                buffer.piece(format_coordinate(item, bev=True))
            continue
        if item == vocab.eos_id:
            break
        if item == vocab.ind_id:
            following = emitted[i + 1] if i + 1 < len(emitted) else None
            if isinstance(following, Coordinate3D):
                buffer.piece(format_coordinate(following, bev=True))
            else:
                buffer.piece(MISSING_COORDINATE)
                incomplete = True
            continue
        token = vocab.token(item)
        if token not in (PAD, BOS):
            buffer.word(token)
    return RenderResult(text=buffer.text(), incomplete=incomplete)


def parse_waypoints(text: str, horizon: int = HORIZON) -> list[Coordinate3D] | None:
    """First ``horizon`` coordinates found in rendered text, or None if fewer."""
    found = [span.coordinate() for span in scan_coordinates(text)]
    if len(found) < horizon:
        return None
    return [Coordinate3D(x=c.x, y=c.y) for c in found[:horizon]]


def is_grammar_valid(text: str, horizon: int = HORIZON) -> bool:
    """The rendered output is the preamble followed by exactly ``horizon`` BEV coordinates."""
    number = r"-?\d+\.\d"
    pattern = rf"{' '.join(PREAMBLE)}(?: \({number}, {number}\)){{{horizon}}}"
    return re.fullmatch(pattern, text) is not None
