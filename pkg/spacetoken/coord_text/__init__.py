from spacetoken.coord_text.corpus import (
    AGENT_CLASSES,
    COMMAND_PHRASES,
    corpus_vocab,
    format_prompt,
    fuzz_strings,
    generate_corpus,
)
from spacetoken.coord_text.models import (
    IND,
    CoordSpan,
    EgoStatusElement,
    IndicatorElement,
    RenderResult,
    SpatialElement,
    StreamError,
    TextElement,
    TokenizationError,
    TokenStream,
    Vocab,
)
from spacetoken.coord_text.scanner import scan_coordinates
from spacetoken.coord_text.stream import (
    HORIZON,
    build_digit_target_stream,
    build_stream,
    build_target_stream,
    build_trajectory_stream,
    ego_prefix,
    is_grammar_valid,
    lm_targets,
    parse_waypoints,
    prompt_stream,
    regression_slots,
    render_output,
    render_stream,
)
from spacetoken.coord_text.vocab import build_vocab, detokenize, load_vocab, save_vocab, tokenize

__all__ = [
    "AGENT_CLASSES",
    "COMMAND_PHRASES",
    "HORIZON",
    "IND",
    "CoordSpan",
    "EgoStatusElement",
    "IndicatorElement",
    "RenderResult",
    "SpatialElement",
    "StreamError",
    "TextElement",
    "TokenStream",
    "TokenizationError",
    "Vocab",
    "build_digit_target_stream",
    "build_stream",
    "build_target_stream",
    "build_trajectory_stream",
    "build_vocab",
    "corpus_vocab",
    "detokenize",
    "ego_prefix",
    "format_prompt",
    "fuzz_strings",
    "generate_corpus",
    "is_grammar_valid",
    "lm_targets",
    "load_vocab",
    "parse_waypoints",
    "prompt_stream",
    "regression_slots",
    "render_output",
    "render_stream",
    "save_vocab",
    "scan_coordinates",
    "tokenize",
]
