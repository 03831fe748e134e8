import numpy as np
import pytest

from spacetoken.coord_text import (
    IND,
    EgoStatusElement,
    IndicatorElement,
    SpatialElement,
    StreamError,
    TextElement,
    TokenizationError,
    TokenStream,
    Vocab,
    build_digit_target_stream,
    build_target_stream,
    build_trajectory_stream,
    ego_prefix,
    format_prompt,
    fuzz_strings,
    generate_corpus,
    is_grammar_valid,
    lm_targets,
    load_vocab,
    parse_waypoints,
    prompt_stream,
    regression_slots,
    render_output,
    render_stream,
    save_vocab,
    scan_coordinates,
    tokenize,
)
from spacetoken.coord_text.corpus import reprint
from spacetoken.diffcore.ops import IGNORE_INDEX
from spacetoken.geometry import Coordinate3D

WAYPOINTS = [Coordinate3D(x=1.0 * i, y=-0.5 * i) for i in range(1, 7)]


def test_tokenize():
    assert tokenize("Turn LEFT at (1.5, -2)") == [
        "turn",
        "left",
        "at",
        "(",
        "1",
        ".",
        "5",
        ",",
        "-",
        "2",
        ")",
    ]


def test_scan_coordinates():
    text = "car at (12.4, -3.1, 0.8) ; goal (3, 4) ; time (noon) ; (1, 2, 3, 4)"
    spans = scan_coordinates(text)
    assert [s.values for s in spans] == [(12.4, -3.1, 0.8), (3.0, 4.0)]
    assert [s.bev for s in spans] == [False, True]
    assert text[spans[0].start : spans[0].end] == "(12.4, -3.1, 0.8)"


def test_prompt_round_trip_with_spatial_tokens(vocab):
    for prompt in generate_corpus(50, seed=3):
        stream = prompt_stream(prompt, vocab)
        assert stream.indicator_count == stream.spatial_count == len(scan_coordinates(prompt))
        assert render_stream(stream, vocab) == prompt


def test_prompt_round_trip_with_digits(vocab):
    for prompt in generate_corpus(50, seed=4):
        stream = prompt_stream(prompt, vocab, spatial=False)
        assert stream.spatial_count == 0
        assert render_stream(stream, vocab) == prompt


def test_fuzzed_strings_round_trip(vocab):
    for text in fuzz_strings(200, seed=5):
        assert render_stream(prompt_stream(text, vocab), vocab) == text


@pytest.mark.parametrize(
    "text", ["time (noon) ; speed 30 km", "lane 12, 34 ahead", "(1, 2, 3, 4)", "(7)"]
)
def test_non_coordinates_stay_text(vocab, text):
    stream = prompt_stream(text, vocab)
    assert stream.spatial_count == 0
    assert stream.indicator_count == 0


def test_overflowing_literals_stay_text(vocab):
    text = "goal (" + "9" * 400 + ", 2.0) then (1.0, 2.0)"
    spans = scan_coordinates(text)
    assert [s.values for s in spans] == [(1.0, 2.0)]
    stream = prompt_stream(text, vocab)
    assert stream.spatial_count == stream.indicator_count == 1
    assert reprint(text) == text
    assert parse_waypoints(text, horizon=1) == [Coordinate3D(x=1.0, y=2.0)]


def test_reprint_is_identity_on_the_corpus():
    for prompt in generate_corpus(20, seed=6):
        assert reprint(prompt) == prompt
    assert reprint("at (1.25, 3)") == "at (1.2, 3.0)"


def test_format_prompt_lists_agents():
    prompt = format_prompt("left", [("car", Coordinate3D(x=12.4, y=-3.1, z=0.8))])
    assert prompt == (
        "driving scene ; command : turn left ; agents : car at (12.4, -3.1, 0.8) ; "
        "plan the ego trajectory"
    )
    assert "agents : none" in format_prompt("straight", [])


def test_spatial_must_follow_an_indicator():
    with pytest.raises(StreamError):
        TokenStream(elements=(SpatialElement(coord=Coordinate3D(x=1, y=2)),))


def test_indicator_must_precede_a_spatial(vocab):
    with pytest.raises(StreamError):
        TokenStream(elements=(IndicatorElement(), TextElement(token_id=vocab.eos_id)))


def test_trailing_indicator_is_an_open_slot(vocab):
    stream = TokenStream(elements=(TextElement(token_id=vocab.bos_id), IndicatorElement()))
    assert stream.indicator_count == 1
    assert stream.spatial_count == 0


def test_ego_elements_only_lead_the_stream(vocab):
    stream = ego_prefix(2) + prompt_stream("plan", vocab)
    assert isinstance(stream.elements[0], EgoStatusElement)
    assert len(stream) == 4
    with pytest.raises(StreamError):
        prompt_stream("plan", vocab) + ego_prefix(0)


def test_lm_targets_and_regression_slots(vocab):
    coord = Coordinate3D(x=1.0, y=2.0)
    stream = TokenStream(
        elements=(
            TextElement(token_id=vocab.token_id("plan")),
            IndicatorElement(),
            SpatialElement(coord=coord, bev=True),
            TextElement(token_id=vocab.eos_id),
        )
    )
    targets = lm_targets(stream, vocab)
    assert targets.tolist() == [vocab.ind_id, IGNORE_INDEX, vocab.eos_id, IGNORE_INDEX]
    assert regression_slots(stream) == [(1, coord)]


def test_target_stream_layout(vocab):
    stream = build_target_stream(WAYPOINTS, vocab)
    assert stream.indicator_count == 6
    assert len(stream) == 2 + 12 + 1
    assert all(isinstance(e, SpatialElement) and e.bev for e in stream.elements[3:14:2])
    assert render_stream(stream, vocab) == (
        "trajectory : (1.0, -0.5) (2.0, -1.0) (3.0, -1.5) (4.0, -2.0) (5.0, -2.5) (6.0, -3.0)"
    )
    assert is_grammar_valid(render_stream(stream, vocab))


def test_target_stream_needs_full_horizon(vocab):
    with pytest.raises(StreamError):
        build_target_stream(WAYPOINTS[:5], vocab)


def test_digit_target_renders_like_the_spatial_target(vocab):
    digits = build_digit_target_stream(WAYPOINTS, vocab)
    assert digits.spatial_count == 0
    spatial = build_target_stream(WAYPOINTS, vocab)
    assert render_stream(digits, vocab) == render_stream(spatial, vocab)


def test_trajectory_stream_carries_one_indicator_id(vocab):
    stream = build_trajectory_stream(vocab)
    ids = [e.token_id for e in stream.elements]
    assert ids.count(vocab.ind_id) == 1
    assert ids[-1] == vocab.eos_id


def test_render_output_and_parse(vocab):
    emitted: list[int | Coordinate3D] = [vocab.token_id("trajectory"), vocab.token_id(":")]
    for w in WAYPOINTS:
        emitted += [vocab.ind_id, w]
    emitted.append(vocab.eos_id)
    result = render_output(emitted, vocab)
    assert not result.incomplete
    assert is_grammar_valid(result.text)
    parsed = parse_waypoints(result.text)
    assert parsed is not None
    assert np.allclose([(c.x, c.y) for c in parsed], [(w.x, w.y) for w in WAYPOINTS])


def test_render_output_marks_missing_coordinates(vocab):
    result = render_output([vocab.token_id("trajectory"), vocab.ind_id], vocab)
    assert result.incomplete
    assert result.text == "trajectory (?)"
    assert parse_waypoints(result.text) is None


@pytest.mark.parametrize(
    "points,valid",
    [
        (["(1.0, 2.0)"] * 6, True),
        (["(1.0, 2.0)"] * 5, False),
        (["(1.0, 2.0)"] * 7, False),
        (["(1.0, 2.0, 0.0)"] + ["(1.0, 2.0)"] * 5, False),
        (["(1, 2)"] * 6, False),
    ],
)
def test_grammar(points, valid):
    assert is_grammar_valid(" ".join(["trajectory :", *points])) is valid
    assert not is_grammar_valid(" ".join(["plan :", *points]))


def test_vocab_layout(vocab):
    assert vocab.tokens[:4] == ("<pad>", "<bos>", "<eos>", "<unk>")
    assert vocab.ind_id == len(vocab)
    assert vocab.extended_size == len(vocab) + 1
    assert vocab.token(vocab.ind_id) == IND
    assert vocab.token_id("zebra") == vocab.unk_id
    with pytest.raises(TokenizationError):
        vocab.token(vocab.extended_size)


def test_vocab_save_and_load(vocab, tmp_path):
    save_vocab(vocab, tmp_path)
    assert load_vocab(tmp_path) == vocab


def test_vocab_from_mapping_checks_ids():
    with pytest.raises(TokenizationError):
        Vocab.from_mapping({"<pad>": 0, "<bos>": 1, "<eos>": 2, "<unk>": 4})
    with pytest.raises(TokenizationError):
        Vocab.from_mapping({"<pad>": 0, "<bos>": 1, "<eos>": 2, "<unk>": 3, IND: 7})


def test_load_vocab_missing(tmp_path):
    with pytest.raises(TokenizationError):
        load_vocab(tmp_path)
