import numpy as np
import pytest

from spacetoken.coord_text import IndicatorElement, SpatialElement, TokenStream
from spacetoken.diffcore.gradcheck import grad_check
from spacetoken.diffcore.params import CheckpointError
from spacetoken.diffcore.tensor import no_grad
from spacetoken.planner import (
    ModelConfig,
    ModelConfigError,
    PlannerInput,
    clone_state,
    embed_stream,
    embed_views,
    forward,
    generate,
    load_checkpoint,
    prompt_input,
    run,
    save_checkpoint,
    training_input,
)
from spacetoken.planner.checkpoint import MODEL_CONFIG_FILE
from spacetoken.spatial_pe import ALPHA_PARAM
from spacetoken.spatial_pe.decoder import DECODER_NAME
from spacetoken.trainer.losses import batch_loss
from spacetoken.trainer.models import TrainConfig

ALL_OFF = {"inject_visual": False, "encode_text_coords": False, "encode_ego": False}


def _logits(scene, inp, state):
    with no_grad():
        logits, _ = run(scene, inp, state)
    return logits.numpy()


def test_invalid_model_configs():
    with pytest.raises(ModelConfigError):
        ModelConfig(width=18, heads=2)
    with pytest.raises(ModelConfigError):
        ModelConfig(image_size=16, patch_size=5)
    with pytest.raises(ModelConfigError):
        ModelConfig(task_specific=True, pe_decoder="sincos")
    with pytest.raises(ModelConfigError):
        ModelConfig(schema_version=2)


def test_same_seed_same_weights(tiny_config, make_state):
    a, b = make_state(tiny_config, 5), make_state(tiny_config, 5)
    assert a.store.names() == b.store.names()
    for name, tensor in a.store.items():
        np.testing.assert_array_equal(tensor.data, b.store[name].data)
    c = make_state(tiny_config, 6)
    assert not np.array_equal(c.store["lm_head.weight"].data, a.store["lm_head.weight"].data)


def test_digit_mode_differs_only_by_the_coordinate_interface(tiny_config, make_state):
    digits = make_state(tiny_config.model_copy(update={"mode": "digit_text"}))
    all_off = make_state(tiny_config.model_copy(update=ALL_OFF))
    extra = set(all_off.store.names()) - set(digits.store.names())
    assert set(digits.store.names()) <= set(all_off.store.names())
    assert extra
    assert all(n == ALPHA_PARAM or n.startswith(DECODER_NAME) for n in extra)
    assert digits.decoder is None
    assert all_off.decoder is not None


def test_fixed_alpha_is_not_a_parameter(tiny_config, make_state):
    state = make_state(tiny_config.model_copy(update={"alpha_learnable": False}))
    assert ALPHA_PARAM not in state.store


def test_whole_trajectory_decoding_has_no_waypoint_decoder(tiny_config, make_state):
    state = make_state(tiny_config.model_copy(update={"task_specific": True}))
    assert state.decoder is None
    assert "trajectory_head.0.weight" in state.store


def test_prompt_input_layout(tiny_config, vocab, scenes):
    scene = scenes[0]
    inp = prompt_input(scene, vocab, tiny_config)
    # ego-status row + one slot per history pose, then the prompt, then BOS
    assert inp.stream.elements[-1].token_id == vocab.bos_id
    assert inp.target_start == len(inp.stream)
    assert inp.stream.spatial_count == len(scene.agents)
    assert inp.ego_xy.shape == (len(scene.history), 2)

    digits = prompt_input(scene, vocab, tiny_config.model_copy(update={"mode": "digit_text"}))
    assert digits.stream.spatial_count == 0


def test_training_input_appends_the_answer(tiny_config, vocab, scenes):
    scene = scenes[1]
    inp = training_input(scene, vocab, tiny_config)
    answer = inp.stream.elements[inp.target_start :]
    assert sum(isinstance(e, IndicatorElement) for e in answer) == 6
    assert sum(isinstance(e, SpatialElement) for e in answer) == 6
    assert answer[-1].token_id == vocab.eos_id


def test_visual_tokens(tiny_config, make_state, scenes):
    state = make_state(tiny_config)
    scene = scenes[0]
    with no_grad():
        visual = embed_views(scene.views, scene.rig, state)
    assert visual.shape == (tiny_config.visual_tokens, tiny_config.width)
    assert tiny_config.visual_tokens == 8
    with pytest.raises(ModelConfigError):
        embed_views(scene.views[:1], scene.rig, state)


def test_visual_injection_changes_the_visual_tokens(tiny_config, make_state, scenes):
    scene = scenes[0]
    on = make_state(tiny_config)
    off = make_state(tiny_config.model_copy(update={"inject_visual": False}))
    with no_grad():
        a = embed_views(scene.views, scene.rig, on).numpy()
        b = embed_views(scene.views, scene.rig, off).numpy()
    assert not np.allclose(a, b)


def _with_depth(views, depths):
    return [v.model_copy(update={"depth": d}) for v, d in zip(views, depths, strict=True)]


def test_visual_tokens_ignore_depth_without_injection(tiny_config, make_state, scenes):
    scene = scenes[0]
    off = make_state(tiny_config.model_copy(update={"inject_visual": False}))
    rng = np.random.default_rng(0)
    noisy = _with_depth(
        scene.views,
        [rng.uniform(1.0, 50.0, v.depth.shape).astype(np.float32) for v in scene.views],
    )
    with no_grad():
        a = embed_views(scene.views, scene.rig, off).numpy()
        b = embed_views(noisy, scene.rig, off).numpy()
    np.testing.assert_array_equal(a, b)


def test_zero_scale_matches_no_injection(tiny_config, make_state, scenes):
    scene = scenes[1]
    zero = make_state(tiny_config.model_copy(update={"alpha_init": 0.0}))
    off = make_state(tiny_config.model_copy(update={"inject_visual": False}))
    with no_grad():
        a = embed_views(scene.views, scene.rig, zero).numpy()
        b = embed_views(scene.views, scene.rig, off).numpy()
    np.testing.assert_array_equal(a, b)


def test_one_patch_depth_moves_only_its_token(tiny_config, make_state, scenes):
    scene = scenes[2]
    state = make_state(tiny_config)
    depth = scene.views[0].depth.copy()
    # view 0, patch row 1, col 1: token 3
    region = depth[8:16, 8:16]
    region[:] = region.min() * 0.5
    moved = _with_depth(scene.views, [depth, scene.views[1].depth])
    with no_grad():
        a = embed_views(scene.views, scene.rig, state).numpy()
        b = embed_views(moved, scene.rig, state).numpy()
    changed = [i for i in range(len(a)) if not np.array_equal(a[i], b[i])]
    assert changed == [3]


def test_spatial_element_rejected_in_digit_mode(tiny_config, vocab, make_state, scenes):
    inp = training_input(scenes[0], vocab, tiny_config)
    digits = make_state(tiny_config.model_copy(update={"mode": "digit_text"}))
    with pytest.raises(ModelConfigError):
        embed_stream(inp, digits)


def test_forward_is_causal(tiny_config, vocab, make_state, scenes):
    state = make_state(tiny_config)
    scene = scenes[2]
    full = training_input(scene, vocab, tiny_config)
    head = PlannerInput(
        stream=TokenStream(elements=full.stream.elements[:-3]),
        target_start=full.target_start,
        ego_features=full.ego_features,
        ego_xy=full.ego_xy,
    )
    a = _logits(scene, full, state)
    b = _logits(scene, head, state)
    assert a.shape[0] == b.shape[0] + 3
    np.testing.assert_allclose(a[: b.shape[0]], b, atol=1e-5)


def test_forward_rejects_long_sequences(tiny_config, vocab, make_state, scenes):
    state = make_state(tiny_config.model_copy(update={"max_seq_len": 16}))
    scene = scenes[0]
    inp = prompt_input(scene, vocab, state.config)
    with pytest.raises(ModelConfigError):
        with no_grad():
            forward(embed_views(scene.views, scene.rig, state), embed_stream(inp, state), state)


def test_generation_is_deterministic(tiny_config, make_state, scenes):
    state = make_state(tiny_config)
    a = generate(scenes[3], state, max_steps=10)
    b = generate(scenes[3], state, max_steps=10)
    assert a == b
    assert len(a.emitted) <= 10


def test_indicator_routes_through_the_coordinate_decoder(tiny_config, vocab, make_state, scenes):
    state = make_state(tiny_config)
    bias = state.store["lm_head.bias"].data
    bias[:] = -50.0
    bias[vocab.ind_id] = 50.0
    result = generate(scenes[0], state, max_steps=6)
    assert result.head_log == ["lm", "pe"] * 3
    assert result.emitted == [vocab.ind_id] * 3
    assert len(result.waypoints) == 3
    assert result.truncated
    assert not result.grammar_valid


def test_eos_stops_generation(tiny_config, vocab, make_state, scenes):
    state = make_state(tiny_config)
    bias = state.store["lm_head.bias"].data
    bias[:] = -50.0
    bias[vocab.eos_id] = 50.0
    result = generate(scenes[0], state)
    assert result.emitted == [vocab.eos_id]
    assert not result.truncated
    assert result.waypoints == []


def test_checkpoint_round_trip(tiny_config, vocab, make_state, scenes, tmp_path):
    state = make_state(tiny_config, seed=3)
    save_checkpoint(tmp_path, state)
    restored = load_checkpoint(tmp_path)
    assert restored.config == state.config
    assert restored.vocab == state.vocab
    inp = training_input(scenes[0], vocab, tiny_config)
    np.testing.assert_array_equal(
        _logits(scenes[0], inp, restored), _logits(scenes[0], inp, state)
    )


def test_checkpoint_with_broken_config(tiny_config, make_state, tmp_path):
    save_checkpoint(tmp_path, make_state(tiny_config))
    (tmp_path / MODEL_CONFIG_FILE).write_text('{"width": 18, "heads": 2}')
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path)


def test_clone_state_is_independent(tiny_config, make_state):
    state = make_state(tiny_config)
    copy = clone_state(state)
    copy.store["lm_head.bias"].data[:] = 1.0
    assert not np.any(state.store["lm_head.bias"].data == 1.0)
    assert copy.decoder is not None


@pytest.mark.parametrize(
    "update",
    [
        {},
        pytest.param({"mode": "digit_text"}, marks=pytest.mark.slow),
        pytest.param({"pe_decoder": "sincos"}, marks=pytest.mark.slow),
        pytest.param({"task_specific": True}, marks=pytest.mark.slow),
        pytest.param({"pe_encoder": "mlp", "alpha_learnable": False}, marks=pytest.mark.slow),
    ],
)
def test_full_model_gradients(vocab, make_state, scenes, update):
    config = ModelConfig(
        width=32, layers=2, heads=2, patch_size=8, image_size=16, max_seq_len=512, **update
    )
    state = make_state(config, seed=1)
    cfg = TrainConfig(batch_size=1)
    batch = scenes[:1]
    report = grad_check(
        lambda store: batch_loss(batch, state, cfg)[0],
        state.store,
        tolerance=1e-4,
        step=1e-5,
        entries_per_param=4,
        floor=1e-3,
    )
    assert report.passed, [e for e in report.entries if e.max_rel_error >= 1e-4]
