import numpy as np
import pytest
from pydantic import ValidationError

from spacetoken.diffcore.params import ParameterStore
from spacetoken.diffcore.tensor import Tensor, backward, constant, no_grad
from spacetoken.geometry import Coordinate3D
from spacetoken.spatial_pe import (
    ALPHA_PARAM,
    PeConfig,
    PeDecoder,
    PeError,
    PeScale,
    SpatialEncoding,
    alpha_tensor,
    encode,
    encode_batch,
    encode_bev,
    inject,
    lookup_bev,
    register_alpha,
    split_widths,
)
from spacetoken.trainer.losses import regression_loss
from spacetoken.trainer.models import TrainConfig
from spacetoken.trainer.optim import AdamW


@pytest.mark.parametrize(
    "dim,widths",
    [(6, (2, 2, 2)), (7, (2, 2, 3)), (12, (4, 4, 4)), (16, (6, 6, 4)), (128, (44, 44, 40))],
)
def test_split_widths(dim, widths):
    assert split_widths(dim) == widths
    assert sum(widths) == dim


@pytest.mark.parametrize("dim", [1, 4, 5])
def test_split_widths_too_small(dim):
    with pytest.raises(PeError):
        split_widths(dim)


def test_config_rejects_small_base():
    with pytest.raises(ValidationError):
        PeConfig(dim=6, base=1.0)


def test_origin_encoding():
    enc = encode(Coordinate3D(x=0, y=0, z=0), PeConfig(dim=6))
    assert enc.values.tolist() == [0.0, 1.0, 0.0, 1.0, 0.0, 1.0]
    assert enc.csv() == "0,1,0,1,0,1"


def test_first_pair_is_unit_frequency():
    cfg = PeConfig(dim=12)
    enc = encode(Coordinate3D(x=1.5, y=-2.0, z=0.25), cfg)
    assert enc.values[0:2] == pytest.approx([np.sin(1.5), np.cos(1.5)])
    assert enc.values[4:6] == pytest.approx([np.sin(-2.0), np.cos(-2.0)])
    assert enc.values[8:10] == pytest.approx([np.sin(0.25), np.cos(0.25)])


def test_frequencies_follow_the_base():
    cfg = PeConfig(dim=12, base=100.0)
    x = 3.0
    enc = encode(Coordinate3D(x=x, y=0.0), cfg)
    # second pair of a 4-wide axis uses base^(-2/4)
    freq = 100.0 ** (-0.5)
    assert enc.values[2:4] == pytest.approx([np.sin(x * freq), np.cos(x * freq)])


def test_odd_axis_width_fills_the_trailing_sine():
    cfg = PeConfig(dim=7)
    enc = encode(Coordinate3D(x=0.0, y=0.0, z=2.0), cfg)
    z_block = enc.values[4:]
    freq = 20000.0 ** (-2.0 / 3)
    assert z_block == pytest.approx([np.sin(2.0), np.cos(2.0), np.sin(2.0 * freq)])


def test_bev_zeroes_the_z_block():
    cfg = PeConfig(dim=16)
    bev = encode_bev(4.0, -3.0, cfg)
    full = encode(Coordinate3D(x=4.0, y=-3.0, z=0.0), cfg)
    assert bev.bev
    assert np.all(bev.values[12:] == 0.0)
    assert bev.values[:12] == pytest.approx(full.values[:12])
    assert bev != full


def test_bev_encoding_rejects_nonzero_z_block():
    with pytest.raises(ValidationError):
        SpatialEncoding(values=np.ones(6), bev=True, z_width=2)


def test_encode_batch_rejects_non_finite():
    with pytest.raises(PeError):
        encode_batch(np.array([[0.0, np.inf, 0.0]]), PeConfig(dim=6))


def test_encode_batch_matches_single():
    cfg = PeConfig(dim=16)
    coords = np.array([[1.0, 2.0, 0.5], [-7.0, 0.3, 1.0]])
    batch = encode_batch(coords, cfg)
    for row, c in zip(batch, coords, strict=True):
        assert row == pytest.approx(encode(Coordinate3D.from_array(c), cfg).values)


def test_inject_adds_scaled_encoding():
    cfg = PeConfig(dim=6)
    tokens = constant(np.ones((2, 6)))
    coords = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
    out = inject(tokens, coords, constant(0.1), cfg)
    expected = 1.0 + 0.1 * encode_batch(coords, cfg)
    assert out.numpy() == pytest.approx(expected)


def test_inject_width_and_count_mismatch():
    cfg = PeConfig(dim=6)
    with pytest.raises(PeError):
        inject(constant(np.ones((2, 8))), np.zeros((2, 3)), constant(0.1), cfg)
    with pytest.raises(PeError):
        inject(constant(np.ones((2, 6))), np.zeros((3, 3)), constant(0.1), cfg)


def test_alpha_is_trainable_only_when_learnable():
    store = ParameterStore()
    register_alpha(store, PeScale(init=0.02, learnable=False))
    assert ALPHA_PARAM not in store
    assert alpha_tensor(store, PeScale(init=0.02, learnable=False)).item() == pytest.approx(0.02)

    register_alpha(store, PeScale(init=0.1))
    alpha = alpha_tensor(store, PeScale(init=0.1))
    assert alpha is store[ALPHA_PARAM]
    assert alpha.requires_grad


@pytest.mark.parametrize("xy", [(12.3, -4.7), (0.4, 0.0), (-30.0, 22.2)])
def test_lookup_bev_recovers_ground_points(xy):
    cfg = PeConfig(dim=128)
    found = lookup_bev(encode_bev(*xy, cfg).values, cfg)
    assert found[:2] == pytest.approx(xy, abs=0.06)
    assert found[2] == 0.0


def test_lookup_bev_of_zero_vector_is_origin():
    assert lookup_bev(np.zeros(16), PeConfig(dim=16)).tolist() == [0.0, 0.0, 0.0]


def test_mlp_decoder_outputs_meters():
    store = ParameterStore()
    dec = PeDecoder.register(store, 16, np.random.default_rng(0))
    out = dec.forward(constant(np.zeros((3, 16))))
    assert out.shape == (3, 3)
    assert dec.target(np.ones((2, 3)), alpha=0.1).shape == (2, 3)


def test_sincos_decoder_reads_the_nearest_bev_point():
    cfg = PeConfig(dim=16)
    store = ParameterStore()
    dec = PeDecoder.register(store, 16, np.random.default_rng(0), kind="sincos", cfg=cfg)
    target = dec.target(np.array([[5.0, -2.0, 1.0]]), alpha=0.1)
    assert np.all(target[0, 12:] == 0.0)
    assert dec.to_coordinates(target)[0] == pytest.approx([5.0, -2.0, 0.0], abs=0.06)


def test_sincos_decoder_needs_matching_config():
    with pytest.raises(PeError):
        PeDecoder(ParameterStore(), 16, kind="sincos", cfg=PeConfig(dim=12))
    with pytest.raises(PeError):
        PeDecoder(ParameterStore(), 16, kind="conv")


def test_decoder_width_mismatch():
    store = ParameterStore()
    dec = PeDecoder.register(store, 16, np.random.default_rng(0))
    with pytest.raises(PeError):
        dec.forward(Tensor(np.zeros((1, 8))))


def test_scalar_evaluation_at_six_dims():
    enc = encode(Coordinate3D(x=1.0, y=2.0, z=3.0), PeConfig(dim=6))
    expected = [np.sin(1.0), np.cos(1.0), np.sin(2.0), np.cos(2.0), np.sin(3.0), np.cos(3.0)]
    np.testing.assert_allclose(enc.values, expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize("dim", [8, 64, 128, 2048])
def test_horizontal_axes_share_a_width(dim):
    wx, wy, wz = split_widths(dim)
    assert wx == wy
    assert wx + wy + wz == dim


def test_bev_batches_have_an_exact_zero_z_block():
    rng = np.random.default_rng(0)
    cfg = PeConfig(dim=64)
    z_width = split_widths(64)[2]
    coords = rng.uniform(-60.0, 60.0, size=(1000, 3))
    enc = encode_batch(coords, cfg, bev=True)
    assert np.all(enc[:, -z_width:] == 0.0)
    keys = rng.normal(size=(1000, 64))
    assert np.all(np.einsum("ij,ij->i", enc[:, -z_width:], keys[:, -z_width:]) == 0.0)


def test_lookup_bev_inverts_random_ground_points():
    rng = np.random.default_rng(1)
    cfg = PeConfig(dim=128)
    points = rng.uniform(-60.0, 60.0, size=(200, 2))
    found = np.stack([lookup_bev(encode_bev(x, y, cfg).values, cfg) for x, y in points])
    assert np.abs(found[:, :2] - points).max() <= 0.06


@pytest.mark.slow
def test_regression_decoder_learns_to_invert_the_encoding():
    rng = np.random.default_rng(2)
    cfg = PeConfig(dim=128)
    store = ParameterStore()
    dec = PeDecoder.register(store, 128, rng)
    optimizer = AdamW(store, TrainConfig(weight_decay=0.0))
    low, high = np.array([-60.0, -60.0, -5.0]), np.array([60.0, 60.0, 5.0])
    held_out = rng.uniform(low, high, size=(512, 3))

    def held_out_mae() -> float:
        with no_grad():
            pred = dec.forward(constant(encode_batch(held_out, cfg))).numpy()
        return float(np.abs(pred - held_out).mean())

    before = held_out_mae()
    for _ in range(3000):
        coords = rng.uniform(low, high, size=(256, 3))
        store.zero_grad()
        backward(regression_loss(dec.forward(constant(encode_batch(coords, cfg))), coords))
        optimizer.step(1e-3)
    assert held_out_mae() < 0.5 * before


@pytest.mark.parametrize("dim", [8, 64, 129])
def test_components_are_bounded(dim):
    rng = np.random.default_rng(3)
    cfg = PeConfig(dim=dim)
    coords = rng.uniform(-1e4, 1e4, size=(2000, 3))
    for bev in (False, True):
        enc = encode_batch(coords, cfg, bev=bev)
        assert np.all(np.abs(enc) <= 1.0)
        assert np.all(np.linalg.norm(enc, axis=-1) <= np.sqrt(dim))


def test_shift_is_a_rotation_per_frequency():
    rng = np.random.default_rng(4)
    cfg = PeConfig(dim=64)
    d_x = cfg.widths[0]
    positions = rng.uniform(-51.2, 51.2, size=500)
    for delta in (0.4, 3.7, -12.0):
        before = encode_batch(np.stack([positions, 0 * positions, 0 * positions], -1), cfg)
        shifted = np.stack([positions + delta, 0 * positions, 0 * positions], -1)
        after = encode_batch(shifted, cfg)
        for k in range(0, d_x, 2):
            x, y = before[:, k : k + 2], after[:, k : k + 2]
            m, *_ = np.linalg.lstsq(x, y, rcond=None)
            assert np.abs(x @ m - y).max() < 1e-9
            np.testing.assert_allclose(m.T @ m, np.eye(2), atol=1e-9)
            assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-9)


def test_ground_grid_encodings_are_distinguishable():
    cfg = PeConfig(dim=64)
    d_x = cfg.widths[0]
    axis = np.round(np.arange(-128, 129) * 0.4, 6)
    # the x and y blocks share widths, so one axis table covers both
    table = encode_batch(np.stack([axis, 0 * axis, 0 * axis], -1), cfg)[:, :d_x]
    dist = np.linalg.norm(table[:, None] - table[None], axis=-1)
    np.fill_diagonal(dist, np.inf)
    assert dist.min() > 0.0
    assert np.all(np.abs(dist.argmin(axis=1) - np.arange(len(axis))) == 1)


@pytest.mark.slow
def test_nearest_ground_grid_encoding_is_a_neighbour():
    cfg = PeConfig(dim=64)
    axis = np.round(np.arange(-128, 129) * 0.4, 6)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    grid = np.stack([xx.ravel(), yy.ravel(), 0 * xx.ravel()], -1)
    everything = encode_batch(grid, cfg)
    rng = np.random.default_rng(5)
    queries = np.concatenate([[0, len(grid) // 2, len(grid) - 1], rng.choice(len(grid), 200)])
    for q in queries:
        d = np.linalg.norm(everything - everything[q], axis=-1)
        d[q] = np.inf
        nearest = int(d.argmin())
        assert d[nearest] > 0.0
        steps = np.abs(np.array(divmod(nearest, len(axis))) - np.array(divmod(q, len(axis))))
        assert steps.max() == 1
