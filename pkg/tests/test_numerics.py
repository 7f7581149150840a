import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gradutil import check_op
from relgrid.numerics import (
    BackwardError,
    Conv2d,
    Linear,
    NumericalError,
    RMSprop,
    Tensor,
    clip_by_global_norm,
    concat,
    conv2d,
    exp,
    feature_max_pool,
    linear,
    log,
    log_softmax,
    max_,
    no_grad,
    relu,
    softmax,
    square,
)
from relgrid.numerics import checkpoint, kernels
from relgrid.numerics.tensor import abs_

OPS = {
    "add": (lambda a, b: a + b, [(3, 4), (4,)]),
    "sub": (lambda a, b: a - b, [(3, 4), (3, 1)]),
    "mul": (lambda a, b: a * b, [(2, 3, 4), (3, 4)]),
    "scale": (lambda a: a / 4.0, [(3, 4)]),
    "exp": (lambda a: exp(a), [(5, 6)]),
    "log": (lambda a: log(a * a + 0.5), [(5, 6)]),
    "relu": (lambda a: relu(a), [(6, 7)]),
    "square": (lambda a: square(a), [(6, 7)]),
    "abs": (lambda a: abs_(a), [(6, 7)]),
    "sum": (lambda a: a.sum(axis=1), [(4, 5, 3)]),
    "mean": (lambda a: a.mean(axis=0, keepdims=True), [(4, 5)]),
    "max": (lambda a: max_(a, axis=1), [(4, 9, 3)]),
    "feature_max_pool": (lambda a: feature_max_pool(a), [(2, 9, 5)]),
    "softmax": (lambda a: softmax(a, axis=-1), [(3, 7)]),
    "log_softmax": (lambda a: log_softmax(a, axis=-1), [(3, 7)]),
    "matmul": (lambda a, b: a @ b, [(2, 3, 4), (4, 5)]),
    "batched_matmul": (lambda a, b: a @ b, [(2, 3, 4, 5), (2, 3, 5, 2)]),
    "linear": (lambda x, w, b: linear(x, w, b), [(3, 6), (6, 4), (4,)]),
    "reshape_transpose": (lambda a: a.reshape(3, 4, 2).transpose(2, 0, 1), [(6, 4)]),
    "getitem": (lambda a: a[..., 1:3], [(4, 5)]),
    "concat": (lambda a, b: concat([a, b], axis=-1), [(3, 2), (3, 4)]),
    "conv2d_k2": (lambda x, w, b: conv2d(x, w, b), [(2, 5, 5, 3), (2, 2, 3, 4), (4,)]),
    "conv2d_k3": (lambda x, w, b: conv2d(x, w, b), [(1, 4, 6, 2), (3, 3, 2, 3), (3,)]),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradient_float64(name):
    fn, shapes = OPS[name]
    rng = np.random.default_rng(abs(hash(name)) % 2**32)
    worst = check_op(fn, [rng.standard_normal(s) for s in shapes], rng, samples=50, h=1e-6)
    assert worst < 1e-6


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradient_float32(name):
    fn, shapes = OPS[name]
    rng = np.random.default_rng(7 + len(name))
    worst = check_op(fn, [rng.standard_normal(s) for s in shapes], rng, samples=50, h=1e-6,
                     analytic_dtype=np.float32)
    assert worst < 1e-3


def test_conv_sum_gradient_h1e3():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((1, 6, 6, 3))
    w = rng.standard_normal((2, 2, 3, 4))
    worst = check_op(lambda x_: conv2d(x_, Tensor(w)), [x], rng, samples=50, h=1e-3)
    assert worst < 1e-4


def test_conv_single_pixel():
    x = Tensor(np.full((1, 1, 1, 1), 3.0))
    w = Tensor(np.zeros((2, 2, 1, 1)))
    w.data[0, 0, 0, 0] = 5.0  # the tap aligned with the pixel; others see padding
    assert conv2d(x, w).data.item() == 15.0


def test_conv_output_shape():
    layer = Conv2d(3, 12, 2, np.random.default_rng(0))
    out = layer(Tensor(np.zeros((1, 12, 12, 3), dtype=np.float32)))
    assert out.shape == (1, 12, 12, 12)


def test_conv_matches_naive_loop():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((2, 4, 5, 3))
    w = rng.standard_normal((2, 2, 3, 2))
    out = conv2d(Tensor(x), Tensor(w)).data
    ref = np.zeros((2, 4, 5, 2))
    for n in range(2):
        for i in range(4):
            for j in range(5):
                for di in range(2):
                    for dj in range(2):
                        si, sj = i + di, j + dj  # padding goes after
                        if si < 4 and sj < 5:
                            ref[n, i, j] += x[n, si, sj] @ w[di, dj]
    assert np.allclose(out, ref, atol=1e-12)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_kernels_match_fallback(dtype, k):
    x = np.random.default_rng(k).standard_normal((2, 5, 4, 3)).astype(dtype)
    cols = kernels.im2col(x, k, k)
    assert np.array_equal(cols, kernels.im2col_py(x, k, k))
    assert np.allclose(kernels.col2im(cols, x.shape, k, k), kernels.col2im_py(cols, x.shape, k, k))


def test_softmax_uniform_row():
    out = softmax(Tensor(np.full((2, 5), 3.7)), axis=-1).data
    assert np.allclose(out, 0.2, atol=1e-15)


def test_softmax_stable_for_large_logits():
    out = softmax(Tensor(np.array([[1000.0, 1000.0, -1000.0]]))).data
    assert np.allclose(out, [[0.5, 0.5, 0.0]])


@given(arrays(np.float64, (7,), elements=st.floats(0.01, 100)))
def test_relu_of_negative_is_zero(x):
    assert np.all(relu(Tensor(-x)).data == 0)


def test_feature_max_pool_matches_loop():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((3, 16, 5))
    out = feature_max_pool(Tensor(x)).data
    assert out.shape == (3, 5)
    for b in range(3):
        for d in range(5):
            best = -np.inf
            for e in range(16):
                best = max(best, x[b, e, d])
            assert out[b, d] == best


def test_weighted_sum_gradient_is_input():
    x = np.arange(6.0).reshape(2, 3)
    w = Tensor(np.ones((2, 3)), requires_grad=True)
    (w * Tensor(x)).sum().backward()
    assert np.array_equal(w.grad, x)


def test_zero_scaled_loss_gives_zero_grads():
    layer = Linear(4, 3, np.random.default_rng(0), np.float64)
    (layer(Tensor(np.ones((2, 4)))).sum() * 0.0).backward()
    for _, p in layer.named_parameters():
        assert np.all(p.grad == 0)


def test_backward_twice_raises():
    w = Tensor(np.ones(3), requires_grad=True)
    loss = (w * w).sum()
    loss.backward()
    with pytest.raises(BackwardError):
        loss.backward()


def test_no_grad_records_nothing():
    w = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        out = (w * 2.0).sum()
    assert not out.requires_grad


def test_gradients_accumulate_over_reuse():
    w = Tensor(np.array([2.0]), requires_grad=True)
    (w * w + w).sum().backward()
    assert w.grad[0] == 5.0


# -- optimizer --------------------------------------------------------------
def test_zero_gradient_leaves_params():
    p = {"w": np.array([1.0, -2.0])}
    RMSprop(p, lr=0.1).step({"w": np.zeros(2)})
    assert np.array_equal(p["w"], [1.0, -2.0])


def test_clip_800_to_400():
    g = {"a": np.array([480.0]), "b": np.array([640.0])}  # norm 800
    clipped, norm = clip_by_global_norm(g, 400.0)
    assert norm == 800.0
    assert np.isclose(np.sqrt(sum(float(v @ v) for v in clipped.values())), 400.0)
    assert np.allclose(clipped["a"] / clipped["b"], 0.75)


def test_rmsprop_three_steps_by_hand():
    lr, decay, eps = 0.01, 0.9, 0.1
    p = {"w": np.array([1.0])}
    opt = RMSprop(p, lr=lr, decay=decay, eps=eps, clip=None)
    grads = [0.5, -1.0, 2.0]
    w, ms = 1.0, 0.0
    for g in grads:
        opt.step({"w": np.array([g])})
        ms = decay * ms + (1 - decay) * g * g
        w = w - lr * g / (ms + eps) ** 0.5
    assert p["w"][0] == pytest.approx(w, abs=1e-15)
    # written-out values of the same recurrence
    assert w == pytest.approx(1 - 0.0141421 + 0.0212000 - 0.0256022, abs=1e-7)


def test_rmsprop_rejects_nan_without_touching_state():
    p = {"w": np.array([1.0, 2.0])}
    opt = RMSprop(p, lr=0.1)
    with pytest.raises(NumericalError):
        opt.step({"w": np.array([np.nan, 1.0])})
    assert np.array_equal(p["w"], [1.0, 2.0])
    assert np.all(opt.mean_square["w"] == 0)


def test_rmsprop_shape_mismatch():
    opt = RMSprop({"w": np.zeros(2)}, lr=0.1)
    with pytest.raises(ValueError):
        opt.step({"w": np.zeros(3)})


# -- checkpoints ------------------------------------------------------------
def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {"a.weight": rng.standard_normal((3, 4)).astype(np.float32),
              "b": rng.standard_normal(5)}
    meta = {"module": "mhdpa", "note": "x = y"}
    path = tmp_path / "c.bin"
    checkpoint.save(path, arrays, meta)
    back, meta2 = checkpoint.load(path)
    assert list(back) == list(arrays)
    for k in arrays:
        assert back[k].dtype == arrays[k].dtype
        assert np.array_equal(back[k], arrays[k])
    assert meta2 == {k: str(v) for k, v in meta.items()}
    assert checkpoint.dumps(back, meta2) == path.read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load(path)
