import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firelite.errors import ConfigError, ShapeError
from firelite.ops import (
    BatchNormParams,
    ConvSpec,
    batchnorm_infer,
    conv2d,
    dense,
    depthwise_conv2d,
    fold_batchnorm,
    global_avg_pool,
    relu,
    relu6,
    softmax,
)
from firelite.tensor import Tensor

from oracles import (
    batchnorm_reference,
    conv2d_reference,
    dense_reference,
    depthwise_conv2d_reference,
    global_avg_pool_reference,
)


def rand_tensor(rng, shape, lo=-1.0, hi=1.0):
    values = [rng.uniform(lo, hi) for _ in range(math.prod(shape))]
    return Tensor.from_values(shape, values)


class TestConvSpec:
    def test_bad_stride(self):
        with pytest.raises(ConfigError):
            ConvSpec(stride=3)

    def test_bad_padding(self):
        with pytest.raises(ConfigError):
            ConvSpec(padding="full")


class TestConv2d:
    def test_1x1_kernel_scales(self):
        x = Tensor.filled([1, 3, 3, 1], 1.0)
        k = Tensor.filled([1, 1, 1, 1], 2.0)
        out = conv2d(x, k, None, ConvSpec(1, "valid"))
        assert out.shape == (1, 3, 3, 1)
        assert out.data.tolist() == [2.0] * 9

    def test_3x3_ones_sums_window(self):
        x = Tensor.from_values([1, 3, 3, 1], list(range(1, 10)))
        k = Tensor.filled([3, 3, 1, 1], 1.0)
        out = conv2d(x, k, None, ConvSpec(1, "valid"))
        assert out.shape == (1, 1, 1, 1)
        assert out.get(0, 0, 0, 0) == 45.0

    def test_stride2_same_matches_loop_oracle(self):
        rng = random.Random(7)
        x = rand_tensor(rng, [1, 5, 5, 2])
        k = rand_tensor(rng, [3, 3, 2, 3])
        out = conv2d(x, k, None, ConvSpec(2, "same"))
        ref = conv2d_reference(x.array, k.array, None, 2, "same")
        np.testing.assert_allclose(out.array, np.asarray(ref), atol=1e-5)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            conv2d(Tensor.filled([1, 3, 3, 2], 0.0), Tensor.filled([1, 1, 3, 1], 0.0), None, ConvSpec())

    def test_kernel_larger_than_valid_input(self):
        with pytest.raises(ShapeError):
            conv2d(Tensor.filled([1, 2, 2, 1], 0.0), Tensor.filled([3, 3, 1, 1], 0.0), None, ConvSpec(1, "valid"))

    def test_bias_applied(self):
        x = Tensor.filled([1, 2, 2, 1], 0.0)
        k = Tensor.filled([1, 1, 1, 2], 1.0)
        out = conv2d(x, k, [0.5, -0.5], ConvSpec(1, "valid"))
        assert out.array[0, ..., 0].tolist() == [[0.5, 0.5], [0.5, 0.5]]
        assert out.array[0, ..., 1].tolist() == [[-0.5, -0.5], [-0.5, -0.5]]


class TestDepthwise:
    def test_per_channel_sums(self):
        x = np.ones((1, 3, 3, 2), dtype=np.float32)
        x[..., 1] = 2.0
        out = depthwise_conv2d(Tensor(x), Tensor.filled([3, 3, 2, 1], 1.0), None, ConvSpec(1, "valid"))
        assert out.get(0, 0, 0, 0) == 9.0
        assert out.get(0, 0, 0, 1) == 18.0

    def test_identity_kernel(self):
        rng = random.Random(3)
        x = rand_tensor(rng, [1, 4, 4, 3])
        out = depthwise_conv2d(x, Tensor.filled([1, 1, 3, 1], 1.0), None, ConvSpec(1, "same"))
        np.testing.assert_array_equal(out.array, x.array)

    def test_stride2_same_matches_loop_oracle(self):
        rng = random.Random(11)
        x = rand_tensor(rng, [1, 7, 7, 4])
        k = rand_tensor(rng, [3, 3, 4, 1])
        out = depthwise_conv2d(x, k, None, ConvSpec(2, "same"))
        ref = depthwise_conv2d_reference(x.array, k.array, None, 2, "same")
        np.testing.assert_allclose(out.array, np.asarray(ref), atol=1e-5)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            depthwise_conv2d(Tensor.filled([1, 3, 3, 2], 0.0), Tensor.filled([3, 3, 4, 1], 0.0), None, ConvSpec())


class TestBatchNorm:
    def test_identity_params(self):
        eps = 1e-3
        bn = BatchNormParams(np.ones(2), np.zeros(2), np.zeros(2), np.ones(2) - eps, eps)
        rng = random.Random(1)
        x = rand_tensor(rng, [1, 2, 2, 2])
        np.testing.assert_allclose(batchnorm_infer(x, bn).array, x.array, atol=1e-7)

    def test_hand_arithmetic(self):
        eps = 1e-3
        bn = BatchNormParams([2.0], [1.0], [3.0], [4.0 - eps], eps)
        out = batchnorm_infer(Tensor.from_values([1, 1], [5.0]), bn)
        assert out.get(0, 0) == pytest.approx(3.0, abs=1e-6)

    def test_matches_scalar_formula(self):
        rng = random.Random(5)
        c = 4
        bn = BatchNormParams(
            [rng.uniform(0.5, 2.0) for _ in range(c)],
            [rng.uniform(-1, 1) for _ in range(c)],
            [rng.uniform(-1, 1) for _ in range(c)],
            [rng.uniform(0.2, 2.0) for _ in range(c)],
            1e-3,
        )
        x = rand_tensor(rng, [2, 3, 3, c])
        out = batchnorm_infer(x, bn)
        for n in range(2):
            for i in range(3):
                for j in range(3):
                    for ch in range(c):
                        want = batchnorm_reference(
                            float(x.array[n, i, j, ch]),
                            float(bn.gamma[ch]),
                            float(bn.beta[ch]),
                            float(bn.moving_mean[ch]),
                            float(bn.moving_var[ch]),
                            bn.epsilon,
                        )
                        assert out.array[n, i, j, ch] == pytest.approx(want, abs=1e-6)

    def test_channel_mismatch(self):
        bn = BatchNormParams(np.ones(3), np.zeros(3), np.zeros(3), np.ones(3))
        with pytest.raises(ShapeError):
            batchnorm_infer(Tensor.filled([1, 2], 0.0), bn)

    def test_vector_length_mismatch(self):
        with pytest.raises(ShapeError):
            BatchNormParams(np.ones(3), np.zeros(2), np.zeros(3), np.ones(3))


class TestFoldBatchNorm:
    def test_identity_fold(self):
        eps = 1e-3
        bn = BatchNormParams(np.ones(2), np.zeros(2), np.zeros(2), np.ones(2) - eps, eps)
        rng = random.Random(2)
        k = rand_tensor(rng, [3, 3, 1, 2])
        bias = [0.25, -0.25]
        fk, fb = fold_batchnorm(k, bias, bn)
        np.testing.assert_allclose(fk.array, k.array, atol=1e-7)
        np.testing.assert_allclose(fb, bias, atol=1e-7)

    def test_no_bias_hand_arithmetic(self):
        eps = 1e-3
        bn = BatchNormParams([2.0], [0.0], [1.0], [4.0 - eps], eps)
        k = Tensor.filled([1, 1, 1, 1], 1.0)
        _, fb = fold_batchnorm(k, None, bn)
        assert fb[0] == pytest.approx(-1.0, abs=1e-6)

    @pytest.mark.parametrize("trial", range(20))
    def test_conv_fold_equivalence(self, trial):
        rng = random.Random(100 + trial)
        cin, cout = rng.choice([(1, 2), (2, 3), (3, 4)])
        spec = ConvSpec(rng.choice([1, 2]), rng.choice(["same", "valid"]))
        x = rand_tensor(rng, [1, 6, 6, cin])
        k = rand_tensor(rng, [3, 3, cin, cout])
        bn = BatchNormParams(
            [rng.uniform(0.5, 2.0) for _ in range(cout)],
            [rng.uniform(-1, 1) for _ in range(cout)],
            [rng.uniform(-1, 1) for _ in range(cout)],
            [rng.uniform(0.2, 2.0) for _ in range(cout)],
            1e-3,
        )
        unfolded = batchnorm_infer(conv2d(x, k, None, spec), bn)
        fk, fb = fold_batchnorm(k, None, bn)
        folded = conv2d(x, fk, fb, spec)
        scale = float(np.abs(unfolded.array).max()) or 1.0
        assert float(np.abs(folded.array - unfolded.array).max()) / scale <= 1e-4

    def test_depthwise_fold_equivalence(self):
        rng = random.Random(42)
        c = 3
        x = rand_tensor(rng, [1, 5, 5, c])
        k = rand_tensor(rng, [3, 3, c, 1])
        bn = BatchNormParams(
            [rng.uniform(0.5, 2.0) for _ in range(c)],
            [rng.uniform(-1, 1) for _ in range(c)],
            [rng.uniform(-1, 1) for _ in range(c)],
            [rng.uniform(0.2, 2.0) for _ in range(c)],
            1e-3,
        )
        spec = ConvSpec(1, "same")
        unfolded = batchnorm_infer(depthwise_conv2d(x, k, None, spec), bn)
        fk, fb = fold_batchnorm(k, None, bn)
        folded = depthwise_conv2d(x, fk, fb, spec)
        np.testing.assert_allclose(folded.array, unfolded.array, atol=1e-5)

    def test_channel_mismatch(self):
        bn = BatchNormParams(np.ones(3), np.zeros(3), np.zeros(3), np.ones(3))
        with pytest.raises(ShapeError):
            fold_batchnorm(Tensor.filled([1, 1, 2, 2], 1.0), None, bn)


class TestActivations:
    def test_relu(self):
        out = relu(Tensor.from_values([3], [-1.0, 0.0, 2.0]))
        assert out.data.tolist() == [0.0, 0.0, 2.0]

    def test_relu6(self):
        out = relu6(Tensor.from_values([3], [-1.0, 3.0, 9.0]))
        assert out.data.tolist() == [0.0, 3.0, 6.0]

    @given(st.lists(st.floats(min_value=-50, max_value=50, width=32), min_size=1, max_size=16))
    def test_relu_idempotent(self, values):
        t = Tensor.from_values([len(values)], values)
        once = relu(t)
        np.testing.assert_array_equal(relu(once).array, once.array)
        six_once = relu6(t)
        np.testing.assert_array_equal(relu6(six_once).array, six_once.array)


class TestGlobalAvgPool:
    def test_mean_of_four(self):
        out = global_avg_pool(Tensor.from_values([1, 2, 2, 1], [1, 2, 3, 4]))
        assert out.shape == (1, 1)
        assert out.get(0, 0) == pytest.approx(2.5)

    @given(st.floats(min_value=-10, max_value=10, width=32))
    def test_constant_tensor(self, v):
        out = global_avg_pool(Tensor.filled([2, 3, 3, 2], v))
        np.testing.assert_allclose(out.array, np.full((2, 2), v, dtype=np.float32), atol=1e-6)

    def test_matches_loop_oracle(self):
        rng = random.Random(9)
        x = rand_tensor(rng, [2, 7, 7, 8])
        ref = global_avg_pool_reference(x.array)
        np.testing.assert_allclose(global_avg_pool(x).array, np.asarray(ref), atol=1e-6)

    def test_rank_error(self):
        with pytest.raises(ShapeError):
            global_avg_pool(Tensor.filled([2, 2], 1.0))


class TestDense:
    def test_identity(self):
        x = Tensor.from_values([1, 2], [3.0, 4.0])
        w = Tensor.from_values([2, 2], [1, 0, 0, 1])
        out = dense(x, w, [0.0, 0.0])
        assert out.data.tolist() == [3.0, 4.0]

    def test_hand_arithmetic(self):
        x = Tensor.from_values([1, 2], [1.0, 2.0])
        w = Tensor.from_values([2, 2], [3, 0, 0, 3])
        out = dense(x, w, [1.0, 1.0])
        assert out.data.tolist() == [4.0, 7.0]

    def test_matches_loop_oracle(self):
        rng = random.Random(13)
        x = rand_tensor(rng, [4, 32])
        w = rand_tensor(rng, [32, 2])
        b = [rng.uniform(-1, 1) for _ in range(2)]
        ref = dense_reference(x.array, w.array, b)
        np.testing.assert_allclose(dense(x, w, b).array, np.asarray(ref), atol=1e-5)

    def test_inner_dim_mismatch(self):
        with pytest.raises(ShapeError):
            dense(Tensor.filled([1, 3], 0.0), Tensor.filled([2, 2], 0.0), [0.0, 0.0])


class TestSoftmax:
    def test_symmetry(self):
        out = softmax(Tensor.from_values([1, 2], [0.0, 0.0]))
        assert out.data.tolist() == [0.5, 0.5]

    def test_stability_large_values(self):
        out = softmax(Tensor.from_values([1, 2], [1000.0, 1000.0]))
        assert out.data.tolist() == [0.5, 0.5]

    def test_analytic(self):
        out = softmax(Tensor.from_values([1, 2], [math.log(1.0), math.log(3.0)]))
        np.testing.assert_allclose(out.array, [[0.25, 0.75]], atol=1e-6)

    # Values on a coarse grid keep ties exact; near-ties closer than one f32
    # ulp of exp() would make the argmax comparison ill-posed.
    @given(
        st.lists(
            st.lists(st.integers(-160, 160).map(lambda v: v / 4.0), min_size=2, max_size=5),
            min_size=1,
            max_size=4,
        ).filter(lambda rows: len({len(r) for r in rows}) == 1)
    )
    def test_properties(self, rows):
        t = Tensor.from_values([len(rows), len(rows[0])], [v for r in rows for v in r])
        out = softmax(t)
        sums = out.array.sum(axis=1)
        np.testing.assert_allclose(sums, np.ones_like(sums), atol=1e-6)
        assert (out.array >= 0).all() and (out.array <= 1).all()
        np.testing.assert_array_equal(np.argmax(out.array, axis=1), np.argmax(t.array, axis=1))


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_conv_output_shapes_follow_formulas(data):
    rng_shape = data.draw
    n = rng_shape(st.integers(1, 2))
    h = rng_shape(st.integers(1, 8))
    w = rng_shape(st.integers(1, 8))
    cin = rng_shape(st.integers(1, 4))
    cout = rng_shape(st.integers(1, 4))
    kh = rng_shape(st.integers(1, 3))
    kw = rng_shape(st.integers(1, 3))
    stride = rng_shape(st.sampled_from([1, 2]))
    padding = rng_shape(st.sampled_from(["same", "valid"]))
    if padding == "valid" and (kh > h or kw > w):
        with pytest.raises(ShapeError):
            conv2d(
                Tensor.filled([n, h, w, cin], 0.5),
                Tensor.filled([kh, kw, cin, cout], 0.5),
                None,
                ConvSpec(stride, padding),
            )
        return
    out = conv2d(
        Tensor.filled([n, h, w, cin], 0.5),
        Tensor.filled([kh, kw, cin, cout], 0.5),
        None,
        ConvSpec(stride, padding),
    )
    if padding == "same":
        expected = (n, math.ceil(h / stride), math.ceil(w / stride), cout)
    else:
        expected = (n, (h - kh) // stride + 1, (w - kw) // stride + 1, cout)
    assert out.shape == expected
