"""
Tests for the float64 tensor helpers
"""

import numpy as np
import pytest

from utils.errors import DimensionError, ValidationError
from utils.tensor_core import as_tensor, elementwise, log_softmax, matmul


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestAsTensor:
    def test_reshapes_and_freezes(self):
        t = as_tensor([1, 2, 3, 4, 5, 6], shape=(2, 3))
        assert t.shape == (2, 3)
        assert t.dtype == np.float64
        with pytest.raises(ValueError):
            t[0, 0] = 9.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            as_tensor([1, 2, 3], shape=(2, 2))

    def test_nonpositive_dimension(self):
        with pytest.raises(DimensionError):
            as_tensor([], shape=(0, 3))


class TestMatmul:
    @pytest.mark.parametrize("m,k,n", [(1, 1, 1), (3, 4, 2), (5, 1, 7)])
    def test_matches_triple_loop(self, rng, m, k, n):
        a = rng.standard_normal((m, k))
        b = rng.standard_normal((k, n))
        np.testing.assert_allclose(matmul(a, b), naive_matmul(a, b), rtol=1e-12, atol=1e-12)

    def test_inner_dimension_mismatch(self, rng):
        with pytest.raises(DimensionError) as exc:
            matmul(rng.standard_normal((2, 3)), rng.standard_normal((4, 2)))
        assert exc.value.left == (2, 3)
        assert exc.value.right == (4, 2)

    def test_rejects_vectors(self):
        with pytest.raises(DimensionError):
            matmul(np.ones(3), np.ones((3, 1)))


class TestElementwise:
    def test_scalar_and_tensor_operands(self):
        a = np.array([[1.0, -2.0]])
        np.testing.assert_array_equal(elementwise("add", a, 1.0), [[2.0, -1.0]])
        np.testing.assert_array_equal(elementwise("mul", a, a), [[1.0, 4.0]])
        np.testing.assert_array_equal(elementwise("sub", a, a), [[0.0, 0.0]])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            elementwise("add", np.ones((2, 2)), np.ones((2, 3)))

    def test_relu_and_sign(self):
        a = np.array([-1.5, 0.0, 2.0])
        np.testing.assert_array_equal(elementwise("relu", a), [0.0, 0.0, 2.0])
        np.testing.assert_array_equal(elementwise("sign", a), [-1.0, 0.0, 1.0])

    def test_clamp_is_idempotent(self, rng):
        a = rng.standard_normal((4, 5)) * 3
        once = elementwise("clamp", a, lo=-1.0, hi=1.0)
        assert once.min() >= -1.0 and once.max() <= 1.0
        np.testing.assert_array_equal(elementwise("clamp", once, lo=-1.0, hi=1.0), once)

    def test_clamp_needs_ordered_bounds(self):
        with pytest.raises(ValidationError):
            elementwise("clamp", np.ones(2), lo=1.0, hi=0.0)

    def test_unknown_op(self):
        with pytest.raises(ValidationError):
            elementwise("tanh", np.ones(2))


class TestLogSoftmax:
    def test_matches_extended_precision(self, rng):
        logits = rng.standard_normal((6, 4)) * 5
        wide = logits.astype(np.longdouble)
        expected = wide - np.log(np.exp(wide - wide.max(axis=1, keepdims=True)).sum(axis=1, keepdims=True)) - wide.max(
            axis=1, keepdims=True
        )
        np.testing.assert_allclose(log_softmax(logits), expected.astype(np.float64), atol=1e-12)

    def test_large_logits_stay_finite(self):
        out = log_softmax(np.array([[1000.0, 0.0]]))
        assert np.all(np.isfinite(out))
        assert out[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert out[0, 1] == pytest.approx(-1000.0)

    def test_rows_normalize(self, rng):
        probs = np.exp(log_softmax(rng.standard_normal((3, 5))))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)

    def test_needs_two_classes(self):
        with pytest.raises(ValidationError):
            log_softmax(np.zeros((2, 1)))

    def test_needs_matrix(self):
        with pytest.raises(DimensionError):
            log_softmax(np.zeros(3))
