import numpy as np
import pytest

from ergo import tensor as T
from ergo.errors import NumericError, ShapeError

from gradcheck import assert_gradients_match, finite_difference, max_relative_error


def tensors(*arrays):
    return [T.Tensor(a) for a in arrays]


class TestForwardOps:
    def test_matmul_identity(self):
        a = T.Tensor([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        eye = T.Tensor(np.eye(2))
        out = T.matmul(eye, a)
        np.testing.assert_array_equal(out.values, a.values)

    def test_matmul_shape_error_names_both_shapes(self):
        a, b = tensors(np.zeros((2, 3)), np.zeros((2, 3)))
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            T.matmul(a, b)

    def test_add_shape_error(self):
        a, b = tensors(np.zeros((2, 3)), np.zeros((3, 2)))
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(3, 2\)"):
            T.add(a, b)

    def test_softmax_of_zeros_is_uniform(self):
        row = T.Tensor([[0.0, 0.0, 0.0]])
        out = T.masked_softmax(row, np.array([[True, True, True]]))
        np.testing.assert_allclose(out.values, [[1 / 3, 1 / 3, 1 / 3]], atol=1e-15)

    def test_masked_softmax_direct_evaluation(self):
        # softmax over the unmasked pair (1, 3): [1/(1+e^2), e^2/(1+e^2)]
        row = T.Tensor([[1.0, 2.0, 3.0]])
        out = T.masked_softmax(row, np.array([[True, False, True]]))
        expected = [[0.11920292202211756, 0.0, 0.8807970779778823]]
        np.testing.assert_allclose(out.values, expected, atol=1e-12)
        assert out.values[0, 1] == 0.0

    def test_masked_softmax_rows_sum_to_one(self, rng):
        x = T.Tensor(rng.uniform(-3, 3, size=(6, 5)))
        mask = rng.random((6, 5)) < 0.6
        mask[:, 0] = True
        out = T.masked_softmax(x, mask)
        np.testing.assert_allclose(out.values.sum(axis=1), np.ones(6), atol=1e-6)
        assert (out.values[~mask] == 0.0).all()

    def test_masked_softmax_all_masked_row_identified(self):
        x = T.Tensor(np.zeros((3, 2)))
        mask = np.array([[True, True], [False, False], [True, False]])
        with pytest.raises(ShapeError, match="row 1"):
            T.masked_softmax(x, mask)

    def test_masked_softmax_large_masked_entries_ignored(self):
        # a huge masked logit must not overflow or leak into the result
        x = T.Tensor([[0.0, 1e6, 1.0]])
        out = T.masked_softmax(x, np.array([[True, False, True]]))
        assert np.isfinite(out.values).all()
        np.testing.assert_allclose(out.values.sum(), 1.0, atol=1e-12)

    def test_hstack_concatenates_and_checks_rows(self):
        a, b = tensors([[1.0, 2.0]], [[3.0]])
        np.testing.assert_array_equal(T.hstack([a, b]).values, [[1.0, 2.0, 3.0]])
        with pytest.raises(ShapeError):
            T.hstack(tensors(np.zeros((1, 2)), np.zeros((2, 2))))

    def test_gather_rows_bounds(self):
        a = T.Tensor(np.arange(6.0).reshape(3, 2))
        np.testing.assert_array_equal(T.gather_rows(a, [2, 0, 2]).values, [[4, 5], [0, 1], [4, 5]])
        with pytest.raises(ShapeError):
            T.gather_rows(a, [3])

    def test_dropout_rate_zero_and_eval_are_identity(self, rng):
        a = T.Tensor(rng.normal(size=(4, 4)))
        assert T.dropout(a, 0.0, train=True, rng=rng) is a
        assert T.dropout(a, 0.9, train=False) is a

    def test_dropout_inverted_scaling(self):
        rng = np.random.default_rng(7)
        a = T.Tensor(np.ones((2000, 1)))
        out = T.dropout(a, 0.25, train=True, rng=rng)
        kept = out.values[out.values != 0]
        np.testing.assert_allclose(kept, 1.0 / 0.75)
        assert abs(out.values.mean() - 1.0) < 0.05

    def test_dropout_requires_rng_in_train(self):
        a = T.Tensor(np.ones((2, 2)))
        with pytest.raises(NumericError):
            T.dropout(a, 0.5, train=True)


class TestBackward:
    def test_square_sum_gradient(self):
        x = T.Tensor([[1.0, 2.0, 3.0]])
        root = T.sum_all(T.multiply(x, x))
        T.backward(root)
        np.testing.assert_allclose(x.grad, [[2.0, 4.0, 6.0]])

    def test_two_way_log_softmax_gradient(self):
        # d/dz log softmax(z)_0 at z = [0, 0] is [1 - 1/2, -1/2]
        z = T.Tensor([[0.0, 0.0]])
        picked = T.matmul(T.log(T.softmax_rows(z)), T.Tensor([[1.0], [0.0]]))
        T.backward(picked)
        np.testing.assert_allclose(z.grad, [[0.5, -0.5]], atol=1e-12)

    def test_non_scalar_root_rejected(self):
        with pytest.raises(ShapeError):
            T.backward(T.Tensor(np.zeros((2, 2))))

    def test_repeated_backward_accumulates(self):
        x = T.Tensor([[3.0]])
        root = T.multiply(x, x)
        T.backward(root)
        T.backward(root)
        np.testing.assert_allclose(x.grad, [[12.0]])

    def test_masked_positions_get_zero_gradient(self, rng):
        mask = np.array([[True, False, True]])
        x = T.Tensor(rng.normal(size=(1, 3)))
        root = T.sum_all(T.multiply(T.masked_softmax(x, mask), T.Tensor(rng.normal(size=(1, 3)))))
        T.backward(root)
        assert x.grad[0, 1] == 0.0

    def test_random_composite_matches_finite_differences(self, rng):
        """Composite of the whole op family vs the central-difference oracle."""
        d = 8
        shapes = [(3, d), (d, d), (3, d), (1, d)]
        arrays = [rng.uniform(-1, 1, size=s) for s in shapes]
        mask = rng.random((3, 3)) < 0.5
        np.fill_diagonal(mask, True)

        def run(bufs):
            x, w, y, r = (T.Tensor(b) for b in bufs)
            h = T.matmul(x, w)
            h = T.add(h, T.scale(y, 0.5))
            h = T.multiply(h, h)
            att = T.masked_softmax(T.matmul(h, T.transpose(h)), mask)
            mixed = T.matmul(att, T.gather_rows(h, [0, 1, 2]))
            wide = T.hstack([mixed, T.gather_rows(r, [0, 0, 0])])
            positive = T.clamp_min(T.power(T.relu(wide), 2.0), 1e-6)
            return x, w, y, r, T.mean_all(T.log(positive))

        def value(bufs):
            return run(bufs)[-1].item()

        x, w, y, r, root = run(arrays)
        T.backward(root)
        assert_gradients_match(value, arrays, [x.grad, w.grad, y.grad, r.grad])

    def test_every_op_has_matching_gradient(self, rng):
        """Per-op finite-difference checks, including seeded dropout."""
        a0 = rng.uniform(0.1, 1.0, size=(3, 4))
        b0 = rng.uniform(-1.0, -0.1, size=(3, 4))
        m0 = rng.uniform(-1, 1, size=(4, 2))
        mask = np.array([[True] * 4, [True, False, True, False], [False, True, True, True]])

        cases = {
            "add": lambda a, b, m: T.add(a, b),
            "multiply": lambda a, b, m: T.multiply(a, b),
            "matmul": lambda a, b, m: T.matmul(a, m),
            "transpose": lambda a, b, m: T.transpose(a),
            "scale": lambda a, b, m: T.scale(a, -1.7),
            "log": lambda a, b, m: T.log(a),
            "power": lambda a, b, m: T.power(a, 3.0),
            "relu": lambda a, b, m: T.relu(b),
            "hstack": lambda a, b, m: T.hstack([a, b]),
            "gather": lambda a, b, m: T.gather_rows(a, [1, 1, 0, 2]),
            "mean": lambda a, b, m: T.mean_all(a),
            "softmax": lambda a, b, m: T.masked_softmax(a, mask),
            "dropout": lambda a, b, m: T.dropout(a, 0.4, True, np.random.default_rng(11)),
        }
        weights = rng.normal(size=(8, 40))

        for name, op in cases.items():

            def value(bufs):
                a, b, m = (T.Tensor(x) for x in bufs)
                out = op(a, b, m)
                w = T.Tensor(weights[: out.rows, : out.cols])
                return T.sum_all(T.multiply(out, w)).item()

            arrays = [a0.copy(), b0.copy(), m0.copy()]
            a, b, m = (T.Tensor(x) for x in arrays)
            out = op(a, b, m)
            w = T.Tensor(weights[: out.rows, : out.cols])
            T.backward(T.sum_all(T.multiply(out, w)))
            numeric = finite_difference(value, arrays)
            err = max_relative_error([a.grad, b.grad, m.grad], numeric)
            assert err <= 1e-4, f"{name}: max relative error {err:.2e}"


class TestClipGlobalNorm:
    def test_below_threshold_unchanged(self):
        g = [np.array([[0.3, 0.4]])]
        assert T.clip_global_norm(g, 1.0) == 1.0
        np.testing.assert_array_equal(g[0], [[0.3, 0.4]])

    def test_three_four_five_clipped(self):
        g = [np.array([[3.0, 4.0]])]
        scale = T.clip_global_norm(g, 1.0)
        assert scale == pytest.approx(0.2)
        np.testing.assert_allclose(g[0], [[0.6, 0.8]])

    def test_post_norm_and_idempotence(self, rng):
        for max_norm in (0.5, 1.0, 7.3):
            grads = [rng.normal(size=(3, 4)), rng.normal(size=(5, 2))]
            pre = np.sqrt(sum(float((g**2).sum()) for g in grads))
            T.clip_global_norm(grads, max_norm)
            post = np.sqrt(sum(float((g**2).sum()) for g in grads))
            assert post == pytest.approx(min(pre, max_norm), abs=1e-9)
            once = [g.copy() for g in grads]
            T.clip_global_norm(grads, max_norm)
            for g1, g2 in zip(once, grads):
                np.testing.assert_allclose(g1, g2, atol=1e-12)

    def test_empty_set_scale_one(self):
        assert T.clip_global_norm([], 2.0) == 1.0


class TestProfiles:
    def test_profile_selects_dtype(self):
        T.set_profile("f32")
        assert T.Tensor([[1.0]]).values.dtype == np.float32
        T.set_profile("f64")
        assert T.Tensor([[1.0]]).values.dtype == np.float64

    def test_unknown_profile_rejected(self):
        with pytest.raises(NumericError):
            T.set_profile("f16")
