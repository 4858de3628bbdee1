import math

import numpy as np
import pytest

from partforge import field


def make_params(rng, grid=(3, 3, 3), value_range=(-10.0, 10.0), offset=0.0,
                scale=0.3):
    kernel = field.build_kernel(grid, value_range)
    size = kernel.shape[1]
    return field.DensityFieldParams(
        kernel=kernel,
        b1=rng.normal(0, scale, size),
        b2=rng.normal(0, scale, size),
        weights=rng.normal(0, scale, size),
        offset=offset,
    )


class TestBuildKernel:
    def test_shape_is_product_of_grid_sizes(self):
        k = field.build_kernel((4, 4, 4), (-25, 25))
        assert k.shape == (3, 64)

    def test_degenerate_grid_gives_single_zero_column(self):
        k = field.build_kernel((1, 1, 1), (0.0, 0.0))
        assert k.shape == (3, 1)
        assert np.all(k == 0.0)
        # cos(X @ 0 + b1) is constant in X
        params = field.DensityFieldParams(k, np.array([0.7]), np.array([0.1]),
                                          np.array([2.0]), 0.0)
        coords = np.random.default_rng(0).normal(size=(5, 3))
        out = field.forward(params, coords)
        assert np.allclose(out, out[0])

    def test_two_point_grid_enumerates_sign_combinations(self):
        k = field.build_kernel((2, 2, 2), (-1.0, 1.0))
        cols = {tuple(c) for c in k.T}
        expected = {(sx, sy, sz) for sx in (-1.0, 1.0) for sy in (-1.0, 1.0)
                    for sz in (-1.0, 1.0)}
        assert cols == expected

    def test_zero_grid_size_rejected(self):
        with pytest.raises(ValueError):
            field.build_kernel((0, 4, 4), (-1, 1))


class TestForward:
    def test_zero_weights_give_sigmoid_of_offset(self):
        k = field.build_kernel((2, 2, 2), (-5, 5))
        o1 = math.log(0.3 / 0.7)
        params = field.DensityFieldParams(k, np.zeros(8), np.zeros(8),
                                          np.zeros(8), o1)
        out = field.forward(params, np.random.default_rng(1).normal(size=(10, 3)))
        assert np.allclose(out, 0.3)

    def test_zero_offset_zero_weights_give_half(self):
        k = field.build_kernel((2, 2, 2), (-5, 5))
        params = field.DensityFieldParams(k, np.zeros(8), np.zeros(8),
                                          np.zeros(8), 0.0)
        out = field.forward(params, np.zeros((3, 3)))
        assert np.allclose(out, 0.5)

    def test_single_coordinate_matches_scalar_reevaluation(self):
        rng = np.random.default_rng(42)
        params = make_params(rng)
        x = rng.normal(size=(1, 3))
        out = field.forward(params, x)[0]
        # step-by-step scalar oracle
        acc = params.offset
        for k in range(params.kernel_size):
            phase = sum(x[0, j] * params.kernel[j, k] for j in range(3)) + params.b1[k]
            acc += (math.cos(phase) + params.b2[k]) * params.weights[k]
        expected = 1.0 / (1.0 + math.exp(-acc))
        assert out == pytest.approx(expected, rel=1e-12)

    def test_outputs_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(7)
        params = make_params(rng, scale=3.0)
        out = field.forward(params, rng.uniform(-0.5, 0.5, size=(200, 3)))
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_permutation_equivariant_over_batch(self):
        rng = np.random.default_rng(3)
        params = make_params(rng)
        coords = rng.uniform(-0.5, 0.5, size=(20, 3))
        perm = rng.permutation(20)
        assert np.allclose(field.forward(params, coords)[perm],
                           field.forward(params, coords[perm]))

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(5)
        params = make_params(rng)
        with pytest.raises(ValueError):
            field.forward(params, np.zeros((4, 2)))


class TestSpatialGradient:
    def test_zero_weights_give_zero_gradient(self):
        k = field.build_kernel((2, 2, 2), (-5, 5))
        params = field.DensityFieldParams(k, np.zeros(8), np.zeros(8),
                                          np.zeros(8), 0.3)
        g = field.spatial_gradient(params, np.random.default_rng(0).normal(size=(6, 3)))
        assert np.allclose(g, 0.0)

    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(11)
        params = make_params(rng)
        coords = rng.uniform(-0.5, 0.5, size=(100, 3))
        g = field.spatial_gradient(params, coords)
        h = 1e-4
        for j in range(3):
            dp = coords.copy(); dp[:, j] += h
            dm = coords.copy(); dm[:, j] -= h
            fd = (field.forward(params, dp) - field.forward(params, dm)) / (2 * h)
            denom = np.maximum(np.abs(fd), 1e-8)
            assert np.max(np.abs(g[:, j] - fd) / denom) < 1e-4

    def test_x_only_kernel_has_no_yz_gradient(self):
        kernel = np.zeros((3, 4))
        kernel[0] = [1.0, 2.0, -3.0, 5.0]
        rng = np.random.default_rng(2)
        params = field.DensityFieldParams(kernel, rng.normal(size=4),
                                          rng.normal(size=4),
                                          rng.normal(size=4), 0.0)
        g = field.spatial_gradient(params, rng.normal(size=(10, 3)))
        assert np.allclose(g[:, 1:], 0.0)
        assert np.any(np.abs(g[:, 0]) > 1e-6)


def fd_param_gradient(params, coords, loss_fn, h=1e-6):
    """Central finite differences of loss_fn over the trainable vector."""
    theta = params.trainable_vector()
    grad = np.zeros_like(theta)
    for i in range(len(theta)):
        tp = theta.copy(); tp[i] += h
        tm = theta.copy(); tm[i] -= h
        grad[i] = (loss_fn(params.with_trainable_vector(tp), coords)
                   - loss_fn(params.with_trainable_vector(tm), coords)) / (2 * h)
    return grad


class TestParameterGradient:
    def test_zero_upstream_gives_zero_gradients(self):
        rng = np.random.default_rng(21)
        params = make_params(rng)
        coords = rng.uniform(-0.5, 0.5, size=(8, 3))
        grads = field.parameter_gradient(params, coords, np.zeros(8))
        assert np.allclose(grads.as_vector(), 0.0)

    def test_matches_finite_differences_density_path(self):
        rng = np.random.default_rng(22)
        params = make_params(rng, grid=(2, 2, 2))
        coords = rng.uniform(-0.5, 0.5, size=(6, 3))
        weights = rng.normal(size=6)

        def loss(p, x):
            return float(weights @ field.forward(p, x))

        _, cache = field.forward(params, coords, cache=True)
        analytic = field.parameter_gradient(params, coords, weights,
                                            cache=cache).as_vector()
        fd = fd_param_gradient(params, coords, loss)
        denom = np.maximum(np.abs(fd), 1e-7)
        assert np.max(np.abs(analytic - fd) / denom) < 1e-4

    def test_matches_finite_differences_spatial_path(self):
        rng = np.random.default_rng(23)
        params = make_params(rng, grid=(2, 2, 2))
        coords = rng.uniform(-0.5, 0.5, size=(5, 3))
        wmat = rng.normal(size=(5, 3))

        def loss(p, x):
            return float((wmat * field.spatial_gradient(p, x)).sum())

        _, cache = field.forward(params, coords, cache=True)
        analytic = field.parameter_gradient(params, coords, np.zeros(5),
                                            d_spatial=wmat, cache=cache).as_vector()
        fd = fd_param_gradient(params, coords, loss)
        denom = np.maximum(np.abs(fd), 1e-7)
        assert np.max(np.abs(analytic - fd) / denom) < 1e-4

    def test_duplicated_row_doubles_its_contribution(self):
        rng = np.random.default_rng(24)
        params = make_params(rng)
        row = rng.uniform(-0.5, 0.5, size=(1, 3))
        single = field.parameter_gradient(params, row, np.ones(1)).as_vector()
        double = field.parameter_gradient(params, np.vstack([row, row]),
                                          np.ones(2)).as_vector()
        assert np.allclose(double, 2 * single)


class TestAdam:
    def test_zero_gradient_leaves_params_unchanged(self):
        rng = np.random.default_rng(31)
        params = make_params(rng)
        state = field.AdamState.for_params(params)
        zeros = field.FieldGradients(np.zeros(params.kernel_size),
                                     np.zeros(params.kernel_size),
                                     np.zeros(params.kernel_size))
        updated = field.adam_step(state, params, zeros)
        assert np.allclose(updated.trainable_vector(), params.trainable_vector())

    def test_first_step_moves_by_learning_rate_times_sign(self):
        rng = np.random.default_rng(32)
        params = make_params(rng)
        state = field.AdamState.for_params(params, learning_rate=2.0e-3)
        g = rng.normal(size=3 * params.kernel_size)
        s = params.kernel_size
        grads = field.FieldGradients(g[:s], g[s:2 * s], g[2 * s:])
        updated = field.adam_step(state, params, grads)
        delta = updated.trainable_vector() - params.trainable_vector()
        # bias-corrected first step: -lr * g / (|g| + eps) ~ -lr * sign(g)
        assert np.allclose(delta, -2.0e-3 * np.sign(g), atol=1e-8)

    def test_deterministic_given_same_state(self):
        rng = np.random.default_rng(33)
        params = make_params(rng)
        g = rng.normal(size=3 * params.kernel_size)
        s = params.kernel_size
        grads = field.FieldGradients(g[:s], g[s:2 * s], g[2 * s:])
        out = []
        for _ in range(2):
            state = field.AdamState.for_params(params)
            out.append(field.adam_step(state, params, grads).trainable_vector())
        assert np.array_equal(out[0], out[1])


class TestGridCoordinates:
    def test_longest_dimension_spans_half_interval(self):
        coords = field.grid_coordinates((8, 4, 2), (0.2, 0.1, 0.05))
        assert coords.shape == (64, 3)
        # voxel centers of the longest axis live strictly inside [-0.5, 0.5]
        assert coords[:, 0].min() == pytest.approx(-0.5 + 0.5 / 8)
        assert coords[:, 0].max() == pytest.approx(0.5 - 0.5 / 8)
        assert coords[:, 1].max() == pytest.approx((0.1 / 0.2) * (0.5 - 0.5 / 4))

    def test_x_fastest_ordering(self):
        coords = field.grid_coordinates((2, 2, 2), (1.0, 1.0, 1.0))
        # first two rows differ only in x
        assert coords[0, 0] != coords[1, 0]
        assert coords[0, 1] == coords[1, 1]
        assert coords[0, 2] == coords[1, 2]
