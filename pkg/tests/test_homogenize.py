import numpy as np
import pytest

from homogenlab.homogenize import (
    FitConfig,
    SphereSampleSet,
    build_inverse_recovery_net,
    fit_one_hidden_layer,
    fit_regression,
    homogenize_one_layer,
    mcshane_extend,
    minimal_consistent_lipschitz,
    radial_extend_l2,
    sample_l1_sphere,
)
from homogenlab.network import (
    ActivationSpec,
    LayerSpec,
    NetworkSpec,
    ProbeConfig,
    check_positive_homogeneity,
    evaluate,
    unbiased_relu_net,
)


def biased_one_layer(rng, m, k, p=1):
    return NetworkSpec(
        (
            LayerSpec(rng.standard_normal((k, m)), rng.standard_normal(k)),
            LayerSpec(rng.standard_normal((p, k)), rng.standard_normal(p)),
        ),
        ActivationSpec.relu(),
        unbiased=False,
    )


class TestHomogenizeOneLayer:
    def test_constant_net_becomes_l1_norm(self):
        c = 2.5
        g = NetworkSpec(
            (LayerSpec(np.zeros((3, 2))), LayerSpec(np.zeros((1, 3)), np.array([c]))),
            ActivationSpec.relu(),
            unbiased=False,
        )
        f = homogenize_one_layer(g)
        assert evaluate(f, np.array([1.0, 0.0]))[0] == pytest.approx(c)
        assert evaluate(f, np.array([2.0, 0.0]))[0] == pytest.approx(2 * c)

    def test_matches_direct_formula(self, rng):
        g = biased_one_layer(rng, 3, 5)
        f = homogenize_one_layer(g)
        assert f.unbiased
        assert f.depth == 2
        assert f.hidden_widths == (6, 6)  # (2m, k + 1)
        for _ in range(1000):
            x = rng.standard_normal(3)
            l1 = np.abs(x).sum()
            want = l1 * evaluate(g, x / l1)
            got = evaluate(f, x)
            assert abs(got[0] - want[0]) <= 1e-9 * (1 + l1)

    def test_multi_output_structure_and_values(self, rng):
        g = biased_one_layer(rng, 4, 6, p=3)
        f = homogenize_one_layer(g)
        assert f.hidden_widths == (8, 3 * 7)
        for _ in range(200):
            x = rng.standard_normal(4)
            l1 = np.abs(x).sum()
            want = l1 * evaluate(g, x / l1)
            assert np.allclose(evaluate(f, x), want, atol=1e-9 * (1 + l1))

    def test_scaling_exact(self, rng):
        g = biased_one_layer(rng, 3, 5)
        f = homogenize_one_layer(g)
        for _ in range(100):
            x = rng.standard_normal(3)
            assert np.allclose(evaluate(f, 7.0 * x), 7.0 * evaluate(f, x), atol=1e-12)

    def test_zero_maps_to_zero_exactly(self, rng):
        f = homogenize_one_layer(biased_one_layer(rng, 3, 4))
        assert np.array_equal(evaluate(f, np.zeros(3)), np.zeros(1))

    def test_wrong_depth_rejected(self, rng):
        net = unbiased_relu_net(
            [rng.standard_normal((4, 3)), rng.standard_normal((4, 4)), rng.standard_normal((1, 4))]
        )
        with pytest.raises(ValueError):
            homogenize_one_layer(net)

    def test_non_relu_rejected(self, rng):
        g = NetworkSpec(
            (LayerSpec(rng.standard_normal((4, 3))), LayerSpec(rng.standard_normal((1, 4)))),
            ActivationSpec.named("tanh"),
            unbiased=True,
        )
        with pytest.raises(ValueError):
            homogenize_one_layer(g)

    def test_probe_confirms_invariance(self, rng):
        f = homogenize_one_layer(biased_one_layer(rng, 3, 5))
        report = check_positive_homogeneity(f, 3, ProbeConfig(seed=9))
        assert report.max_defect <= 1e-12


class TestRadialExtension:
    def test_constant_becomes_l2_norm(self):
        f = radial_extend_l2(lambda u: np.array([1.0]))
        assert f(np.array([3.0, 4.0]))[0] == pytest.approx(5.0)

    def test_linear_restriction_extends_linearly(self, rng):
        f = radial_extend_l2(lambda u: np.array([u[0]]))
        for _ in range(20):
            x = rng.standard_normal(3)
            assert f(x)[0] == pytest.approx(x[0])

    def test_zero_maps_to_zero(self):
        f = radial_extend_l2(lambda u: np.array([1.0, 2.0]))
        assert np.array_equal(f(np.zeros(3)), np.zeros(2))

    def test_exact_scale_invariance(self, rng):
        f = radial_extend_l2(lambda u: np.array([np.abs(u).max(), u[0] - u[1]]))
        for _ in range(100):
            x = rng.standard_normal(3)
            for lam in (0.5, 2.0, 30.0):
                lhs = f(lam * x)
                rhs = lam * f(x)
                assert np.linalg.norm(lhs - rhs) <= 1e-14 * (1 + np.linalg.norm(rhs))

    def test_doubled_lipschitz_bound_monte_carlo(self, rng):
        anchor = np.array([0.3, -0.5, 0.8])
        anchor /= np.linalg.norm(anchor)
        f = radial_extend_l2(lambda u: np.array([np.linalg.norm(u - anchor)]))  # 1-Lipschitz
        pts = rng.standard_normal((10_000, 2, 3))
        for x, y in pts:
            gap = np.linalg.norm(x - y)
            if gap == 0:
                continue
            assert abs(f(x)[0] - f(y)[0]) / gap <= 2 + 1e-6


class TestMcshaneExtension:
    def test_single_sample_formula(self):
        f = mcshane_extend(np.array([[0.0]]), np.array([5.0]), 2.0)
        assert f(np.array([1.0])) == pytest.approx(7.0)

    def test_two_scalar_samples(self):
        f = mcshane_extend(np.array([[0.0], [2.0]]), np.array([0.0, 2.0]), 1.0)
        assert f(np.array([1.0])) == pytest.approx(1.0)  # min(0 + 1, 2 + 1)

    def test_agrees_with_samples(self, rng):
        pts = rng.standard_normal((10, 3))
        lip = 3.0
        vals = np.array([0.5 * p[0] - 0.25 * p[2] for p in pts])
        f = mcshane_extend(pts, vals, lip)
        for p, v in zip(pts, vals):
            assert f(p) == pytest.approx(v, abs=1e-12)

    def test_inconsistent_samples_rejected_with_pair(self):
        with pytest.raises(ValueError, match="0 and 1"):
            mcshane_extend(np.array([[0.0], [1.0]]), np.array([0.0, 5.0]), 1.0)

    def test_vector_valued(self, rng):
        pts = rng.standard_normal((6, 2))
        vals = np.column_stack([pts[:, 0], -pts[:, 1]])
        f = mcshane_extend(pts, vals, 2.0)
        out = f(pts[0])
        assert out.shape == (2,)
        assert np.allclose(out, vals[0], atol=1e-12)

    def test_each_coordinate_lipschitz(self, rng):
        pts = rng.standard_normal((8, 3))
        vals = rng.standard_normal((8, 2))
        lip = minimal_consistent_lipschitz(pts, vals) * 1.01
        f = mcshane_extend(pts, vals, lip)
        queries = rng.standard_normal((10_000, 2, 3))
        for x, y in queries:
            gap = float(np.linalg.norm(x - y))
            if gap == 0:
                continue
            assert np.max(np.abs(f(x) - f(y))) <= lip * gap * (1 + 1e-9)


class TestFitter:
    def test_linear_target_fits_to_tolerance(self, rng):
        u = sample_l1_sphere(rng, 3, 64)
        data = SphereSampleSet(u, 2.0 * u[:, 0], "l1")
        cfg = FitConfig(width=4, learning_rate=0.5, steps=30_000, restarts=3, seed=11, target_mse=5e-7)
        net, mse = fit_one_hidden_layer(data, cfg)
        assert mse <= 1e-6
        assert net.depth == 1

    def test_absolute_value_fits_to_tolerance(self, rng):
        u = sample_l1_sphere(rng, 3, 64)
        data = SphereSampleSet(u, np.abs(u[:, 0]), "l1")
        cfg = FitConfig(width=2, learning_rate=0.3, steps=50_000, restarts=8, seed=11, target_mse=5e-7)
        net, mse = fit_one_hidden_layer(data, cfg)
        assert mse <= 1e-6

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            SphereSampleSet(np.zeros((0, 3)), np.zeros(0), "l1")
        with pytest.raises(ValueError):
            fit_regression(np.zeros((0, 3)), np.zeros((0, 1)), FitConfig(2, 0.1, 10, 1, 0))

    def test_deterministic_given_seed(self, rng):
        u = sample_l1_sphere(rng, 2, 16)
        data = SphereSampleSet(u, u[:, 0] ** 2, "l1")
        cfg = FitConfig(width=4, learning_rate=0.2, steps=200, restarts=2, seed=3)
        net1, mse1 = fit_one_hidden_layer(data, cfg)
        net2, mse2 = fit_one_hidden_layer(data, cfg)
        assert mse1 == mse2
        assert np.array_equal(net1.layers[0].weights, net2.layers[0].weights)

    def test_unbiased_mode_pins_biases(self, rng):
        u = sample_l1_sphere(rng, 2, 16)
        net, _ = fit_regression(u, u[:, :1], FitConfig(4, 0.2, 100, 1, 0), unbiased=True)
        assert net.unbiased
        assert all(layer.bias is None for layer in net.layers)

    def test_sphere_sample_set_validates_norms(self):
        with pytest.raises(ValueError, match="norm"):
            SphereSampleSet(np.array([[0.5, 0.2]]), np.array([1.0]), "l1")


class TestInverseRecovery:
    def test_identity_map_one_sparse(self):
        n = 3
        state = {"i": 0}

        def sampler(rng):
            i = state["i"]
            state["i"] += 1
            x = np.zeros(n)
            x[(i // 2) % n] = 1.0 if i % 2 == 0 else -1.0
            return x

        fit = FitConfig(width=32, learning_rate=0.4, steps=3000, restarts=2, seed=5, target_mse=1e-5)
        net = build_inverse_recovery_net(np.eye(n), sampler, fit, num_signals=30, densify_points=48)
        assert net.unbiased and net.depth == 2
        for j in range(n):
            for sign in (1.0, -1.0):
                x = np.zeros(n)
                x[j] = sign
                err = np.linalg.norm(evaluate(net, x) - x)
                assert err <= 0.05, (j, sign, err)
        report = check_positive_homogeneity(net, n, ProbeConfig(seed=2))
        assert report.max_defect <= 1e-12

    def test_kernel_signal_rejected(self):
        a = np.array([[1.0, 0.0, 0.0]])

        def sampler(rng):
            return np.array([0.0, 1.0, 0.0])  # in ker(A)

        fit = FitConfig(width=4, learning_rate=0.2, steps=10, restarts=1, seed=0)
        with pytest.raises(ValueError, match="kernel"):
            build_inverse_recovery_net(a, sampler, fit, num_signals=2)
