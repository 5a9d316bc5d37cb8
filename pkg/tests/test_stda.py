import numpy as np
import pytest

from imuforge.stda import (
    SignalWindow,
    WarpCurve,
    fit_length,
    jitter,
    magnitude_scale,
    magnitude_warp,
    make_magnitude_curve,
    make_time_warp,
    rotate,
    time_scale,
    time_warp,
)


def make_window(data, rate=100.0, label=7):
    return SignalWindow(data=np.asarray(data, dtype=float), sample_rate_hz=rate, label=label)


def random_window(gen, T=50, C=6):
    return make_window(gen.normal(size=(T, C)))


class TestMagnitudeCurve:
    def test_sigma_zero_is_constant_one(self):
        curve = make_magnitude_curve(100, 0.0, 4, seed=1)
        np.testing.assert_allclose(curve.values, 1.0, atol=1e-12)

    def test_passes_through_knots(self):
        T, K = 101, 5
        curve = make_magnitude_curve(T, 0.3, K, seed=9)
        # with T-1 divisible by K-1 the knot positions land on the grid
        positions = np.linspace(0, T - 1, K).astype(int)
        from imuforge import rng

        knot_values = rng.stream(9, "magnitude-curve").normal(1.0, 0.3, K)
        np.testing.assert_allclose(curve.values[positions], knot_values, atol=1e-9)

    def test_mean_over_many_seeds_is_one(self):
        # Monte-Carlo check: E[curve] = 1
        means = [
            make_magnitude_curve(100, 0.2, 4, seed=s).values.mean() for s in range(10_000)
        ]
        assert abs(np.mean(means) - 1.0) < 0.02

    def test_too_few_knots_rejected(self):
        with pytest.raises(ValueError):
            make_magnitude_curve(100, 0.1, 1, seed=0)


class TestTimeWarpCurve:
    def test_ratio_near_one_gives_identity(self):
        curve = make_time_warp(100, 4, 1.0 + 1e-9, seed=3)
        np.testing.assert_allclose(curve.values, np.arange(100.0), atol=1e-6)

    def test_monotone_for_1000_seeds(self):
        for seed in range(1000):
            curve = make_time_warp(60, 4, 2.0, seed=seed)
            assert np.all(np.diff(curve.values) > 0)
            assert curve.values[0] == 0.0
            assert curve.values[-1] == 59.0

    def test_grid_configurations_accepted(self):
        for knots in (2, 4):
            for ratio in (1.5, 2.0):
                curve = make_time_warp(100, knots, ratio, seed=1)
                assert len(curve) == 100

    def test_ratio_at_or_below_one_rejected(self):
        with pytest.raises(ValueError):
            make_time_warp(100, 2, 1.0, seed=0)


class TestMagnitudeScale:
    def test_sigma_zero_identity(self, gen):
        x = random_window(gen)
        out = magnitude_scale(x, 0.0, seed=5)
        np.testing.assert_array_equal(out.data, x.data)
        assert out.label == x.label

    def test_forced_alpha(self):
        x = make_window([[2.0, 4.0, 0.0], [6.0, 8.0, 0.0]])
        out = magnitude_scale(x, 0.5, seed=0, alpha=0.5)
        np.testing.assert_array_equal(out.data, [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0]])

    def test_grid_sigmas_accepted(self, gen):
        x = random_window(gen)
        for sigma in (0.1, 0.2, 0.4, 0.6):
            out = magnitude_scale(x, sigma, seed=2)
            assert out.data.shape == x.data.shape

    def test_deterministic(self, gen):
        x = random_window(gen)
        a = magnitude_scale(x, 0.3, seed=4)
        b = magnitude_scale(x, 0.3, seed=4)
        np.testing.assert_array_equal(a.data, b.data)


class TestMagnitudeWarp:
    def test_sigma_zero_identity(self, gen):
        x = random_window(gen)
        out = magnitude_warp(x, 0.0, 4, seed=1)
        np.testing.assert_allclose(out.data, x.data, atol=1e-12)

    def test_constant_curve_doubles(self, gen):
        x = random_window(gen)
        curve = WarpCurve(np.full(x.num_samples, 2.0), mode="magnitude")
        out = magnitude_warp(x, 0.4, 4, seed=1, curve=curve)
        np.testing.assert_array_equal(out.data, 2.0 * x.data)

    def test_grid_accepted(self, gen):
        x = random_window(gen)
        for sigma in (0.2, 0.4):
            for knots in (2, 4):
                assert magnitude_warp(x, sigma, knots, seed=3).data.shape == x.data.shape


class TestTimeScale:
    def test_beta_one_identity(self, gen):
        x = random_window(gen)
        out = time_scale(x, 1.0)
        np.testing.assert_array_equal(out.data, x.data)

    def test_stated_interpolation_rule(self):
        x = make_window(np.array([[0.0], [1.0], [2.0], [3.0], [4.0]]) * np.ones((1, 3)))
        out = time_scale(x, 2.0)
        assert out.num_samples == 3  # round(5/2) rounds half away from zero
        np.testing.assert_array_equal(out.data[:, 0], [0.0, 2.0, 4.0])

    def test_expansion_length(self, gen):
        x = random_window(gen, T=40)
        assert time_scale(x, 0.5).num_samples == 80

    def test_stock_ranges_yield_valid_lengths(self, gen):
        x = random_window(gen, T=30)
        for low, high in ((0.7, 0.9), (1.1, 1.3), (0.75, 1.5), (0.5, 2.0)):
            for beta in (low, high):
                out = time_scale(x, beta)
                assert out.num_samples == int(np.floor(30 / beta + 0.5))

    def test_nonpositive_beta_rejected(self, gen):
        with pytest.raises(ValueError):
            time_scale(random_window(gen), 0.0)


class TestTimeWarp:
    def test_identity_curve_is_identity(self, gen):
        x = random_window(gen, T=64)
        curve = WarpCurve(np.arange(64.0), mode="time")
        out = time_warp(x, 2, 1.5, seed=1, curve=curve)
        np.testing.assert_array_equal(out.data, x.data)

    def test_endpoints_preserved_exactly(self, gen):
        x = random_window(gen, T=100)
        out = time_warp(x, 2, 1.5, seed=8)
        np.testing.assert_array_equal(out.data[0], x.data[0])
        np.testing.assert_array_equal(out.data[-1], x.data[-1])

    def test_warp_then_inverse_recovers_ramp(self):
        # inverse-warp oracle on the monotone ramp X[t] = t
        T = 100
        ramp = make_window(np.tile(np.arange(float(T))[:, None], (1, 3)))
        curve = make_time_warp(T, 2, 1.5, seed=21)
        warped = time_warp(ramp, 2, 1.5, seed=0, curve=curve)
        inverse = WarpCurve(
            np.interp(np.arange(float(T)), curve.values, np.arange(float(T))), mode="time"
        )
        recovered = time_warp(warped, 2, 1.5, seed=0, curve=inverse)
        assert np.abs(recovered.data - ramp.data).max() <= 0.1


class TestRotate:
    def test_forced_zero_angles_identity(self, gen):
        x = random_window(gen)
        out = rotate(x, seed=1, angles=(0.0, 0.0, 0.0))
        np.testing.assert_allclose(out.data, x.data, atol=1e-15)

    def test_forced_quarter_turn_about_z(self):
        x = make_window([[1.0, 0.0, 0.0]] * 3)
        out = rotate(x, seed=0, angles=(np.pi / 2, 0.0, 0.0))
        np.testing.assert_allclose(out.data, [[0.0, 1.0, 0.0]] * 3, atol=1e-12)

    def test_norms_preserved(self, gen):
        for seed in range(50):
            x = random_window(gen, T=20, C=9)
            out = rotate(x, seed=seed)
            got = np.linalg.norm(out.data.reshape(20, 3, 3), axis=2)
            want = np.linalg.norm(x.data.reshape(20, 3, 3), axis=2)
            np.testing.assert_allclose(got, want, atol=1e-9)

    def test_rotation_is_proper(self):
        # recover R by rotating the basis; det must be +1
        basis = make_window(np.eye(3))
        for seed in range(50):
            out = rotate(basis, seed=seed)
            r = out.data.T  # columns are R @ e_i
            assert abs(np.linalg.det(r) - 1.0) < 1e-9
            np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-9)

    def test_non_triaxial_window_rejected(self):
        with pytest.raises(ValueError):
            make_window(np.zeros((4, 4)))


class TestJitter:
    def test_sigma_zero_identity(self, gen):
        x = random_window(gen)
        out = jitter(x, 0.0, seed=9)
        np.testing.assert_array_equal(out.data, x.data)

    def test_empirical_std_matches_sigma(self, gen):
        x = make_window(np.zeros((20_000, 6)))  # 1.2e5 elements
        for sigma in (0.05, 0.1, 0.15, 0.2):
            out = jitter(x, sigma, seed=13)
            measured = np.std(out.data - x.data)
            assert abs(measured - sigma) / sigma < 0.02

    def test_label_preserved(self, gen):
        x = random_window(gen)
        assert jitter(x, 0.1, seed=2).label == x.label


class TestFitLength:
    def test_truncates(self, gen):
        x = random_window(gen, T=50)
        out = fit_length(x, 30)
        np.testing.assert_array_equal(out.data, x.data[:30])

    def test_pads_by_edge_hold(self, gen):
        x = random_window(gen, T=10)
        out = fit_length(x, 14)
        np.testing.assert_array_equal(out.data[:10], x.data)
        for t in range(10, 14):
            np.testing.assert_array_equal(out.data[t], x.data[-1])

    def test_noop(self, gen):
        x = random_window(gen, T=10)
        assert fit_length(x, 10) is x
