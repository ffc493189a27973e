import numpy as np
import pytest

from risfeel.aircomp import (
    Beamformer,
    DeviceProfile,
    analytic_mse,
    identity_beamformer,
    plan_transmissions,
    transmit_and_aggregate,
)
from risfeel.errors import DegenerateChannelError, DimensionError, UsageError
from risfeel.rng import substream


def profiles(weights, power=1.0):
    return [DeviceProfile(1, w, power) for w in weights]


def random_channels(K, M, rng):
    return (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) \
        / np.sqrt(2.0)


class TestPlanTransmissions:
    def test_identity_channel(self):
        h = np.array([[1.0 + 0j]])
        plan = plan_transmissions(h, (0,), profiles([1.0]), identity_beamformer())
        assert plan.eta == pytest.approx(1.0)
        assert plan.coefficients[0] == pytest.approx(1.0 + 0j)

    def test_two_device_closed_form(self):
        h = np.array([[1.0 + 0j], [0.5 + 0j]])
        plan = plan_transmissions(h, (0, 1), profiles([0.5, 0.5]),
                                  identity_beamformer())
        assert plan.eta == pytest.approx(1.0)
        np.testing.assert_allclose(plan.coefficients, [0.5, 1.0], atol=1e-12)
        # device 2 binds at full power
        assert abs(plan.coefficients[1]) ** 2 == pytest.approx(1.0)

    def test_binding_device_at_budget(self):
        rng = substream(11, "a")
        K = 20
        h = random_channels(K, 1, rng)
        prof = profiles(rng.random(K) + 0.1)
        plan = plan_transmissions(h, tuple(range(K)), prof,
                                  identity_beamformer())
        usage = np.abs(plan.coefficients) ** 2 / np.array(
            [p.power_budget for p in prof]
        )
        assert np.max(usage) == pytest.approx(1.0, rel=1e-9)
        assert np.all(usage <= 1.0 + 1e-9)

    def test_weight_scaling_invariance(self):
        rng = substream(12, "a")
        h = random_channels(5, 1, rng)
        w = rng.random(5) + 0.1
        p1 = plan_transmissions(h, tuple(range(5)), profiles(w),
                                identity_beamformer())
        p2 = plan_transmissions(h, tuple(range(5)), profiles(7.3 * w),
                                identity_beamformer())
        np.testing.assert_allclose(p1.coefficients, p2.coefficients, atol=1e-12)
        assert p1.eta == pytest.approx(p2.eta)

    def test_degenerate_channel_names_device(self):
        h = np.array([[1.0 + 0j], [0.0 + 0j]])
        with pytest.raises(DegenerateChannelError) as exc:
            plan_transmissions(h, (0, 1), profiles([0.5, 0.5]),
                               identity_beamformer())
        assert exc.value.device == 1

    def test_eta_non_increasing_in_set_inclusion(self):
        # straggler domination on random nested chains (raw-weight convention)
        rng = substream(13, "a")
        for _ in range(20):
            K = 10
            h = random_channels(K, 1, rng)
            prof = profiles(rng.random(K) + 0.1)
            order = rng.permutation(K)
            prev_eta = np.inf
            for n in range(1, K + 1):
                plan = plan_transmissions(h, tuple(order[:n]), prof,
                                          identity_beamformer(),
                                          normalize=False)
                assert plan.eta <= prev_eta + 1e-12
                prev_eta = plan.eta


class TestAnalyticMse:
    def test_zero_noise(self):
        h = np.array([[1.0 + 0j]])
        plan = plan_transmissions(h, (0,), profiles([1.0]), identity_beamformer())
        assert analytic_mse(plan, identity_beamformer(), 0.0) == 0.0

    def test_direct_substitution(self):
        # eta = 1, ||f|| = 1, noise_std = 1, real-part convention -> 0.5
        h = np.array([[1.0 + 0j]])
        plan = plan_transmissions(h, (0,), profiles([1.0]), identity_beamformer())
        assert plan.eta == pytest.approx(1.0)
        assert analytic_mse(plan, identity_beamformer(), 1.0) == pytest.approx(0.5)

    def test_matches_monte_carlo(self):
        rng = substream(14, "a")
        K, d, trials = 5, 200, 500
        h = random_channels(K, 1, rng)
        prof = profiles(rng.random(K) + 0.2)
        f = identity_beamformer()
        plan = plan_transmissions(h, tuple(range(K)), prof, f)
        noise_std = 0.7
        errors = []
        for _ in range(trials):
            x = rng.standard_normal((K, d))
            rep = transmit_and_aggregate(plan, h, f, x, noise_std, 0.0, rng)
            errors.append(rep.empirical_mse)
        errors = np.asarray(errors)
        expected = analytic_mse(plan, f, noise_std)
        se = errors.std() / np.sqrt(trials)
        assert abs(errors.mean() - expected) < 3 * se


class TestTransmitAndAggregate:
    def test_single_device_lossless(self):
        h = np.array([[1.0 + 0j]])
        f = identity_beamformer()
        plan = plan_transmissions(h, (0,), profiles([1.0]), f)
        v = substream(15, "a").standard_normal((1, 64))
        rep = transmit_and_aggregate(plan, h, f, v, 0.0, 0.0,
                                     substream(15, "n"))
        np.testing.assert_array_almost_equal(rep.estimate, v[0], decimal=12)

    def test_exact_weighted_sum(self):
        rng = substream(16, "a")
        h = random_channels(2, 1, rng)
        f = identity_beamformer()
        plan = plan_transmissions(h, (0, 1), profiles([0.3, 0.7]), f)
        u, v = rng.standard_normal((2, 128))
        rep = transmit_and_aggregate(plan, h, f, np.stack([u, v]), 0.0, 0.0, rng)
        expected = 0.3 * u + 0.7 * v
        np.testing.assert_allclose(rep.estimate, expected,
                                   rtol=1e-10, atol=1e-12)
        assert rep.empirical_mse < 1e-20

    def test_noiseless_exactness_large_dim(self):
        rng = substream(17, "a")
        K, d = 20, 10**5
        h = random_channels(K, 1, rng)
        prof = profiles(rng.random(K) + 0.1)
        f = identity_beamformer()
        plan = plan_transmissions(h, tuple(range(K)), prof, f)
        x = rng.standard_normal((K, d))
        rep = transmit_and_aggregate(plan, h, f, x, 0.0, 0.0, rng)
        target = plan.weights @ x
        rel = np.linalg.norm(rep.estimate - target) / np.linalg.norm(target)
        assert rel < 1e-10

    def test_multi_antenna_beamformer_path(self):
        rng = substream(18, "a")
        K, M = 4, 3
        h = random_channels(K, M, rng)
        f = Beamformer(np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0) + 0j)
        plan = plan_transmissions(h, tuple(range(K)), profiles([1.0] * K), f)
        x = rng.standard_normal((K, 32))
        rep = transmit_and_aggregate(plan, h, f, x, 0.0, 0.0, rng)
        np.testing.assert_allclose(rep.estimate, plan.weights @ x, atol=1e-10)

    def test_dimension_mismatch(self):
        h = np.array([[1.0 + 0j], [1.0 + 0j]])
        f = identity_beamformer()
        plan = plan_transmissions(h, (0, 1), profiles([0.5, 0.5]), f)
        with pytest.raises(DimensionError):
            transmit_and_aggregate(plan, h, f, np.zeros((1, 8)), 0.0, 0.0,
                                   substream(0, "n"))

    def test_mse_non_decreasing_along_nested_sets(self):
        rng = substream(19, "a")
        for _ in range(10):
            K = 8
            h = random_channels(K, 1, rng)
            prof = profiles(np.full(K, 1.0))
            f = identity_beamformer()
            order = rng.permutation(K)
            prev = 0.0
            for n in range(1, K + 1):
                plan = plan_transmissions(h, tuple(order[:n]), prof, f,
                                          normalize=False)
                mse = analytic_mse(plan, f, 0.5)
                assert mse >= prev - 1e-15
                prev = mse


class TestValidation:
    def test_beamformer_unit_norm(self):
        with pytest.raises(UsageError):
            Beamformer(np.array([1.0, 1.0], complex))

    def test_empty_selection(self):
        with pytest.raises(UsageError):
            plan_transmissions(np.ones((2, 1), complex), (), profiles([1, 1]),
                               identity_beamformer())

    def test_profile_validation(self):
        with pytest.raises(UsageError):
            DeviceProfile(1, -0.5, 1.0)
        with pytest.raises(UsageError):
            DeviceProfile(1, 0.5, 0.0)
