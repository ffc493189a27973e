import numpy as np
import pytest

from risfeel.aircomp import DeviceProfile, identity_beamformer, \
    plan_transmissions
from risfeel.errors import UsageError
from risfeel.privacy import (
    PrivacySpec,
    apply_mechanism,
    clip_update,
    privacy_proxy,
)
from risfeel.rng import substream


def unit_plan(h=None, K=1):
    if h is None:
        h = np.ones((K, 1), complex)
    prof = [DeviceProfile(1, 1.0, 1.0) for _ in range(len(h))]
    f = identity_beamformer()
    return plan_transmissions(h, tuple(range(len(h))), prof, f), h, f


class TestClipUpdate:
    def test_short_vector_unchanged(self):
        v = np.array([0.3, 0.4])  # norm 0.5
        np.testing.assert_array_equal(clip_update(v, 1.0), v)

    def test_long_vector_scaled_to_bound(self):
        v = np.array([3.0, 4.0])  # norm 5
        clipped = clip_update(v, 1.0)
        np.testing.assert_allclose(clipped, [0.6, 0.8], atol=1e-15)
        assert np.linalg.norm(clipped) == pytest.approx(1.0)

    def test_direction_preserved(self):
        rng = substream(0, "clip")
        v = rng.standard_normal(50) * 10
        clipped = clip_update(v, 2.0)
        cos = np.dot(v, clipped) / (np.linalg.norm(v) * np.linalg.norm(clipped))
        assert cos == pytest.approx(1.0, abs=1e-12)

    def test_invalid_bound(self):
        with pytest.raises(UsageError):
            clip_update(np.ones(3), 0.0)


class TestApplyMechanism:
    def test_zero_noise_returns_clipped(self):
        spec = PrivacySpec(0.0, 1.0, 0.05)
        v = np.array([3.0, 4.0])
        out = apply_mechanism(v, spec, substream(1, "m"))
        np.testing.assert_allclose(out, [0.6, 0.8], atol=1e-15)

    def test_mean_converges_to_clipped(self):
        # law of large numbers over 2000 draws
        spec = PrivacySpec(0.5, 10.0, 0.05)
        v = substream(2, "m").standard_normal(8)
        rng = substream(2, "n")
        draws = np.array([apply_mechanism(v, spec, rng) for _ in range(2000)])
        se = 0.5 / np.sqrt(2000)
        assert np.all(np.abs(draws.mean(axis=0) - v) < 4 * se)

    def test_per_device_std_array(self):
        spec = PrivacySpec(np.array([0.0, 1.0]), 10.0, 0.05)
        v = np.ones(4)
        out0 = apply_mechanism(v, spec, substream(3, "m"), device=0)
        np.testing.assert_array_equal(out0, v)
        out1 = apply_mechanism(v, spec, substream(3, "m"), device=1)
        assert not np.array_equal(out1, v)

    def test_determinism(self):
        spec = PrivacySpec(0.3, 1.0, 0.05)
        v = np.ones(6)
        a = apply_mechanism(v, spec, substream(4, "m"))
        b = apply_mechanism(v, spec, substream(4, "m"))
        np.testing.assert_array_equal(a, b)


class TestPrivacyProxy:
    def test_direct_substitution(self):
        # |h b| = 1, clip = 1, delta = 0.05, sigma = 1
        #   -> eps = sqrt(2 ln 25)
        plan, h, _ = unit_plan()
        spec = PrivacySpec(0.0, 1.0, 0.05)
        rep = privacy_proxy(h, plan, spec, 1.0)
        assert rep.system_epsilon == pytest.approx(np.sqrt(2 * np.log(25.0)),
                                                   rel=1e-12)
        assert rep.epsilon_per_pair.shape == (1, 1)

    def test_more_artificial_noise_less_leakage(self):
        plan, h, _ = unit_plan(K=3)
        stds = [0.0, 0.1, 0.5, 2.0]
        eps = [
            privacy_proxy(h, plan, PrivacySpec(s, 1.0, 0.05), 0.3)
            .system_epsilon
            for s in stds
        ]
        assert all(a > b for a, b in zip(eps, eps[1:]))

    def test_epsilon_scales_with_clip_norm(self):
        plan, h, _ = unit_plan(K=2)
        spec1 = PrivacySpec(0.2, 1.0, 0.05)
        spec2 = PrivacySpec(0.2, 3.0, 0.05)
        e1 = privacy_proxy(h, plan, spec1, 0.5).system_epsilon
        e2 = privacy_proxy(h, plan, spec2, 0.5).system_epsilon
        assert e2 == pytest.approx(3.0 * e1, rel=1e-12)

    def test_receiver_noise_reduces_leakage(self):
        plan, h, _ = unit_plan(K=2)
        spec = PrivacySpec(0.1, 1.0, 0.05)
        e_low = privacy_proxy(h, plan, spec, 0.1).system_epsilon
        e_high = privacy_proxy(h, plan, spec, 1.0).system_epsilon
        assert e_high < e_low

    def test_noiseless_channel_infinite_epsilon(self):
        plan, h, _ = unit_plan()
        spec = PrivacySpec(0.0, 1.0, 0.05)
        rep = privacy_proxy(h, plan, spec, 0.0)
        assert np.isinf(rep.system_epsilon)

    def test_system_value_is_worst_pair(self):
        rng = substream(5, "p")
        h = (rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)))
        prof = [DeviceProfile(1, 1.0, 1.0)] * 4
        from risfeel.aircomp import Beamformer
        v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        f = Beamformer(v / np.linalg.norm(v))
        plan = plan_transmissions(h, (0, 1, 2, 3), prof, f)
        rep = privacy_proxy(h, plan, PrivacySpec(0.2, 1.0, 0.05), 0.3)
        assert rep.system_epsilon == np.max(rep.epsilon_per_pair)
        assert rep.epsilon_per_pair.shape == (4, 3)


class TestSpecValidation:
    def test_delta_bounds(self):
        with pytest.raises(UsageError):
            PrivacySpec(0.1, 1.0, 0.0)
        with pytest.raises(UsageError):
            PrivacySpec(0.1, 1.0, 1.0)

    def test_negative_noise(self):
        with pytest.raises(UsageError):
            PrivacySpec(-0.1, 1.0, 0.05)

    def test_nonpositive_clip(self):
        with pytest.raises(UsageError):
            PrivacySpec(0.1, 0.0, 0.05)
