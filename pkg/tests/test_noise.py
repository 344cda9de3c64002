import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burstsched.noise import (
    NoiseModel,
    NoiseParams,
    apply_noise,
    apply_noise_grad,
    noise_params,
    noise_params_grad,
    read_noise_param,
    sample_noise_field,
    shot_noise_param,
)


class TestShotNoise:
    def test_gain_100(self):
        assert shot_noise_param(100) == pytest.approx(1.73863e-4, abs=5e-10)

    def test_intercept_limit(self):
        assert shot_noise_param(1e-12) == pytest.approx(8.1006e-05, rel=1e-9)

    def test_gain_51200(self):
        exact = Fraction("9.2857e-07") * 51200 + Fraction("8.1006e-05")
        assert shot_noise_param(51200) == pytest.approx(float(exact), rel=1e-14)
        assert shot_noise_param(51200) == pytest.approx(4.76238e-02, abs=5e-8)

    def test_vectorized(self):
        g = np.array([100.0, 51200.0])
        np.testing.assert_array_equal(shot_noise_param(g), [shot_noise_param(100.0), shot_noise_param(51200.0)])

    def test_non_positive_gain(self):
        with pytest.raises(ValueError):
            shot_noise_param(0.0)


class TestReadNoise:
    def test_unit_shot(self):
        assert read_noise_param(1.0) == pytest.approx(math.exp(0.45982), rel=1e-14)
        assert read_noise_param(1.0) == pytest.approx(1.5838, abs=5e-5)

    def test_natural_log(self):
        assert read_noise_param(1e-3) == pytest.approx(3.28e-7, rel=5e-3)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-6, 1e2))
    def test_log_linear(self, lam):
        assert read_noise_param(10 * lam) / read_noise_param(lam) == pytest.approx(10**2.2282, rel=1e-10)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            read_noise_param(0.0)

    def test_grad(self):
        g, h = 70000.0, 1.0
        d_shot, d_read = noise_params_grad(g)
        hi, lo = noise_params(g + h), noise_params(g - h)
        assert d_shot == pytest.approx((hi.lambda_shot - lo.lambda_shot) / (2 * h), rel=1e-6)
        assert d_read == pytest.approx((hi.lambda_read - lo.lambda_read) / (2 * h), rel=1e-6)


class TestNoiseField:
    def test_deterministic(self):
        np.testing.assert_array_equal(sample_noise_field((3, 4), 9), sample_noise_field((3, 4), 9))

    def test_moments(self):
        z = sample_noise_field(1_000_000, 0)
        assert abs(z.mean()) < 0.005
        assert abs(z.var() - 1) < 0.005

    def test_seeds_uncorrelated(self):
        a = sample_noise_field(1_000_000, 1)
        b = sample_noise_field(1_000_000, 2)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


class TestApplyNoise:
    def test_zero_field(self, rng):
        S = rng.random((8, 8))
        np.testing.assert_array_equal(apply_noise(S, 3.0, NoiseParams(1e-3, 1e-4), np.zeros_like(S)), S)

    def test_zero_gain(self, rng):
        S = rng.random((8, 8))
        np.testing.assert_array_equal(apply_noise(S, 0.0, NoiseParams(1e-3, 1e-4), rng.normal(size=S.shape)), S)

    def test_variance(self):
        S = np.full(1_000_000, 0.25)
        p = NoiseParams(1e-3, 2e-4)
        g = 3.0
        out = apply_noise(S, g, p, sample_noise_field(S.shape, 4))
        expected = g**2 * (2e-4 + 0.25 * 1e-3)
        assert np.var(out - S) == pytest.approx(expected, rel=0.02)

    def test_grad_matches_finite_difference(self, rng):
        S = rng.uniform(0.1, 0.9, 50)
        Z = rng.normal(size=50)
        p = NoiseParams(4e-2, 1e-3)
        h = 1e-7
        num = (apply_noise(S + h, 2.0, p, Z) - apply_noise(S - h, 2.0, p, Z)) / (2 * h)
        np.testing.assert_allclose(apply_noise_grad(S, 2.0, p, Z), num, rtol=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            apply_noise(np.zeros(3), 1.0, NoiseParams(1e-3, 1e-3), np.zeros(4))

    def test_negative_signal(self):
        with pytest.raises(ValueError):
            apply_noise(np.array([-0.1]), 1.0, NoiseParams(1e-3, 1e-3), np.zeros(1))


class TestModel:
    def test_amplification_modes(self):
        assert NoiseModel().amplification(51200) == 1.0
        assert NoiseModel(amplify_by_gain=True).amplification(51200) == 51200.0

    def test_dict_round_trip(self):
        m = NoiseModel(amplify_by_gain=True, enabled=False)
        assert NoiseModel.from_dict(m.to_dict()) == m

    def test_params_positive(self):
        with pytest.raises(ValueError):
            NoiseParams(0.0, 1.0)
