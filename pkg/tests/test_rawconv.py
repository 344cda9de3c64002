import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.ndimage import convolve

from burstsched.rawconv import (
    DEFAULT_CCM_BANK,
    ColorPipelineParams,
    apply_ccm,
    apply_inverse_ccm,
    bayer_masks,
    convert_sequence,
    demosaic_bilinear,
    demosaic_bilinear_adjoint,
    forward_isp,
    gamma_compress,
    gamma_expand,
    inverse_isp,
    inverse_white_balance,
    mosaic_rggb,
    sample_pipeline_params,
)

# a few sRGB color-checker patches (approximate published values / 255)
CHECKER = np.array(
    [
        [115, 82, 68], [194, 150, 130], [98, 122, 157], [87, 108, 67],
        [133, 128, 177], [103, 189, 170], [214, 126, 44], [80, 91, 166],
        [193, 90, 99], [94, 60, 108], [157, 188, 64], [224, 163, 46],
        [56, 61, 150], [70, 148, 73], [175, 54, 60], [231, 199, 31],
        [187, 86, 149], [8, 133, 161], [243, 243, 242], [200, 200, 200],
        [160, 160, 160], [122, 122, 121], [85, 85, 85], [52, 52, 52],
    ]
) / 255.0


def _scalar_srgb_to_linear(v):
    return v / 12.92 if v <= 0.04045 else ((v + 0.055) / 1.055) ** 2.4


def _reference_inverse(pixel, params):
    lin = [_scalar_srgb_to_linear(v) for v in pixel]
    inv = np.linalg.inv(params.ccm)
    cam = [max(sum(inv[r][c] * lin[c] for c in range(3)), 0.0) for r in range(3)]
    return [cam[0] * params.g_rgb / params.g_r, cam[1] * params.g_rgb, cam[2] * params.g_rgb / params.g_b]


def _reference_demosaic(plane):
    h, w = plane.shape
    masks = bayer_masks(h, w)
    rb = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]]) / 4.0
    g = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]]) / 4.0
    return np.stack([convolve(plane * masks[..., c], k, mode="mirror") for c, k in enumerate((rb, g, rb))], axis=-1)


class TestGamma:
    def test_fixed_points(self):
        np.testing.assert_array_equal(gamma_expand([0.0, 1.0]), [0.0, 1.0])

    def test_breakpoint(self):
        assert gamma_expand(0.04045) == pytest.approx(0.0031308, abs=5e-8)

    def test_mid_gray(self):
        assert gamma_expand(0.5) == pytest.approx(0.21404, abs=5e-6)

    def test_round_trip(self):
        x = np.linspace(0, 1, 1001)
        np.testing.assert_allclose(gamma_compress(gamma_expand(x)), x, atol=1e-12)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            gamma_expand(np.array([1.2]))


class TestColor:
    def test_identity_ccm(self, rng):
        img = rng.random((4, 4, 3))
        np.testing.assert_array_equal(apply_inverse_ccm(img, ColorPipelineParams()), img)

    def test_scaled_identity(self, rng):
        img = rng.random((4, 4, 3))
        np.testing.assert_allclose(apply_inverse_ccm(img, ColorPipelineParams(2 * np.eye(3))), img / 2, rtol=1e-15)

    def test_ccm_round_trip(self, rng):
        for _ in range(10):
            ccm = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
            assert np.linalg.cond(ccm) < 100
            p = ColorPipelineParams(ccm)
            img = rng.random((5, 5, 3))
            cam = img @ np.linalg.inv(ccm).T
            np.testing.assert_allclose(apply_ccm(cam, p), img, atol=1e-10)

    def test_singular_ccm_rejected(self):
        with pytest.raises(np.linalg.LinAlgError):
            apply_inverse_ccm(np.zeros((2, 2, 3)), ColorPipelineParams(np.ones((3, 3))))

    def test_unit_white_balance(self, rng):
        img = rng.random((3, 3, 3))
        np.testing.assert_array_equal(inverse_white_balance(img, ColorPipelineParams()), img)

    def test_white_balance_values(self):
        p = ColorPipelineParams(np.eye(3), g_rgb=0.8, g_r=2.0, g_b=1.7)
        out = inverse_white_balance(np.array([[[1.0, 0.5, 0.0]]]), p)
        assert out[0, 0, 0] == pytest.approx(0.4)
        assert out[0, 0, 1] == pytest.approx(0.4)

    def test_bank_rows_sum_to_one(self):
        for m in DEFAULT_CCM_BANK:
            np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-12)
            assert np.linalg.cond(m) < 1e6


class TestSampling:
    def test_distribution(self):
        rng = np.random.default_rng(7)
        draws = [sample_pipeline_params(rng) for _ in range(100_000)]
        g_r = np.array([d.g_r for d in draws])
        g_rgb = np.array([d.g_rgb for d in draws])
        g_b = np.array([d.g_b for d in draws])
        assert abs(g_r.mean() - 2.15) < 0.01
        assert abs(g_rgb.mean() - 0.8) < 0.01
        assert abs(g_rgb.std() - 0.1) < 0.01
        assert g_r.min() >= 1.9 and g_r.max() <= 2.4
        assert g_b.min() >= 1.5 and g_b.max() <= 1.9

    def test_deterministic(self):
        a = sample_pipeline_params(11)
        b = sample_pipeline_params(11)
        assert a.to_dict() == b.to_dict()


class TestMosaic:
    def test_gray(self):
        np.testing.assert_array_equal(mosaic_rggb(np.full((4, 6, 3), 0.3)), 0.3)

    def test_red_pattern(self):
        img = np.zeros((4, 4, 3))
        img[..., 0] = 1
        expected = np.zeros((4, 4))
        expected[0::2, 0::2] = 1
        np.testing.assert_array_equal(mosaic_rggb(img), expected)

    def test_odd_size_rejected(self):
        with pytest.raises(ValueError):
            mosaic_rggb(np.zeros((3, 4, 3)))

    def test_batch(self, rng):
        imgs = rng.random((3, 4, 4, 3))
        np.testing.assert_array_equal(mosaic_rggb(imgs)[1], mosaic_rggb(imgs[1]))


class TestDemosaic:
    def test_constant(self):
        np.testing.assert_allclose(demosaic_bilinear(np.full((6, 8), 0.4)), 0.4, rtol=1e-14)

    @pytest.mark.parametrize("axis", [0, 1])
    def test_ramp_round_trip(self, axis):
        n = 128
        ramp = np.linspace(0, 1, n)
        img = np.repeat((ramp[:, None] if axis == 0 else ramp[None, :])[..., None], 3, axis=-1)
        img = np.broadcast_to(img, (n, n, 3))
        assert np.abs(demosaic_bilinear(mosaic_rggb(img)) - img).max() < 0.01

    def test_matches_convolution_reference(self, rng):
        plane = rng.random((10, 12))
        np.testing.assert_allclose(demosaic_bilinear(plane), _reference_demosaic(plane), atol=1e-14)

    def test_linear(self, rng):
        x, y = rng.random((2, 8, 8))
        np.testing.assert_allclose(
            demosaic_bilinear(2 * x - 3 * y), 2 * demosaic_bilinear(x) - 3 * demosaic_bilinear(y), atol=1e-13
        )

    def test_adjoint(self, rng):
        x = rng.random((8, 10))
        g = rng.random((8, 10, 3))
        assert np.sum(demosaic_bilinear(x) * g) == pytest.approx(np.sum(x * demosaic_bilinear_adjoint(g)), rel=1e-12)

    def test_sampled_sites_kept(self, rng):
        plane = rng.random((8, 8))
        rgb = demosaic_bilinear(plane)
        masks = bayer_masks(8, 8)
        for c in range(3):
            np.testing.assert_allclose(rgb[..., c][masks[..., c]], plane[masks[..., c]], atol=1e-14)


class TestPipeline:
    def test_gray_identity(self):
        out = forward_isp(np.full((4, 4, 3), 0.5), ColorPipelineParams(), gamma=False)
        np.testing.assert_allclose(out, 0.5)
        out = forward_isp(gamma_expand(np.full((4, 4, 3), 0.5)))
        np.testing.assert_allclose(out, 0.5, atol=1e-12)

    def test_gamma_off_is_linear(self, rng):
        img = rng.random((4, 4, 3)) * 0.4
        np.testing.assert_allclose(forward_isp(2 * img, gamma=False), 2 * forward_isp(img, gamma=False), atol=1e-14)

    @pytest.mark.parametrize("bank_index", range(len(DEFAULT_CCM_BANK)))
    def test_round_trip(self, bank_index):
        rng = np.random.default_rng(bank_index)
        for _ in range(10):
            p = sample_pipeline_params(rng)
            p = ColorPipelineParams(DEFAULT_CCM_BANK[bank_index], p.g_rgb, p.g_r, p.g_b)
            # in-gamut: the inverse CCM maps the sample to non-negative camera values
            x = rng.uniform(0.2, 0.8, (16, 16, 3))
            if np.any(gamma_expand(x) @ np.linalg.inv(p.ccm).T < 0):
                continue
            np.testing.assert_allclose(forward_isp(inverse_isp(x, p), p), x, atol=0.01)

    def test_checker_scalar_reference(self):
        p = ColorPipelineParams(DEFAULT_CCM_BANK[1], 0.85, 2.1, 1.7)
        img = CHECKER.reshape(4, 6, 3)
        out = inverse_isp(img, p)
        for idx in np.ndindex(4, 6):
            np.testing.assert_allclose(out[idx], _reference_inverse(img[idx], p), rtol=1e-12, atol=1e-15)

    def test_convert_black_frame(self):
        seq = convert_sequence([np.zeros((4, 4, 3))], ColorPipelineParams())
        assert len(seq) == 1
        np.testing.assert_array_equal(seq.frames, 0.0)

    def test_convert_linear_identity(self, rng):
        lin = rng.random((4, 4, 3))
        seq = convert_sequence([gamma_compress(lin)], ColorPipelineParams())
        np.testing.assert_allclose(seq.frames[0], lin, atol=1e-12)

    def test_convert_rejects_mixed_shapes(self):
        with pytest.raises(ValueError):
            convert_sequence([np.zeros((4, 4, 3)), np.zeros((4, 6, 3))], ColorPipelineParams())

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
    def test_round_trip_identity_ccm_property(self, r, g, b):
        p = ColorPipelineParams(np.eye(3), 0.8, 2.0, 1.7)
        x = np.broadcast_to(np.array([r, g, b]), (2, 2, 3))
        np.testing.assert_allclose(forward_isp(inverse_isp(x, p), p), x, atol=1e-9)
