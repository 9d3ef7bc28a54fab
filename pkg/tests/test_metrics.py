"""Test reconstruction and classification metrics."""
import math

import numpy as np
import pytest

from disco.errors import DimensionError, ParameterError
from disco.metrics import (PSNR_CAP, SSIM_K1, SSIM_K2, ImagePair, l1_distance, mean_std, psnr,
                           ssim, top1_accuracy)


def test_ssim_identical_images(rng):
    a = rng.uniform(0, 1, size=(3, 16, 16))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-9)


def test_ssim_is_symmetric_and_bounded(rng):
    a = rng.uniform(0, 1, size=(3, 12, 12))
    b = rng.uniform(0, 1, size=(3, 12, 12))
    assert ssim(a, b) == pytest.approx(ssim(b, a))
    assert -1.0 <= ssim(a, b) < 1.0


def test_ssim_constant_images_closed_form():
    """Zero variance everywhere leaves only the luminance term with stabilisers."""
    a = np.zeros((1, 8, 8))
    b = np.ones((1, 8, 8))
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    expected = (c1 * c2) / ((1.0 + c1) * c2)
    assert ssim(a, b) == pytest.approx(expected, rel=1e-9)


def test_ssim_handles_images_smaller_than_window():
    a = np.full((3, 4, 4), 0.3)
    assert ssim(a, a) == pytest.approx(1.0)


def test_ssim_rejects_mismatched_shapes():
    with pytest.raises(DimensionError):
        ssim(np.zeros((3, 8, 8)), np.zeros((3, 8, 9)))


def test_psnr_values():
    a = np.zeros((3, 4, 4))
    assert psnr(a, a) == PSNR_CAP
    b = np.full((3, 4, 4), 0.1)
    assert psnr(a, b) == pytest.approx(20.0)
    assert psnr(a * 255, b * 255, data_range=255.0) == pytest.approx(20.0)


def test_l1_distance():
    a = np.zeros((2, 2))
    b = np.array([[0.5, -0.5], [1.0, 0.0]])
    assert l1_distance(a, b) == pytest.approx(0.5)
    assert l1_distance(b, b) == 0.0
    with pytest.raises(DimensionError):
        l1_distance(np.zeros(0), np.zeros(0))


def test_top1_accuracy_ties_go_low():
    logits = np.array([[1.0, 1.0], [0.0, 2.0], [3.0, 1.0], [0.5, 0.5]])
    labels = np.array([0, 1, 1, 1])
    assert top1_accuracy(logits, labels) == pytest.approx(0.5)
    with pytest.raises(DimensionError):
        top1_accuracy(logits, labels[:2])


def test_mean_std():
    mean, std = mean_std([1.0, 3.0])
    assert mean == 2.0
    assert std == 1.0
    assert mean_std([]) == (0.0, 0.0)


def test_image_pair_checks_range():
    ref = np.full((3, 8, 8), 0.5)
    pair = ImagePair(ref, ref)
    assert pair.ssim() == pytest.approx(1.0)
    assert pair.l1() == 0.0
    assert math.isclose(pair.psnr(), PSNR_CAP)
    with pytest.raises(ParameterError):
        ImagePair(ref, ref, data_range=2.0)
    with pytest.raises(ParameterError):
        ImagePair(ref * 4, ref)
