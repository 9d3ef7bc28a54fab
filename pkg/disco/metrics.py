"""Reconstruction and classification quality: SSIM, PSNR, l1 distance, top-1 accuracy."""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError, ParameterError

logger = logging.getLogger(__name__)

SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PSNR_CAP = 100.0
VALID_RANGES = (1.0, 255.0)


def _as_channels(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None]
    if x.ndim == 3:
        return x
    raise DimensionError(f"Expected an H x W or C x H x W image, got shape {x.shape}")


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise DimensionError(f"Image shapes differ: {np.shape(a)} vs {np.shape(b)}")


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0, window: int = SSIM_WINDOW,
         k1: float = SSIM_K1, k2: float = SSIM_K2) -> float:
    """Mean structural similarity over uniform sliding windows and channels.

    The window shrinks to the image when the image is smaller. Local
    statistics are population moments; C1 = (k1 L)^2, C2 = (k2 L)^2.
    """
    _check_pair(a, b)
    x, y = _as_channels(a), _as_channels(b)
    h, w = min(window, x.shape[1]), min(window, x.shape[2])
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    wx = sliding_window_view(x, (h, w), axis=(1, 2))
    wy = sliding_window_view(y, (h, w), axis=(1, 2))
    mu_x = wx.mean(axis=(-2, -1))
    mu_y = wy.mean(axis=(-2, -1))
    var_x = (wx * wx).mean(axis=(-2, -1)) - mu_x ** 2
    var_y = (wy * wy).mean(axis=(-2, -1)) - mu_y ** 2
    cov = (wx * wy).mean(axis=(-2, -1)) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return float(np.clip((num / den).mean(), -1.0, 1.0))


def psnr(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB, capped at 100 for identical images."""
    _check_pair(a, b)
    mse = float(np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(data_range ** 2 / mse))


def l1_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute difference."""
    _check_pair(a, b)
    if np.size(a) == 0:
        raise DimensionError("l1_distance of empty images")
    return float(np.mean(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def top1_accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose arg-max equals the label; ties go to the lower index."""
    logits = np.asarray(logits)
    labels = np.asarray(labels).reshape(-1)
    if logits.ndim != 2 or len(logits) != len(labels):
        raise DimensionError(f"Expected N x K logits for {len(labels)} labels, got shape {logits.shape}")
    if len(labels) == 0:
        raise DimensionError("top1_accuracy of an empty batch")
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def mean_std(values: Sequence[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return 0.0, 0.0
    return float(arr.mean()), float(arr.std())


@dataclass
class ImagePair:
    """Reference and candidate image of equal shape on a declared range of 1 or 255."""
    reference: np.ndarray
    candidate: np.ndarray
    data_range: float = 1.0

    def __post_init__(self):
        _check_pair(self.reference, self.candidate)
        if self.data_range not in VALID_RANGES:
            raise ParameterError(f"Declared range must be one of {VALID_RANGES}, got {self.data_range}")
        for name, image in (('reference', self.reference), ('candidate', self.candidate)):
            arr = np.asarray(image)
            if arr.size and (arr.min() < -1e-6 or arr.max() > self.data_range + 1e-6):
                raise ParameterError(f"{name} values fall outside [0, {self.data_range}]")

    def ssim(self) -> float:
        return ssim(self.reference, self.candidate, self.data_range)

    def psnr(self) -> float:
        return psnr(self.reference, self.candidate, self.data_range)

    def l1(self) -> float:
        return l1_distance(self.reference, self.candidate)
