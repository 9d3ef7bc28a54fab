"""Spatial decoupler and feature aggregator.

The image is cut into d*d disjoint tiles; each tile is resized back to the
full input extent, convolved with F filters and averaged over those filters
to a single map. The d*d maps are stacked as channels, so channel pruning
downstream removes whole spatial regions of the input.
"""

import logging
from typing import List, Optional

import numpy as np

from ..errors import DimensionError
from ..tensor import Module, Parameter, Tensor, ops
from ..tensor.nn import he_uniform
from .config import PreprocessConfig

logger = logging.getLogger(__name__)


def _check_divisible(height: int, width: int, d: int) -> None:
    if d < 1:
        raise DimensionError(f"Partition count per axis must be >= 1, got {d}")
    if height % d or width % d:
        raise DimensionError(f"Image extent {height}x{width} is not divisible by d={d}")


def spatial_decouple(x: np.ndarray, d: int) -> List[np.ndarray]:
    """Split a C x H x W image into d*d tiles in row-major order."""
    if x.ndim != 3:
        raise DimensionError(f"Expected a C x H x W image, got shape {x.shape}")
    _, height, width = x.shape
    _check_divisible(height, width, d)
    h, w = height // d, width // d
    return [x[:, r * h:(r + 1) * h, c * w:(c + 1) * w].copy() for r in range(d) for c in range(d)]


def spatial_recouple(parts: List[np.ndarray], d: int) -> np.ndarray:
    """Inverse of spatial_decouple."""
    if len(parts) != d * d:
        raise DimensionError(f"Expected {d * d} tiles, got {len(parts)}")
    rows = [np.concatenate(parts[r * d:(r + 1) * d], axis=2) for r in range(d)]
    return np.concatenate(rows, axis=1)


def decouple_batch(x: Tensor, d: int) -> Tensor:
    """Differentiable tiling of an N x C x H x W batch into (N*d*d) x C x H/d x W/d.

    Tiles of one sample are contiguous and row-major, matching
    spatial_decouple.
    """
    if x.ndim != 4:
        raise DimensionError(f"Expected an NCHW batch, got shape {x.shape}")
    n, c, height, width = x.shape
    _check_divisible(height, width, d)
    h, w = height // d, width // d
    tiles = ops.reshape(x, (n, c, d, h, d, w))
    tiles = ops.transpose(tiles, (0, 2, 4, 1, 3, 5))
    return ops.reshape(tiles, (n * d * d, c, h, w))


def preprocess_forward(x: Tensor, cfg: PreprocessConfig, weight: Tensor,
                       bias: Optional[Tensor] = None) -> Tensor:
    """Aggregated representation A of shape N x d*d x H x W.

    With the toggle off, the decoupler is bypassed: one convolution over the
    full image whose F outputs are averaged in d*d groups, which yields the
    same shape.
    """
    n, _, height, width = x.shape
    if height != cfg.input_size or width != cfg.input_size:
        raise DimensionError(f"Expected {cfg.input_size}x{cfg.input_size} input, got {height}x{width}")
    if weight.shape[0] != cfg.filters:
        raise DimensionError(f"Weight has {weight.shape[0]} filters, config declares {cfg.filters}")
    padding = cfg.kernel_size // 2

    if not cfg.toggle:
        maps = ops.conv2d(x, weight, bias, stride=1, padding=padding)
        group = cfg.filters // cfg.partitions
        grouped = ops.reshape(maps, (n, cfg.partitions, group, height, width))
        return ops.mean(grouped, axis=2)

    tiles = decouple_batch(x, cfg.d)
    tiles = ops.bilinear_resize(tiles, height, width)
    # mean_f conv(t, w_f) + b_f == conv(t, mean_f w_f) + mean_f b_f
    avg_weight = ops.mean(weight, axis=0, keepdims=True)
    avg_bias = ops.mean(bias, axis=0, keepdims=True) if bias is not None else None
    maps = ops.conv2d(tiles, avg_weight, avg_bias, stride=1, padding=padding)
    return ops.reshape(maps, (n, cfg.partitions, height, width))


class Preprocessor(Module):
    """Trainable part of the pre-processing module (the F-filter convolution)."""

    def __init__(self, cfg: PreprocessConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        cfg.validate()
        rng = rng or np.random.default_rng(0)
        self.cfg = cfg
        k = cfg.kernel_size
        self.weight = Parameter(he_uniform(rng, (cfg.filters, 3, k, k), 3 * k * k))
        self.bias = Parameter(np.zeros(cfg.filters))

    def forward(self, x: Tensor) -> Tensor:
        return preprocess_forward(x, self.cfg, self.weight, self.bias)

    @property
    def out_channels(self) -> int:
        return self.cfg.partitions
