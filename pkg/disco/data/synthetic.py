"""Synthetic images with separately controllable task and sensitive cues.

The task attribute is a white shape in the left part of the image; the
sensitive attribute is a colour tint over a square patch. ``overlap`` slides
the patch from the right half (0) onto the shape itself (1), so the two cues
share pixels in proportion to it. ``correlation`` is the probability that the
sensitive label is a deterministic function of the task label.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..interfaces import BaseConfig
from .dataset import Dataset

logger = logging.getLogger(__name__)

PALETTE = np.array([
    (0.9, 0.1, 0.1), (0.1, 0.8, 0.1), (0.1, 0.2, 0.9), (0.9, 0.9, 0.1),
    (0.8, 0.1, 0.8), (0.1, 0.8, 0.8), (0.9, 0.5, 0.1), (0.5, 0.1, 0.6),
], dtype=np.float32)
MAX_SHAPES = 8


@dataclass
class SynthConfig(BaseConfig):
    image_size: int = 32
    task_classes: int = 4
    sensitive_classes: int = 2
    correlation: float = 0.0
    overlap: float = 0.0
    noise: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if self.image_size < 8 or self.image_size % 4:
            raise ConfigError(f"image_size must be a multiple of 4 and >= 8, got {self.image_size}",
                              key='image_size')
        if not 2 <= self.task_classes <= MAX_SHAPES:
            raise ConfigError(f"task_classes must lie in 2..{MAX_SHAPES}", key='task_classes')
        if not 2 <= self.sensitive_classes <= len(PALETTE):
            raise ConfigError(f"sensitive_classes must lie in 2..{len(PALETTE)}", key='sensitive_classes')
        for key in ('correlation', 'overlap'):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError(f"{key} must lie in [0, 1]", key=key)
        if self.noise < 0:
            raise ConfigError("noise must be >= 0", key='noise')


def shape_mask(shape_class: int, size: int) -> np.ndarray:
    """Boolean size x size stencil of one task shape."""
    r, c = np.mgrid[0:size, 0:size].astype(np.float64)
    centre = (size - 1) / 2.0
    dr, dc = r - centre, c - centre
    radius = size / 2.0
    third = size / 6.0
    if shape_class == 0:
        mask = (np.abs(dr) < 0.8 * radius) & (np.abs(dc) < 0.8 * radius)
    elif shape_class == 1:
        mask = dr ** 2 + dc ** 2 < (0.8 * radius) ** 2
    elif shape_class == 2:
        mask = np.abs(dr) < third
    elif shape_class == 3:
        mask = np.abs(dc) < third
    elif shape_class == 4:
        mask = (np.abs(dr) < third * 0.7) | (np.abs(dc) < third * 0.7)
    elif shape_class == 5:
        mask = np.abs(dr - dc) < third
    elif shape_class == 6:
        dist = np.sqrt(dr ** 2 + dc ** 2)
        mask = (dist < 0.9 * radius) & (dist > 0.5 * radius)
    elif shape_class == 7:
        mask = (r >= size * 0.15) & (np.abs(dc) <= (r - size * 0.15) * 0.6)
    else:
        raise ConfigError(f"No shape for class {shape_class}")
    return mask


def sample_labels(cfg: SynthConfig, n: int, rng: np.random.Generator):
    """Balanced task labels and correlated sensitive labels."""
    task = rng.permutation(np.arange(n) % cfg.task_classes)
    tied = rng.random(n) < cfg.correlation
    free = rng.integers(0, cfg.sensitive_classes, size=n)
    sensitive = np.where(tied, task % cfg.sensitive_classes, free)
    return task.astype(np.int64), sensitive.astype(np.int64)


def generate_synthetic(cfg: SynthConfig, n: int) -> Dataset:
    """Render ``n`` labelled images; identical configs give identical datasets."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    size = cfg.image_size
    box = size // 2
    jitter = max(size // 16, 1)
    patch_col = int(round((1.0 - cfg.overlap) * (size - box)))
    stencils = [shape_mask(k, box) for k in range(cfg.task_classes)]
    task, sensitive = sample_labels(cfg, n, rng)

    images = np.full((n, 3, size, size), 0.4, dtype=np.float32)
    offsets = rng.integers(-jitter, jitter + 1, size=(n, 2))
    for i in range(n):
        top = size // 4 + offsets[i, 0]
        left = jitter + offsets[i, 1]
        rows = slice(top, top + box)
        images[i, :, rows, left:left + box][:, stencils[task[i]]] = 0.95
        colour = PALETTE[sensitive[i]].reshape(3, 1, 1)
        col = min(max(patch_col + offsets[i, 1], 0), size - box)
        region = images[i, :, rows, col:col + box]
        images[i, :, rows, col:col + box] = 0.5 * region + 0.5 * colour
    if cfg.noise > 0 and n:
        images += rng.normal(0.0, cfg.noise, size=images.shape).astype(np.float32)
    np.clip(images, 0.0, 1.0, out=images)
    logger.debug(f"Generated {n} synthetic images (correlation={cfg.correlation}, overlap={cfg.overlap})")
    return Dataset(images, task, sensitive, cfg.task_classes, cfg.sensitive_classes,
                   dataset_id=f"synthetic-k{cfg.correlation:g}-o{cfg.overlap:g}")
