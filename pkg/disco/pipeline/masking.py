"""Channel masks and the defenses that apply them."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DimensionError, ParameterError
from ..tensor import Module, Tensor, ops
from .config import DEFENSE_MODES, NoiseConfig

logger = logging.getLogger(__name__)


def round_half_away(x: float) -> int:
    """Round to nearest, halves away from zero.

    The 1e-9 nudge absorbs representation error such as (1 - 0.9) * 5.
    """
    return int(np.sign(x) * np.floor(abs(x) + 0.5 + 1e-9))


def check_ratio(ratio: float) -> None:
    if not 0.0 <= ratio <= 1.0:
        raise ParameterError(f"Pruning ratio must lie in [0, 1], got {ratio}")


def active_channel_count(ratio: float, channels: int) -> int:
    """Number of channels kept at pruning ratio R: round((1 - R) * C)."""
    check_ratio(ratio)
    return round_half_away((1.0 - ratio) * channels)


def hard_mask(scores: np.ndarray, ratio: float) -> np.ndarray:
    """Binary mask keeping the top-scoring channels of each row.

    Ties go to the lower channel index.
    """
    scores = np.atleast_2d(np.asarray(scores))
    keep = active_channel_count(ratio, scores.shape[-1])
    order = np.argsort(-scores, axis=-1, kind='stable')
    mask = np.zeros(scores.shape, dtype=np.float32)
    np.put_along_axis(mask, order[:, :keep], 1.0, axis=-1)
    return mask


def soft_mask(scores: Tensor, temperature: float) -> Tensor:
    return ops.sigmoid_temperature(scores, temperature)


@dataclass
class PruningMask:
    """Scores of one batch and the mask derived from them.

    ``values`` is the mask actually multiplied into the activations: the
    soft sigmoid (differentiable) in soft mode, the 0/1 top-k in hard mode.
    """
    scores: np.ndarray
    values: Tensor
    mode: str
    ratio: float
    temperature: float

    @property
    def soft(self) -> np.ndarray:
        return ops.sigmoid_temperature(Tensor.constant(self.scores), self.temperature).data

    @property
    def hard(self) -> np.ndarray:
        return hard_mask(self.scores, self.ratio)

    @property
    def channels(self) -> int:
        return self.scores.shape[-1]

    def active_channels(self) -> np.ndarray:
        """Count of non-zero mask entries per sample."""
        return np.count_nonzero(self.values.data, axis=-1)


def generate_mask(z_hat: Tensor, filter_gen: Module, temperature: float, ratio: float,
                  mode: str = 'hard') -> PruningMask:
    """Score the channels of ``z_hat`` and turn the scores into a mask."""
    if not temperature > 0:
        raise ParameterError(f"Sigmoid temperature must be positive, got {temperature}")
    check_ratio(ratio)
    if mode not in ('soft', 'hard'):
        raise ParameterError(f"Mask mode must be 'soft' or 'hard', got '{mode}'")
    scores = filter_gen(z_hat)
    if mode == 'soft':
        values = soft_mask(scores, temperature)
    else:
        values = Tensor.constant(hard_mask(scores.data, ratio).astype(z_hat.data.dtype))
    return PruningMask(scores=scores.data, values=values, mode=mode, ratio=ratio, temperature=temperature)


def random_channel_mask(rng: np.random.Generator, batch: int, channels: int,
                        probability: float, per_sample: bool = True) -> np.ndarray:
    """Bernoulli keep-mask: each channel is dropped with ``probability``."""
    rows = batch if per_sample else 1
    keep = (rng.random((rows, channels)) >= probability).astype(np.float32)
    return keep if per_sample else np.repeat(keep, batch, axis=0)


@dataclass
class DefenseOutput:
    z: Tensor
    mask: Optional[PruningMask] = None


def defend(z_hat: Tensor, mode: str, filter_gen: Optional[Module] = None,
           temperature: float = 0.03, ratio: float = 0.6, hard: bool = True,
           noise: Optional[NoiseConfig] = None,
           rng: Optional[np.random.Generator] = None) -> DefenseOutput:
    """Turn client activations into what leaves the client."""
    if mode not in DEFENSE_MODES:
        raise ParameterError(f"Unknown defense mode '{mode}'; expected one of {DEFENSE_MODES}")
    if z_hat.ndim != 4:
        raise DimensionError(f"Expected NCHW activations, got shape {z_hat.shape}")
    noise = noise or NoiseConfig()
    rng = rng or np.random.default_rng(0)
    n, c = z_hat.shape[:2]

    if mode == 'none':
        return DefenseOutput(z_hat)
    if mode == 'disco':
        if filter_gen is None:
            raise ParameterError("The disco defense needs a filter generator")
        mask = generate_mask(z_hat, filter_gen, temperature, ratio, 'hard' if hard else 'soft')
        return DefenseOutput(ops.mask_channels(z_hat, mask.values), mask)
    if mode == 'random_prune':
        keep = random_channel_mask(rng, n, c, noise.prune_probability, noise.per_sample)
        return DefenseOutput(ops.mask_channels(z_hat, Tensor.constant(keep.astype(z_hat.data.dtype))))
    perturbation = rng.normal(noise.mu, noise.sigma, size=z_hat.shape).astype(z_hat.data.dtype)
    return DefenseOutput(ops.add(z_hat, Tensor.constant(perturbation)))
