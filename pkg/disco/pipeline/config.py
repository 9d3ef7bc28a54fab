"""Typed configuration of the client-side stack."""

from dataclasses import dataclass

from ..errors import ConfigError, DimensionError, ParameterError
from ..interfaces import BaseConfig

DEFENSE_MODES = ('disco', 'none', 'random_prune', 'gaussian_noise')


@dataclass
class PreprocessConfig(BaseConfig):
    """Spatial decoupler and feature aggregator settings.

    ``d`` partitions per axis give d*d tiles, one aggregated map each;
    ``filters`` is the convolution width F that is averaged down to one map
    per tile, and must equal d*d.
    """
    d: int = 4
    filters: int = 16
    toggle: bool = True
    input_size: int = 32
    kernel_size: int = 3

    def validate(self) -> None:
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}", key='d')
        if self.d * self.d != self.filters:
            raise ConfigError(f"filters must equal d*d = {self.d * self.d}, got {self.filters}", key='filters')
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be a positive odd number, got {self.kernel_size}",
                              key='kernel_size')
        if self.input_size % self.d != 0:
            raise DimensionError(f"input_size {self.input_size} is not divisible by d={self.d}")

    @property
    def partitions(self) -> int:
        return self.d * self.d


@dataclass
class NoiseConfig(BaseConfig):
    """Baseline defenses: additive Gaussian noise and random channel pruning."""
    mu: float = -1.0
    sigma: float = 400.0
    prune_probability: float = 0.6
    per_sample: bool = True

    def validate(self) -> None:
        if self.sigma < 0:
            raise ParameterError(f"Noise sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.prune_probability <= 1.0:
            raise ParameterError(f"Prune probability must lie in [0, 1], got {self.prune_probability}")
