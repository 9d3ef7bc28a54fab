"""Typed configuration of the min-max training protocol."""

from dataclasses import dataclass

from ..errors import ConfigError, ParameterError
from ..interfaces import BaseConfig

PRIVACY_MODES = ('SI', 'SA')


@dataclass
class TrainConfig(BaseConfig):
    """Hyper-parameters of both training phases.

    The update schedule is ``adversary_steps`` : ``task_steps`` :
    ``filter_steps`` optimizer steps per batch in phase 2.
    """
    rho: float = 1.0
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    phase1_epochs: int = 5
    phase2_epochs: int = 5
    temperature: float = 0.03
    pruning_ratio: float = 0.6
    seed: int = 0
    adversary_steps: int = 1
    task_steps: int = 1
    filter_steps: int = 1
    freeze_client: bool = True
    privacy_mode: str = 'SA'
    server_epochs: int = 1

    def validate(self) -> None:
        if self.rho < 0:
            raise ParameterError(f"rho must be >= 0, got {self.rho}")
        if self.lr < 0:
            raise ParameterError(f"Learning rate must be >= 0, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ParameterError(f"Momentum must lie in [0, 1), got {self.momentum}")
        if not self.temperature > 0:
            raise ParameterError(f"Temperature must be positive, got {self.temperature}")
        if not 0 <= self.pruning_ratio <= 1:
            raise ParameterError(f"Pruning ratio must lie in [0, 1], got {self.pruning_ratio}")
        for key in ('batch_size', 'phase1_epochs', 'phase2_epochs', 'adversary_steps',
                    'task_steps', 'filter_steps'):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1, got {getattr(self, key)}", key=key)
        if self.server_epochs < 0:
            raise ConfigError(f"server_epochs must be >= 0, got {self.server_epochs}", key='server_epochs')
        if self.privacy_mode not in PRIVACY_MODES:
            raise ConfigError(f"privacy_mode must be one of {PRIVACY_MODES}, got '{self.privacy_mode}'",
                              key='privacy_mode')
