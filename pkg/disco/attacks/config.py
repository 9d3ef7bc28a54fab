"""Attack configuration and the report every attack returns."""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..errors import ConfigError, ParameterError
from ..interfaces import BaseConfig
from ..metrics import mean_std

logger = logging.getLogger(__name__)

ATTACK_MODES = ('SI', 'SA')
ATTACK_KINDS = ('decoder', 'likelihood_max')
PARAMETRIZATIONS = ('prior', 'pixel')


@dataclass
class AttackConfig(BaseConfig):
    """Settings of one attack.

    ``budget`` is the number of intercepted (z, target) pairs a decoder
    attack may train on; ``targets`` is the number of samples attacked and
    scored. ``iterations`` is the optimizer step count of likelihood
    maximisation, ``epochs`` the pass count of decoder training.
    """
    mode: str = 'SI'
    kind: str = 'decoder'
    budget: int = 256
    iterations: int = 500
    lr: float = 0.01
    momentum: float = 0.9
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    parametrization: str = 'prior'
    bn_visible: bool = True
    stop_patience: int = 0
    targets: int = 8
    sensitive_classes: int = 2

    def validate(self) -> None:
        if self.mode not in ATTACK_MODES:
            raise ConfigError(f"Attack mode must be one of {ATTACK_MODES}, got '{self.mode}'", key='mode')
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"Attack kind must be one of {ATTACK_KINDS}, got '{self.kind}'", key='kind')
        if self.kind == 'likelihood_max' and self.mode != 'SI':
            raise ConfigError("Likelihood maximisation reconstructs inputs; it needs mode SI", key='mode')
        if self.parametrization not in PARAMETRIZATIONS:
            raise ConfigError(f"Parametrization must be one of {PARAMETRIZATIONS}, got '{self.parametrization}'",
                              key='parametrization')
        if self.kind == 'decoder' and self.budget < 1:
            raise ConfigError(f"Decoder attacks need a budget >= 1, got {self.budget}", key='budget')
        for key in ('epochs', 'batch_size', 'targets'):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1, got {getattr(self, key)}", key=key)
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}", key='iterations')
        if self.stop_patience < 0:
            raise ConfigError(f"stop_patience must be >= 0, got {self.stop_patience}", key='stop_patience')
        if self.sensitive_classes < 2:
            raise ConfigError(f"sensitive_classes must be >= 2, got {self.sensitive_classes}",
                              key='sensitive_classes')
        if self.lr < 0:
            raise ParameterError(f"Learning rate must be >= 0, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ParameterError(f"Momentum must lie in [0, 1), got {self.momentum}")


@dataclass
class AttackReport:
    """Per-sample attack scores and their summary.

    Reconstruction attacks fill ``ssim``, ``psnr`` and ``l1``; attribute
    attacks fill ``correct`` (1 per correctly predicted sample). The trained
    model and the reconstructions stay in memory only.
    """
    kind: str
    mode: str
    defense: str = ''
    status: str = 'ok'
    message: str = ''
    ssim: List[float] = field(default_factory=list)
    psnr: List[float] = field(default_factory=list)
    l1: List[float] = field(default_factory=list)
    correct: List[int] = field(default_factory=list)
    final_loss: Optional[float] = None
    loss_history: List[float] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    reconstructions: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    model: Any = field(default=None, repr=False, compare=False)

    @classmethod
    def failed(cls, cfg: AttackConfig, message: str, defense: str = '',
               loss_history: Optional[List[float]] = None) -> 'AttackReport':
        logger.warning(f"{cfg.kind} attack ({cfg.mode}) failed: {message}")
        return cls(kind=cfg.kind, mode=cfg.mode, defense=defense, status='failed', message=message,
                   loss_history=list(loss_history or []), config=cfg.to_dict())

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    @property
    def accuracy(self) -> Optional[float]:
        return float(np.mean(self.correct)) if self.correct else None

    def summary(self) -> Dict[str, float]:
        """Mean and standard deviation of every populated metric."""
        out = {}
        for name in ('ssim', 'psnr', 'l1', 'correct'):
            values = getattr(self, name)
            if values:
                mean, std = mean_std(values)
                label = 'accuracy' if name == 'correct' else name
                out[f"{label}_mean"] = mean
                out[f"{label}_std"] = std
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind, 'mode': self.mode, 'defense': self.defense,
            'status': self.status, 'message': self.message,
            'ssim': list(self.ssim), 'psnr': list(self.psnr), 'l1': list(self.l1),
            'correct': list(self.correct), 'final_loss': self.final_loss,
            'loss_history': list(self.loss_history), 'config': dict(self.config),
            'summary': self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def write_reports(reports: List[AttackReport], path: str) -> None:
    """One JSON object per line."""
    with open(path, 'w') as f:
        for report in reports:
            f.write(report.to_json() + '\n')


def read_reports(path: str) -> List[Dict[str, Any]]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
