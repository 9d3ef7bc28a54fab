"""SGD with momentum."""

import logging
from typing import Iterable, List

import numpy as np

from ..errors import ParameterError
from .core import Parameter

logger = logging.getLogger(__name__)


def sgd_momentum_step(params: Iterable[Parameter], lr: float, momentum: float) -> None:
    """One update per parameter: v <- m*v + g; p <- p - lr*v.

    Parameters without a gradient are left untouched, momentum included.
    """
    for p in params:
        if p.grad is None:
            continue
        p.momentum_buffer *= momentum
        p.momentum_buffer += p.grad
        p.data -= (lr * p.momentum_buffer).astype(p.data.dtype)


class SGD:
    """Optimizer over a fixed parameter group."""

    def __init__(self, params: Iterable[Parameter], lr: float = 0.01, momentum: float = 0.9):
        if lr < 0:
            raise ParameterError(f"Learning rate must be >= 0, got {lr}")
        if not 0 <= momentum < 1:
            raise ParameterError(f"Momentum must lie in [0, 1), got {momentum}")
        self.params: List[Parameter] = list(params)
        self.lr = lr
        self.momentum = momentum

    def step(self) -> None:
        sgd_momentum_step(self.params, self.lr, self.momentum)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def reset_momentum(self) -> None:
        for p in self.params:
            p.momentum_buffer = np.zeros_like(p.data)
