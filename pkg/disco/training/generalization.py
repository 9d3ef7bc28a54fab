"""Empirical gap of the joint loss between the training sample and held-out data."""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict

from ..data import Dataset
from ..errors import DimensionError
from ..pipeline import SplitPipeline
from ..tensor import Module, Tensor, no_grad
from .protocol import joint_objective

logger = logging.getLogger(__name__)


@dataclass
class GapReport:
    train_loss: float
    holdout_loss: float

    @property
    def signed_gap(self) -> float:
        return self.holdout_loss - self.train_loss

    @property
    def gap(self) -> float:
        return abs(self.signed_gap)

    def to_dict(self) -> Dict[str, Any]:
        return dict(asdict(self), gap=self.gap, signed_gap=self.signed_gap)


def joint_loss(pipeline: SplitPipeline, adversary: Module, data: Dataset, rho: float, mode: str,
               batch_size: int = 64) -> float:
    """Sample mean of L_J = rho * L_util - L_priv with every network in eval mode.

    The soft mask is used, as during filter training, and the defense
    randomness is reseeded so repeated passes see identical activations.
    """
    if len(data) == 0:
        raise DimensionError("Cannot evaluate the joint loss on an empty set")
    pipeline.reseed_defense(pipeline.seed)
    total = 0.0
    with pipeline.evaluating(), adversary.evaluating(), no_grad():
        for images, y, y_hat in data.batches(batch_size):
            value = joint_objective(pipeline, adversary, Tensor(images), images, y, y_hat, rho, mode)
            total += value.item() * len(y)
    return total / len(data)


def measure_generalization_gap(pipeline: SplitPipeline, adversary: Module, train: Dataset,
                               holdout: Dataset, rho: float = 1.0, mode: str = 'SA',
                               batch_size: int = 64) -> GapReport:
    """|E_train(L_J) - E_holdout(L_J)| for the current parameters."""
    report = GapReport(joint_loss(pipeline, adversary, train, rho, mode, batch_size),
                       joint_loss(pipeline, adversary, holdout, rho, mode, batch_size))
    logger.info(f"Joint loss: train {report.train_loss:.4f}, holdout {report.holdout_loss:.4f}, "
                f"gap {report.gap:.4f}")
    return report
