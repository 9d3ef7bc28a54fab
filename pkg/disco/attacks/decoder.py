"""Supervised attacks trained on intercepted activation pairs."""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..errors import ConfigError, DimensionError
from ..pipeline import LeakageClassifier, ReconstructionDecoder
from ..tensor import SGD, Module, Tensor, no_grad, ops
from .config import AttackConfig

logger = logging.getLogger(__name__)


@dataclass
class AttackFit:
    """A trained attack model f-hat and its per-epoch mean training loss."""
    model: Module
    losses: List[float] = field(default_factory=list)


def _check_pairs(z: np.ndarray, targets: np.ndarray) -> None:
    if len(z) == 0:
        raise ConfigError("An attack needs at least one (z, target) pair", key='budget')
    if len(z) != len(targets):
        raise DimensionError(f"{len(z)} activations for {len(targets)} targets")
    if z.ndim != 4:
        raise DimensionError(f"Expected N x C x h x w activations, got shape {z.shape}")


def _fit(model: Module, z: np.ndarray, targets: np.ndarray, cfg: AttackConfig, loss_fn) -> AttackFit:
    rng = np.random.default_rng((cfg.seed, 5))
    opt = SGD(model.parameters(), cfg.lr, cfg.momentum)
    model.train()
    losses = []
    for epoch in range(cfg.epochs):
        total = 0.0
        for idx in np.array_split(rng.permutation(len(z)), max(1, -(-len(z) // cfg.batch_size))):
            model.zero_grad()
            loss = loss_fn(model(Tensor(z[idx])), targets[idx])
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        losses.append(total / len(z))
        logger.debug(f"attack epoch {epoch}: loss {losses[-1]:.5f}")
    model.eval()
    return AttackFit(model, losses)


def train_supervised_decoder(z: np.ndarray, x: np.ndarray, cfg: AttackConfig) -> AttackFit:
    """Transpose-convolution decoder minimising l1(f_hat(z), x) over the pairs."""
    z = np.asarray(z, dtype=np.float32)
    x = np.asarray(x, dtype=np.float32)
    _check_pairs(z, x)
    _, channels, size, _ = z.shape
    decoder = ReconstructionDecoder(channels, size, x.shape[-1], rng=np.random.default_rng((cfg.seed, 4)))

    def loss_fn(output, target):
        return ops.l1_loss(output, Tensor.constant(target))
    fit = _fit(decoder, z, x, cfg, loss_fn)
    logger.info(f"Decoder trained on {len(z)} pairs: final l1 {fit.losses[-1]:.4f}")
    return fit


def train_leakage_classifier(z: np.ndarray, labels: np.ndarray, cfg: AttackConfig) -> AttackFit:
    """MLP predicting the sensitive attribute from flattened activations."""
    z = np.asarray(z, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    _check_pairs(z, labels)
    features = int(np.prod(z.shape[1:]))
    classifier = LeakageClassifier(features, cfg.sensitive_classes, rng=np.random.default_rng((cfg.seed, 4)))
    fit = _fit(classifier, z, labels, cfg, ops.softmax_cross_entropy)
    logger.info(f"Leakage classifier trained on {len(z)} pairs: final loss {fit.losses[-1]:.4f}")
    return fit


def apply_model(model: Module, z: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Run a trained attack model over activations in eval mode."""
    chunks = []
    with model.evaluating(), no_grad():
        for start in range(0, len(z), batch_size):
            chunks.append(model(Tensor(np.asarray(z[start:start + batch_size], dtype=np.float32))).data)
    return np.concatenate(chunks, axis=0)
