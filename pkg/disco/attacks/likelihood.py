"""White-box likelihood maximisation: invert one intercepted activation.

A generator is optimised so that the attacker's copy of the client maps
its image onto the intercepted z. The objective is the squared l2
distance ||f1(x_hat) - z||^2 summed over the activation.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..errors import DimensionError, NumericalError
from ..metrics import l1_distance, psnr, ssim
from ..pipeline import ImagePrior
from ..tensor import SGD, Module, Parameter, Tensor, ops
from .config import AttackConfig, AttackReport

logger = logging.getLogger(__name__)


class PixelImage(Module):
    """The image itself as the optimised parameter, kept inside [0, 1]."""

    def __init__(self, size: int, rng: np.random.Generator):
        super().__init__()
        self.image = Parameter(rng.uniform(0.0, 1.0, size=(1, 3, size, size)))

    def forward(self) -> Tensor:
        return self.image

    def project(self) -> None:
        np.clip(self.image.data, 0.0, 1.0, out=self.image.data)


def make_generator(cfg: AttackConfig, image_size: int) -> Module:
    rng = np.random.default_rng((cfg.seed, 7))
    if cfg.parametrization == 'pixel':
        return PixelImage(image_size, rng)
    return ImagePrior(image_size, rng=rng)


def _image_size(client: Module, z: np.ndarray, image_size: Optional[int]) -> int:
    if image_size:
        return image_size
    cfg = getattr(client, 'cfg', None)
    return cfg.input_size if cfg is not None else z.shape[-1]


def likelihood_maximization_attack(z: np.ndarray, client: Module, cfg: AttackConfig,
                                   x_true: Optional[np.ndarray] = None,
                                   image_size: Optional[int] = None,
                                   defense: str = '') -> Tuple[Optional[np.ndarray], AttackReport]:
    """Reconstruct the input behind one activation ``z`` (C x h x w or 1 x C x h x w).

    ``client`` is the attacker's frozen copy of the pre-processor and client network.
    The generator is evaluated ``iterations + 1`` times; the best-loss image
    is returned, so the reported loss history never increases. Non-finite
    losses end the attack with a failed report.
    """
    cfg.validate()
    z = np.asarray(z, dtype=np.float32)
    if z.ndim == 3:
        z = z[None]
    if z.ndim != 4 or len(z) != 1:
        raise DimensionError(f"Likelihood maximisation attacks one activation at a time, got shape {z.shape}")
    size = _image_size(client, z, image_size)
    generator = make_generator(cfg, size)
    opt = SGD(generator.parameters(), cfg.lr, cfg.momentum)
    history = []
    best_loss, best_image, best_iter = np.inf, None, 0
    try:
        target = Tensor.constant(z)
        for it in range(cfg.iterations + 1):
            generator.zero_grad()
            x_hat = generator()
            z_hat = client(x_hat)
            if z_hat.shape != target.shape:
                raise DimensionError(f"Client output {z_hat.shape} does not match target {target.shape}")
            loss = ops.scale(ops.l2_loss(z_hat, target), float(target.size))
            value = loss.item()
            if value < best_loss:
                best_loss, best_image, best_iter = value, x_hat.data[0].copy(), it
            history.append(float(best_loss))
            if it == cfg.iterations:
                break
            if cfg.stop_patience and it - best_iter >= cfg.stop_patience:
                logger.debug(f"Stopping after {it} iterations without improvement")
                break
            loss.backward()
            opt.step()
            if isinstance(generator, PixelImage):
                generator.project()
    except NumericalError as exc:
        return best_image, AttackReport.failed(cfg, f"non-finite loss: {exc}", defense, history)

    report = AttackReport(kind='likelihood_max', mode=cfg.mode, defense=defense, final_loss=float(best_loss),
                          loss_history=history, config=cfg.to_dict(),
                          reconstructions=best_image[None], model=generator)
    if x_true is not None:
        x_true = np.asarray(x_true, dtype=np.float32).reshape(best_image.shape)
        report.ssim.append(ssim(x_true, best_image))
        report.psnr.append(psnr(x_true, best_image))
        report.l1.append(l1_distance(x_true, best_image))
    logger.debug(f"Likelihood attack: best loss {best_loss:.5f} after {len(history)} evaluations")
    return best_image, report
