"""Central finite-difference verification of analytic gradients."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from ..errors import DimensionError
from . import ops
from .core import Tensor, double_precision, no_grad

logger = logging.getLogger(__name__)


@dataclass
class GradcheckResult:
    """Worst relative error per input and overall."""
    errors: Dict[int, float] = field(default_factory=dict)
    tolerance: float = 1e-3

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-8)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def gradcheck(fn: Callable[..., Tensor], inputs: Sequence[np.ndarray],
              eps: float = 1e-3, tolerance: float = 1e-3,
              rng: Optional[np.random.Generator] = None,
              wrt: Optional[Sequence[int]] = None) -> GradcheckResult:
    """Compare backward() against central differences for ``fn(*inputs)``.

    Runs in 64-bit. Non-scalar outputs are reduced with a fixed random
    projection so every output element contributes.
    """
    rng = rng or np.random.default_rng(0)
    wrt = list(range(len(inputs))) if wrt is None else list(wrt)
    result = GradcheckResult(tolerance=tolerance)
    with double_precision():
        tensors = [Tensor(np.asarray(x, dtype=np.float64), requires_grad=(i in wrt))
                   for i, x in enumerate(inputs)]
        sample = fn(*tensors)
        projection = None if sample.size == 1 else rng.standard_normal(sample.shape)

        def objective() -> Tensor:
            out = fn(*tensors)
            if projection is None:
                return ops.reshape(out, ())
            if out.shape != projection.shape:
                raise DimensionError(f"gradcheck: output shape changed from {projection.shape} to {out.shape}")
            return ops.sum(ops.mul(out, Tensor.constant(projection.astype(out.data.dtype))))

        loss = objective()
        loss.backward()
        for i in wrt:
            t = tensors[i]
            analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
            numeric = np.zeros_like(t.data)
            flat = t.data.reshape(-1)
            with no_grad():
                for j in range(flat.size):
                    saved = flat[j]
                    flat[j] = saved + eps
                    plus = objective().item()
                    flat[j] = saved - eps
                    minus = objective().item()
                    flat[j] = saved
                    numeric.reshape(-1)[j] = (plus - minus) / (2 * eps)
            result.errors[i] = relative_error(analytic, numeric)
            logger.debug(f"gradcheck input {i}: relative error {result.errors[i]:.2e}")
    return result
