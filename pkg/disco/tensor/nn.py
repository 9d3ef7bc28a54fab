"""Layer containers built on the differentiable ops."""

import contextlib
import hashlib
import logging
from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..errors import DimensionError, FormatError
from . import ops
from .core import Parameter, Tensor, default_dtype

logger = logging.getLogger(__name__)


def he_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(default_dtype())


class Module:
    """Base class for anything that owns parameters.

    Parameters are discovered from instance attributes (directly, in lists,
    or inside sub-modules) in attribute order, so names are stable across
    runs. Non-trainable state lives in ndarray attributes listed in
    ``buffer_names``.
    """

    buffer_names: Tuple[str, ...] = ()

    def __init__(self):
        self.training = True

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def _children(self) -> Iterator[Tuple[str, object]]:
        for name, value in vars(self).items():
            if isinstance(value, (Parameter, Module)):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, (Parameter, Module)):
                        yield f"{name}.{index}", item

    def named_parameters(self, prefix: str = '') -> Iterator[Tuple[str, Parameter]]:
        for name, value in self._children():
            if isinstance(value, Parameter):
                yield prefix + name, value
            else:
                yield from value.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_modules(self, prefix: str = '') -> Iterator[Tuple[str, 'Module']]:
        yield prefix.rstrip('.'), self
        for name, value in self._children():
            if isinstance(value, Module):
                yield from value.named_modules(f"{prefix}{name}.")

    def named_buffers(self, prefix: str = '') -> Iterator[Tuple[str, np.ndarray]]:
        for name in self.buffer_names:
            yield prefix + name, getattr(self, name)
        for name, value in self._children():
            if isinstance(value, Module):
                yield from value.named_buffers(f"{prefix}{name}.")

    def train(self, mode: bool = True) -> 'Module':
        for _, module in self.named_modules():
            module.training = mode
        return self

    def eval(self) -> 'Module':
        return self.train(False)

    @contextlib.contextmanager
    def evaluating(self) -> Iterator['Module']:
        """Switch to eval mode for the block, then restore each module's mode."""
        modes = [(module, module.training) for _, module in self.named_modules()]
        self.eval()
        try:
            yield self
        finally:
            for module, mode in modes:
                module.training = mode

    def requires_grad_(self, flag: bool = True) -> 'Module':
        for p in self.parameters():
            p.requires_grad = flag
        return self

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> 'OrderedDict[str, np.ndarray]':
        """Copies of every parameter and buffer, keyed by dotted name."""
        state = OrderedDict()
        for name, p in self.named_parameters():
            state[name] = p.data.copy()
        for name, buf in self.named_buffers():
            state[name] = buf.copy()
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Overwrite parameters and buffers in place."""
        targets = dict(self.named_parameters())
        buffers = dict(self.named_buffers())
        for name in list(targets) + list(buffers):
            if name not in state:
                raise FormatError(f"State has no entry for '{name}'")
        for name, p in targets.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise DimensionError(f"State entry '{name}' has shape {value.shape}, expected {p.shape}")
            p.data[...] = value
        for name, buf in buffers.items():
            value = np.asarray(state[name])
            if value.shape != buf.shape:
                raise DimensionError(f"State entry '{name}' has shape {value.shape}, expected {buf.shape}")
            buf[...] = value

    def checksum(self) -> str:
        """SHA-256 over the names and bytes of the state."""
        digest = hashlib.sha256()
        for name, value in self.state_dict().items():
            digest.update(name.encode('utf-8'))
            digest.update(np.ascontiguousarray(value).tobytes())
        return digest.hexdigest()

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 stride: int = 1, padding: int = 0, bias: bool = True,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel_size * kernel_size
        self.stride = stride
        self.padding = padding
        self.weight = Parameter(he_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in))
        self.bias = Parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class ConvTranspose2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 stride: int = 1, padding: int = 0, bias: bool = True,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        fan_in = max(in_channels * kernel_size * kernel_size // (stride * stride), 1)
        self.stride = stride
        self.padding = padding
        self.weight = Parameter(he_uniform(rng, (in_channels, out_channels, kernel_size, kernel_size), fan_in))
        self.bias = Parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.transpose_conv2d(x, self.weight, self.bias, self.stride, self.padding)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, bias: bool = True,
                 rng: Optional[np.random.Generator] = None, init_scale: float = 1.0):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        bound = init_scale / np.sqrt(in_features)
        self.weight = Parameter(rng.uniform(-bound, bound, size=(in_features, out_features)).astype(default_dtype()))
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class BatchNorm(Module):
    """Batch normalisation over NC or NCHW input.

    ``track_running_stats`` controls whether training-mode calls fold batch
    statistics into the running buffers.
    """

    buffer_names = ('running_mean', 'running_var')

    def __init__(self, num_features: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.track_running_stats = True
        self.gamma = Parameter(np.ones(num_features))
        self.beta = Parameter(np.zeros(num_features))
        self.running_mean = np.zeros(num_features, dtype=default_dtype())
        self.running_var = np.ones(num_features, dtype=default_dtype())

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm(x, self.gamma, self.beta, self.running_mean, self.running_var,
                              train_mode=self.training, momentum=self.momentum, eps=self.eps,
                              update_running=self.track_running_stats)
