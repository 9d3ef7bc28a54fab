"""Desk-scale networks: residual backbone, filter generator, heads and decoders."""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from ..errors import DimensionError, ParameterError
from ..tensor import BatchNorm, Conv2d, ConvTranspose2d, Linear, Module, Tensor, ops
from ..tensor.ops import conv_output_size

logger = logging.getLogger(__name__)

# (channels, stride) of each residual block; a split index k keeps blocks 1..k on the client
BLOCK_TABLE: Tuple[Tuple[int, int], ...] = ((8, 1), (16, 2), (16, 1), (32, 2), (32, 1), (64, 2), (64, 1))
MAX_SPLIT = len(BLOCK_TABLE)


def check_split_index(split_index: int) -> None:
    if not 1 <= split_index <= MAX_SPLIT:
        raise ParameterError(f"Split index must lie in 1..{MAX_SPLIT}, got {split_index}")


def split_shape(split_index: int, input_size: int) -> Tuple[int, int]:
    """(channels, spatial extent) of the activations after block ``split_index``."""
    check_split_index(split_index)
    size = input_size
    for _, stride in BLOCK_TABLE[:split_index]:
        size = conv_output_size(size, 3, stride, 1)
    return BLOCK_TABLE[split_index - 1][0], size


class ResidualBlock(Module):
    """relu(bn(conv3x3(x)) + shortcut(x)); the shortcut is a 1x1 conv when shapes change."""

    def __init__(self, in_channels: int, out_channels: int, stride: int,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.conv = Conv2d(in_channels, out_channels, 3, stride=stride, padding=1, bias=False, rng=rng)
        self.bn = BatchNorm(out_channels)
        self.shortcut = None
        if stride != 1 or in_channels != out_channels:
            self.shortcut = Conv2d(in_channels, out_channels, 1, stride=stride, bias=False, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        out = self.bn(self.conv(x))
        skip = x if self.shortcut is None else self.shortcut(x)
        return ops.relu(ops.add(out, skip))


def _blocks(first: int, last: int, in_channels: int, rng) -> List[ResidualBlock]:
    blocks = []
    channels = in_channels
    for out_channels, stride in BLOCK_TABLE[first:last]:
        blocks.append(ResidualBlock(channels, out_channels, stride, rng))
        channels = out_channels
    return blocks


class ClientNetwork(Module):
    """Blocks 1..k of the backbone."""

    def __init__(self, in_channels: int, split_index: int = 3,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        check_split_index(split_index)
        self.split_index = split_index
        self.in_channels = in_channels
        self.blocks = _blocks(0, split_index, in_channels, rng)

    @property
    def out_channels(self) -> int:
        return BLOCK_TABLE[self.split_index - 1][0]

    def forward(self, a: Tensor) -> Tensor:
        if a.ndim != 4 or a.shape[1] != self.in_channels:
            raise DimensionError(f"Client expects N x {self.in_channels} x H x W, got {a.shape}")
        out = a
        for block in self.blocks:
            out = block(out)
        return out


class FilterGenerator(Module):
    """Scores every channel of the client activations.

    Conv trunk, global pooling and a fully connected head whose width equals
    the activation channel count.
    """

    def __init__(self, channels: int, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.channels = channels
        self.conv = Conv2d(channels, channels, 3, padding=1, bias=False, rng=rng)
        self.bn = BatchNorm(channels)
        self.head = Linear(channels, channels, rng=rng)

    def forward(self, z_hat: Tensor) -> Tensor:
        if z_hat.ndim != 4 or z_hat.shape[1] != self.channels:
            raise DimensionError(f"Filter generator expects {self.channels} channels, got {z_hat.shape}")
        h = ops.relu(self.bn(self.conv(z_hat)))
        return self.head(ops.global_avg_pool(h))


class TaskNetwork(Module):
    """Server-side predictor: backbone blocks k+1..7, pooling, classifier."""

    def __init__(self, split_index: int, num_classes: int,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        check_split_index(split_index)
        if num_classes < 2:
            raise ParameterError(f"Need at least 2 task classes, got {num_classes}")
        in_channels = BLOCK_TABLE[split_index - 1][0]
        self.blocks = _blocks(split_index, MAX_SPLIT, in_channels, rng)
        width = BLOCK_TABLE[-1][0]
        self.classifier = Linear(width, num_classes, rng=rng, init_scale=0.1)

    def forward(self, z: Tensor) -> Tensor:
        out = z
        for block in self.blocks:
            out = block(out)
        return self.classifier(ops.global_avg_pool(out))


class LeakageClassifier(Module):
    """Two-layer perceptron over flattened activations.

    Serves as the attribute-inference proxy adversary during training and
    as the supervised attribute-leakage attack.
    """

    def __init__(self, in_features: int, num_classes: int, hidden: int = 64,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.hidden = Linear(in_features, hidden, rng=rng)
        self.out = Linear(hidden, num_classes, rng=rng, init_scale=0.1)

    def forward(self, z: Tensor) -> Tensor:
        flat = ops.flatten(z) if z.ndim > 2 else z
        return self.out(ops.relu(self.hidden(flat)))


class ReconstructionDecoder(Module):
    """Transpose-convolution decoder from activations back to a 3-channel image.

    Each upsampling stage doubles the extent, so the ratio between image and
    activation extent must be a power of two.
    """

    def __init__(self, in_channels: int, in_size: int, out_size: int, width: int = 32,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        if in_size < 1 or out_size % in_size:
            raise DimensionError(f"Cannot decode {in_size}x{in_size} activations to {out_size}x{out_size}")
        ratio = out_size // in_size
        stages = int(round(math.log2(ratio)))
        if 2 ** stages != ratio:
            raise DimensionError(f"Upsampling ratio {ratio} is not a power of two")
        self.in_channels = in_channels
        self.in_size = in_size
        self.out_size = out_size
        self.entry = Conv2d(in_channels, width, 3, padding=1, rng=rng)
        self.stages = [ConvTranspose2d(width, width, 2, stride=2, rng=rng) for _ in range(stages)]
        self.exit = Conv2d(width, 3, 3, padding=1, rng=rng)

    def forward(self, z: Tensor) -> Tensor:
        if z.ndim != 4 or z.shape[1:] != (self.in_channels, self.in_size, self.in_size):
            raise DimensionError(
                f"Decoder expects N x {self.in_channels} x {self.in_size} x {self.in_size}, got {z.shape}")
        h = ops.relu(self.entry(z))
        for stage in self.stages:
            h = ops.relu(stage(h))
        return ops.sigmoid(self.exit(h))


class ImagePrior(Module):
    """Generator of the likelihood-maximisation attack.

    A fixed noise input of shape 8 x H/4 x W/4 is upsampled by two
    transpose-convolution stages and mapped to an image in (0, 1).
    """

    buffer_names = ('noise',)

    def __init__(self, out_size: int, width: int = 16, rng: Optional[np.random.Generator] = None):
        super().__init__()
        if out_size % 4:
            raise DimensionError(f"Image prior needs an extent divisible by 4, got {out_size}")
        rng = rng or np.random.default_rng(0)
        seed_size = out_size // 4
        self.noise = rng.uniform(0.0, 1.0, size=(1, 8, seed_size, seed_size)).astype(np.float32)
        self.up1 = ConvTranspose2d(8, width, 2, stride=2, rng=rng)
        self.up2 = ConvTranspose2d(width, width, 2, stride=2, rng=rng)
        self.exit = Conv2d(width, 3, 3, padding=1, rng=rng)

    def forward(self) -> Tensor:
        h = ops.relu(self.up1(Tensor.constant(self.noise.astype(self.up1.weight.data.dtype))))
        h = ops.relu(self.up2(h))
        return ops.sigmoid(self.exit(h))
